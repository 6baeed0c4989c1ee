"""Resolvent-norm fields on rectangular grids and their level sets.

A NormField samples z -> ||(T - z)^-2^n||^(1/2^n) on an axis-aligned
lattice.  Level sets at a threshold 1/eps give the two discrete
pseudospectrum flavours: the open one (strict inequality) and the closed
one (non-strict).  The closure check compares the closed mask against a
one-cell dilation of the open mask; true topological closures are not
lattice-representable, so every verdict carries the resolution it was
reached at.

Fields serialize to CSV as `re,im,value` rows (row-major, real axis
outer, `inf` literal for unbounded values) and masks as `re,im,member`
with member in {0,1}.
"""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DomainError
from .operators import DenseOperator, DiagBlockFamily, ScaledOperator, TruncatedFamily
from .resolvent import TAIL_TOL_DEFAULT, resolvent_power_norm

STRICTNESS_MODES = ("open_sigma", "closed_Sigma")

# Tail-scan budgets for infinite families during field sweeps.  The 4x4
# family refines interior singular values per point and is priced
# accordingly; reported values stay certified lower bounds either way.
FIELD_MAX_BLOCKS = {2: 20000, 4: 256}

DEFAULT_GRID_POINTS = 101


def _worker_count(workers: int | None) -> int:
    if workers is None:
        raw = os.environ.get("PSEUDOLAB_THREADS", "").strip()
        if raw:
            try:
                workers = int(raw)
            except ValueError:
                raise ConfigurationError(
                    f"PSEUDOLAB_THREADS must be an integer, got {raw!r}"
                ) from None
        else:
            workers = 0
    if workers == 0:
        return min(8, os.cpu_count() or 1)
    if workers < 0:
        raise ConfigurationError("worker count must be nonnegative")
    return workers


@dataclass(frozen=True)
class GridRegion:
    """Axis-aligned window [re_min, re_max] x [im_min, im_max] sampled on
    an nx-by-ny lattice including both endpoints."""

    re_min: float
    re_max: float
    im_min: float
    im_max: float
    nx: int = DEFAULT_GRID_POINTS
    ny: int = DEFAULT_GRID_POINTS

    def __post_init__(self):
        for name in ("re_min", "re_max", "im_min", "im_max"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ConfigurationError(f"{name} must be finite")
        if not self.re_min < self.re_max:
            raise ConfigurationError("region needs re_min < re_max")
        if not self.im_min < self.im_max:
            raise ConfigurationError("region needs im_min < im_max")
        if self.nx < 2 or self.ny < 2:
            raise ConfigurationError("grid needs at least 2 points per axis")

    @property
    def hx(self) -> float:
        return (self.re_max - self.re_min) / (self.nx - 1)

    @property
    def hy(self) -> float:
        return (self.im_max - self.im_min) / (self.ny - 1)

    def point(self, i: int, j: int) -> complex:
        if not (0 <= i < self.nx and 0 <= j < self.ny):
            raise DomainError(f"lattice index ({i},{j}) outside grid")
        return complex(self.re_min + i * self.hx, self.im_min + j * self.hy)

    def lattice(self) -> np.ndarray:
        """All lattice points as an (nx, ny) complex array."""
        re = self.re_min + self.hx * np.arange(self.nx)
        im = self.im_min + self.hy * np.arange(self.ny)
        return re[:, None] + 1j * im[None, :]


def region_with_step(re_min, re_max, im_min, im_max, h) -> GridRegion:
    """Region whose lattice step is h on both axes.

    The extents must be integer multiples of h (within roundoff); the
    step is not silently adjusted.
    """
    if h <= 0:
        raise ConfigurationError("step must be positive")
    counts = []
    for lo, hi in ((re_min, re_max), (im_min, im_max)):
        steps = (hi - lo) / h
        if abs(steps - round(steps)) > 1e-9 * max(1.0, abs(steps)):
            raise ConfigurationError(
                f"extent [{lo},{hi}] is not a multiple of step {h}"
            )
        counts.append(int(round(steps)) + 1)
    return GridRegion(re_min, re_max, im_min, im_max, counts[0], counts[1])


def _readonly(a: np.ndarray) -> np.ndarray:
    out = np.array(a, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class NormField:
    """Sampled values of z -> ||(T - z)^-2^n||^(1/2^n) on a region."""

    region: GridRegion
    n: int
    values: np.ndarray

    def __post_init__(self):
        vals = _readonly(np.asarray(self.values, dtype=float))
        if vals.shape != (self.region.nx, self.region.ny):
            raise DomainError(
                f"values shape {vals.shape} does not match grid "
                f"({self.region.nx}, {self.region.ny})"
            )
        if np.isnan(vals).any() or (vals <= 0.0).any():
            raise DomainError("field values must be positive (inf allowed)")
        object.__setattr__(self, "values", vals)
        if self.n < 0:
            raise DomainError("power index must be nonnegative")


@dataclass(frozen=True)
class LevelSetMask:
    """Boolean membership lattice for one level set of a NormField."""

    region: GridRegion
    epsilon: float
    n: int
    strictness: str
    mask: np.ndarray

    def __post_init__(self):
        if self.strictness not in STRICTNESS_MODES:
            raise ConfigurationError(
                f"strictness must be one of {STRICTNESS_MODES}, "
                f"got {self.strictness!r}"
            )
        if not (self.epsilon > 0.0 and math.isfinite(self.epsilon)):
            raise DomainError("epsilon must be positive and finite")
        m = _readonly(np.asarray(self.mask, dtype=bool))
        if m.shape != (self.region.nx, self.region.ny):
            raise DomainError("mask shape does not match grid")
        object.__setattr__(self, "mask", m)


@dataclass(frozen=True)
class AssumptionCheck:
    """Resolution-stamped verdict of the discrete closure comparison."""

    holds_at_resolution: bool
    witness: tuple | None
    witness_z: complex | None
    epsilon: float
    hx: float
    hy: float


def _diagonal_of(model):
    # exact structural test, not a tolerance check
    if isinstance(model, DenseOperator):
        m = model.matrix
        if np.count_nonzero(m - np.diag(np.diagonal(m))) == 0:
            return np.diagonal(m)
    return None


def _pointwise_values(model, zs, n, tail_tol, max_blocks, workers):
    def at(z):
        return resolvent_power_norm(
            model, complex(z), n, tail_tol=tail_tol, max_blocks=max_blocks
        ).value

    k = _worker_count(workers)
    if k <= 1 or len(zs) < 64:
        return np.array([at(z) for z in zs])
    chunks = np.array_split(np.arange(len(zs)), k * 4)
    out = np.empty(len(zs))
    with ThreadPoolExecutor(max_workers=k) as pool:
        def run(idx):
            return idx, [at(zs[i]) for i in idx]

        for idx, vals in pool.map(run, chunks):
            out[idx] = vals
    return out


def _field_values(model, zs, n, tail_tol, max_blocks, workers):
    diag = _diagonal_of(model)
    if diag is not None:
        # normal matrix: every power norm collapses to inverse distance
        dists = np.abs(zs[:, None] - diag[None, :]).min(axis=1)
        with np.errstate(divide="ignore"):
            return np.divide(1.0, dists)
    if isinstance(model, ScaledOperator):
        s = complex(model.factor)
        inner = _field_values(model.inner, zs / s, n, tail_tol, max_blocks, workers)
        return inner / abs(s)
    if max_blocks is None and isinstance(model, DiagBlockFamily):
        max_blocks = FIELD_MAX_BLOCKS[model.block_dim]
    if max_blocks is None:
        max_blocks = 10**6
    return _pointwise_values(model, zs, n, tail_tol, max_blocks, workers)


def compute_norm_field(
    model,
    region: GridRegion,
    n: int = 0,
    *,
    tail_tol: float = TAIL_TOL_DEFAULT,
    max_blocks: int | None = None,
    workers: int | None = None,
) -> NormField:
    """Sample the resolvent power norm of model at every lattice point.

    Each cell depends only on (model, z, n), so the result is identical
    for any worker count.  max_blocks bounds the tail scan for infinite
    families; the per-shape defaults keep full-window sweeps affordable
    while the reported values remain certified lower bounds.
    """
    zs = region.lattice().ravel()
    vals = _field_values(model, zs, n, tail_tol, max_blocks, workers)
    return NormField(region, n, vals.reshape(region.nx, region.ny))


def level_set(field: NormField, epsilon: float, strictness: str) -> LevelSetMask:
    """Threshold a field at 1/epsilon.

    open_sigma keeps cells with value > 1/epsilon, closed_Sigma those
    with value >= 1/epsilon; unbounded cells belong to both.
    """
    if strictness not in STRICTNESS_MODES:
        raise ConfigurationError(
            f"strictness must be one of {STRICTNESS_MODES}, got {strictness!r}"
        )
    if not (epsilon > 0.0 and math.isfinite(epsilon)):
        raise DomainError("epsilon must be positive and finite")
    threshold = 1.0 / epsilon
    if strictness == "open_sigma":
        mask = field.values > threshold
    else:
        mask = field.values >= threshold
    return LevelSetMask(field.region, epsilon, field.n, strictness, mask)


def dilate_one_cell(mask: np.ndarray) -> np.ndarray:
    """Morphological dilation by the 8-neighborhood (plus the cell itself)."""
    m = np.asarray(mask, dtype=bool)
    nx, ny = m.shape
    padded = np.zeros((nx + 2, ny + 2), dtype=bool)
    padded[1:-1, 1:-1] = m
    out = np.zeros_like(m)
    for di in range(3):
        for dj in range(3):
            out |= padded[di : di + nx, dj : dj + ny]
    return out


def assumption_i_check(field: NormField, epsilon: float) -> AssumptionCheck:
    """Discrete closure comparison on the field's window.

    The closed mask stands in for the closure of the open level set
    intersected with the window; the check accepts when it is nonempty
    and every closed cell lies within one cell of the open mask.  A
    closed cell with no open neighbor witnesses a part of the level set
    that meets the window without being approximable from inside it.
    """
    open_mask = level_set(field, epsilon, "open_sigma").mask
    closed_mask = level_set(field, epsilon, "closed_Sigma").mask
    hx, hy = field.region.hx, field.region.hy
    if not closed_mask.any():
        return AssumptionCheck(False, None, None, epsilon, hx, hy)
    stray = closed_mask & ~dilate_one_cell(open_mask)
    if stray.any():
        i, j = np.argwhere(stray)[0]  # row-major: first differing cell
        return AssumptionCheck(
            False, (int(i), int(j)), field.region.point(int(i), int(j)), epsilon, hx, hy
        )
    return AssumptionCheck(True, None, None, epsilon, hx, hy)


def _format(v: float) -> str:
    if math.isinf(v):
        return "inf"
    return repr(float(v))


def write_field_csv(field: NormField, fp) -> None:
    """Write `re,im,value` rows, row-major with the real axis outer."""
    w = csv.writer(fp, lineterminator="\n")
    w.writerow(["re", "im", "value"])
    region = field.region
    for i in range(region.nx):
        re = region.re_min + i * region.hx
        for j in range(region.ny):
            im = region.im_min + j * region.hy
            w.writerow([repr(re), repr(im), _format(field.values[i, j])])


def write_mask_csv(mask: LevelSetMask, fp) -> None:
    """Write `re,im,member` rows in the same order as field CSVs."""
    w = csv.writer(fp, lineterminator="\n")
    w.writerow(["re", "im", "member"])
    region = mask.region
    for i in range(region.nx):
        re = region.re_min + i * region.hx
        for j in range(region.ny):
            im = region.im_min + j * region.hy
            w.writerow([repr(re), repr(im), "1" if mask.mask[i, j] else "0"])


def _read_rows(fp, header):
    reader = csv.reader(fp)
    try:
        first = next(reader)
    except StopIteration:
        raise ConfigurationError("empty CSV input") from None
    if [c.strip() for c in first] != header:
        raise ConfigurationError(
            f"expected header {','.join(header)}, got {','.join(first)}"
        )
    rows = []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != 3:
            raise ConfigurationError(f"line {lineno}: expected 3 columns")
        try:
            rows.append((float(row[0]), float(row[1]), float(row[2])))
        except ValueError:
            raise ConfigurationError(f"line {lineno}: malformed number") from None
    if not rows:
        raise ConfigurationError("CSV holds no data rows")
    return rows


def _region_from_rows(rows) -> GridRegion:
    # row-major with re outer: the leading run of equal re values fixes ny
    re0 = rows[0][0]
    ny = 1
    while ny < len(rows) and rows[ny][0] == re0:
        ny += 1
    if ny < 2 or len(rows) % ny != 0:
        raise ConfigurationError("CSV rows do not form a full lattice")
    nx = len(rows) // ny
    if nx < 2:
        raise ConfigurationError("CSV lattice needs at least 2 rows per axis")
    res = [rows[i * ny][0] for i in range(nx)]
    ims = [rows[j][1] for j in range(ny)]
    region = GridRegion(res[0], res[-1], ims[0], ims[-1], nx, ny)
    scale = max(abs(res[-1] - res[0]), abs(ims[-1] - ims[0]), 1.0)
    for i in range(nx):
        for j in range(ny):
            re, im, _ = rows[i * ny + j]
            want = region.point(i, j)
            if abs(re - want.real) + abs(im - want.imag) > 1e-9 * scale:
                raise ConfigurationError(
                    f"row {i * ny + j + 2}: lattice point ({re},{im}) is not "
                    "on a uniform grid"
                )
    return region


def read_field_csv(fp, n: int = 0) -> NormField:
    """Rebuild a NormField from `re,im,value` rows.

    The power index is not stored in the CSV; pass n when it matters.
    """
    rows = _read_rows(fp, ["re", "im", "value"])
    region = _region_from_rows(rows)
    vals = np.array([r[2] for r in rows]).reshape(region.nx, region.ny)
    return NormField(region, n, vals)


def read_mask_csv(fp, epsilon: float = 1.0, n: int = 0, strictness: str = "closed_Sigma") -> LevelSetMask:
    """Rebuild a LevelSetMask from `re,im,member` rows.

    epsilon, n and strictness are not stored in the CSV; the defaults
    only label the returned object.
    """
    rows = _read_rows(fp, ["re", "im", "member"])
    region = _region_from_rows(rows)
    flags = []
    for re, im, v in rows:
        if v not in (0.0, 1.0):
            raise ConfigurationError(f"member flag must be 0 or 1, got {v}")
        flags.append(bool(v))
    mask = np.array(flags, dtype=bool).reshape(region.nx, region.ny)
    return LevelSetMask(region, epsilon, n, strictness, mask)
