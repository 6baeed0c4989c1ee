"""Metric geometry on lattice masks.

Masks are finite point sets in the plane: the member cells of a level
set at their lattice coordinates.  Distances are Euclidean between cell
centers, so every quantity inherits the grid's h-level discretization
error; callers budget for that explicitly.

Directed distances run as a direct double loop while both sets hold at
most BRUTE_FORCE_LIMIT points, and switch to a bucketed nearest-neighbor
grid beyond that.  Both routes are deterministic, which makes Hausdorff
symmetry exact rather than approximate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DomainError
from .pseudospectra import GridRegion, LevelSetMask

BRUTE_FORCE_LIMIT = 10**4

# chunk rows of the brute-force distance table to bound peak memory
_BRUTE_CHUNK_ENTRIES = 2**22


@dataclass(frozen=True)
class MaskSet:
    """Member cells of a lattice mask as a point set in the plane."""

    region: GridRegion
    mask: np.ndarray

    def __post_init__(self):
        m = np.array(np.asarray(self.mask, dtype=bool), copy=True)
        if m.shape != (self.region.nx, self.region.ny):
            raise DomainError("mask shape does not match grid")
        m.setflags(write=False)
        object.__setattr__(self, "mask", m)

    @classmethod
    def from_level_set(cls, level: LevelSetMask) -> "MaskSet":
        return cls(level.region, level.mask)

    @classmethod
    def from_points(cls, region: GridRegion, points) -> "MaskSet":
        """Mask with exactly the given lattice points set.

        Points must sit on the region's lattice; nothing is snapped.
        """
        mask = np.zeros((region.nx, region.ny), dtype=bool)
        scale = max(region.hx, region.hy)
        for p in points:
            z = complex(p)
            i = round((z.real - region.re_min) / region.hx)
            j = round((z.imag - region.im_min) / region.hy)
            if not (0 <= i < region.nx and 0 <= j < region.ny):
                raise ConfigurationError(f"point {z} lies outside the region")
            on_grid = region.point(i, j)
            if abs(z - on_grid) > 1e-9 * scale:
                raise ConfigurationError(f"point {z} is not on the lattice")
            mask[i, j] = True
        return cls(region, mask)

    @property
    def size(self) -> int:
        return int(self.mask.sum())

    def points(self) -> np.ndarray:
        """Member coordinates as a flat complex array, row-major."""
        return self.region.lattice()[self.mask]


def _min_dists_brute(queries: np.ndarray, targets: np.ndarray) -> np.ndarray:
    out = np.empty(len(queries))
    step = max(1, _BRUTE_CHUNK_ENTRIES // max(1, len(targets)))
    for start in range(0, len(queries), step):
        block = queries[start : start + step]
        out[start : start + len(block)] = np.abs(
            block[:, None] - targets[None, :]
        ).min(axis=1)
    return out


def _min_dists_bucketed(queries, targets, cell: float) -> np.ndarray:
    buckets: dict = {}
    kx = np.floor(targets.real / cell).astype(int)
    ky = np.floor(targets.imag / cell).astype(int)
    for idx in range(len(targets)):
        buckets.setdefault((kx[idx], ky[idx]), []).append(targets[idx])
    buckets = {k: np.array(v) for k, v in buckets.items()}

    out = np.empty(len(queries))
    for qi, q in enumerate(queries):
        cx = math.floor(q.real / cell)
        cy = math.floor(q.imag / cell)
        best = math.inf
        ring = 0
        while True:
            # any point in a cell at Chebyshev ring r is at least (r-1)*cell away
            if ring > 0 and (ring - 1) * cell > best:
                break
            hits = []
            if ring == 0:
                keys = [(cx, cy)]
            else:
                keys = [(cx + dx, cy - ring) for dx in range(-ring, ring + 1)]
                keys += [(cx + dx, cy + ring) for dx in range(-ring, ring + 1)]
                keys += [(cx - ring, cy + dy) for dy in range(-ring + 1, ring)]
                keys += [(cx + ring, cy + dy) for dy in range(-ring + 1, ring)]
            for key in keys:
                pts = buckets.get(key)
                if pts is not None:
                    hits.append(np.abs(pts - q).min())
            if hits:
                best = min(best, min(hits))
            ring += 1
        out[qi] = best
    return out


def _min_dists(queries, targets, cell: float) -> np.ndarray:
    if len(queries) == 0:
        return np.empty(0)
    if len(queries) <= BRUTE_FORCE_LIMIT and len(targets) <= BRUTE_FORCE_LIMIT:
        return _min_dists_brute(queries, targets)
    return _min_dists_bucketed(queries, targets, cell)


def _nonempty_points(side: str, s: MaskSet) -> np.ndarray:
    pts = s.points()
    if len(pts) == 0:
        raise DomainError(
            f"hausdorff distance needs non-empty sets; the {side} mask is empty"
        )
    return pts


def hausdorff_distance(a: MaskSet, b: MaskSet) -> float:
    """max of the two directed sup-min distances between the point sets."""
    pa = _nonempty_points("first", a)
    pb = _nonempty_points("second", b)
    cell_b = max(b.region.hx, b.region.hy)
    cell_a = max(a.region.hx, a.region.hy)
    d_ab = float(_min_dists(pa, pb, cell_b).max())
    d_ba = float(_min_dists(pb, pa, cell_a).max())
    return max(d_ab, d_ba)


def delta_neighborhood(a: MaskSet, delta: float) -> MaskSet:
    """Closed delta-neighborhood of the mask on its own lattice.

    A lattice point belongs iff its distance to some member is <= delta,
    compared exactly (no tolerance padding).
    """
    if not (delta > 0.0 and math.isfinite(delta)):
        raise DomainError("delta must be positive and finite")
    pts = a.points()
    if len(pts) == 0:
        raise DomainError("delta neighborhood of an empty mask")
    queries = a.region.lattice().ravel()
    cell = max(a.region.hx, a.region.hy)
    dists = _min_dists(queries, pts, cell)
    mask = (dists <= delta).reshape(a.region.nx, a.region.ny)
    return MaskSet(a.region, mask)
