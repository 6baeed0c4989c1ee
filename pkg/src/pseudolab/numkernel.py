"""Dense complex linear-algebra kernels.

Everything downstream reduces to four operations on square complex
matrices:

* ``solve_factored``          LU with partial pivoting, multiple right-hand sides
* ``smallest_singular_value`` inverse iteration on A*A through the LU factors
* ``largest_singular_value``  power iteration on A*A
* ``sv2x2``                   closed-form singular values of a 2x2 block

The iterative kernels are deterministic: all-ones start vectors, a fixed
iteration cap and a Rayleigh-quotient stagnation test.  When iteration
stalls (clustered extreme singular values) they fall back to a one-sided
Jacobi SVD, which converges quadratically and is accurate to roundoff.
No LAPACK-style library call appears on any of these paths; numpy is used
for array storage and vectorised arithmetic only.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

PIVOT_FLOOR = 1e-300
RAYLEIGH_TOL = 1e-12
ITERATION_CAP = 500
JACOBI_DIM_LIMIT = 512
JACOBI_SWEEP_CAP = 60


class SingularMatrixError(ArithmeticError):
    """Factorisation hit a pivot with magnitude <= 1e-300.

    Callers that compute resolvent norms map this to a norm of +inf; it is
    a signal, not a failure.
    """


class ConvergenceError(ArithmeticError):
    """Iteration stalled and the matrix is too large for the Jacobi fallback."""


class DimensionError(ValueError):
    """Input is not a finite square complex matrix of the expected shape."""


@dataclass(frozen=True)
class SingularExtremes:
    """Largest and smallest singular value of one matrix."""

    sigma_max: float
    sigma_min: float

    def __post_init__(self):
        if not (self.sigma_max >= self.sigma_min >= 0.0):
            raise DimensionError(
                f"singular extremes out of order: {self.sigma_max}, {self.sigma_min}"
            )


def as_square_matrix(a) -> np.ndarray:
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
        raise DimensionError(f"expected a nonempty square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m.view(np.float64))):
        raise DimensionError("matrix entries must be finite")
    return m


def lu_factor(a: np.ndarray):
    """Partial-pivot LU: returns (packed, piv) with P A = L U.

    ``packed`` holds U on and above the diagonal and the unit-lower L
    strictly below it; ``piv[k]`` is the row swapped into position k at
    step k.  Raises SingularMatrixError if any pivot magnitude <= 1e-300.
    """
    lu = np.array(a, dtype=np.complex128, order="C")
    n = lu.shape[0]
    piv = np.empty(n, dtype=np.int64)
    for k in range(n):
        p = k + int(np.argmax(np.abs(lu[k:, k])))
        piv[k] = p
        if p != k:
            lu[[k, p], :] = lu[[p, k], :]
        pivot = lu[k, k]
        if abs(pivot) <= PIVOT_FLOOR:
            raise SingularMatrixError(f"pivot {abs(pivot):.3e} at step {k}")
        if k + 1 < n:
            lu[k + 1 :, k] /= pivot
            lu[k + 1 :, k + 1 :] -= np.outer(lu[k + 1 :, k], lu[k, k + 1 :])
    return lu, piv


def _apply_piv(b: np.ndarray, piv: np.ndarray) -> np.ndarray:
    x = b.copy()
    for k in range(len(piv)):
        p = piv[k]
        if p != k:
            x[[k, p]] = x[[p, k]]
    return x


def _apply_piv_inverse(b: np.ndarray, piv: np.ndarray) -> np.ndarray:
    x = b.copy()
    for k in range(len(piv) - 1, -1, -1):
        p = piv[k]
        if p != k:
            x[[k, p]] = x[[p, k]]
    return x


def lu_solve(lu: np.ndarray, piv: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve A x = b given lu_factor output.  b may be a vector or matrix."""
    n = lu.shape[0]
    x = _apply_piv(np.asarray(b, dtype=np.complex128), piv)
    squeeze = x.ndim == 1
    if squeeze:
        x = x[:, None]
    for k in range(1, n):  # L y = P b, unit diagonal
        x[k] -= lu[k, :k] @ x[:k]
    for k in range(n - 1, -1, -1):  # U x = y
        if k + 1 < n:
            x[k] -= lu[k, k + 1 :] @ x[k + 1 :]
        x[k] /= lu[k, k]
    return x[:, 0] if squeeze else x


def lu_solve_adjoint(lu: np.ndarray, piv: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve A* x = b with the factors of A (A* = U* L* P)."""
    n = lu.shape[0]
    x = np.array(b, dtype=np.complex128)
    squeeze = x.ndim == 1
    if squeeze:
        x = x[:, None]
    uh = lu.conj()
    for k in range(n):  # U* w = b, lower triangular with diag conj(u_kk)
        if k > 0:
            x[k] -= uh[:k, k] @ x[:k]
        x[k] /= uh[k, k]
    for k in range(n - 1, -1, -1):  # L* v = w, unit upper triangular
        if k + 1 < n:
            x[k] -= uh[k + 1 :, k] @ x[k + 1 :]
    x = _apply_piv_inverse(x, piv)
    return x[:, 0] if squeeze else x


def solve_factored(a, b) -> np.ndarray:
    """Solve A X = B for square A; raises SingularMatrixError on tiny pivots."""
    m = as_square_matrix(a)
    rhs = np.asarray(b, dtype=np.complex128)
    if rhs.shape[0] != m.shape[0]:
        raise DimensionError(f"rhs rows {rhs.shape[0]} != matrix dim {m.shape[0]}")
    lu, piv = lu_factor(m)
    return lu_solve(lu, piv, rhs)


def jacobi_singular_values(a: np.ndarray) -> np.ndarray:
    """All singular values by one-sided Jacobi rotations, descending.

    Orthogonalises column pairs until every off-diagonal Gram entry is
    negligible; singular values are then the column norms.
    """
    w = np.array(a, dtype=np.complex128)
    if w.ndim != 2:
        raise DimensionError("jacobi needs a 2-d array")
    if w.shape[0] < w.shape[1]:
        w = w.conj().T
    n = w.shape[1]
    if n == 1:
        return np.array([float(np.linalg.norm(w[:, 0]))])
    for _ in range(JACOBI_SWEEP_CAP):
        rotated = False
        for p in range(n - 1):
            for q in range(p + 1, n):
                up = w[:, p].copy()
                uq = w[:, q]
                hpp = float(np.vdot(up, up).real)
                hqq = float(np.vdot(uq, uq).real)
                hpq = complex(np.vdot(up, uq))
                if hpp == 0.0 or hqq == 0.0:
                    continue
                if abs(hpq) <= 1e-15 * math.sqrt(hpp * hqq):
                    continue
                rotated = True
                phase = hpq / abs(hpq)
                tau = (hqq - hpp) / (2.0 * abs(hpq))
                t = math.copysign(1.0, tau) / (abs(tau) + math.hypot(1.0, tau))
                c = 1.0 / math.hypot(1.0, t)
                s = t * c
                vq = uq * phase.conjugate()
                w[:, p] = c * up - s * vq
                w[:, q] = (s * up + c * vq) * phase
        if not rotated:
            break
    sv = np.sqrt(np.sum(np.abs(w) ** 2, axis=0))
    sv.sort()
    return sv[::-1]


def _stalled(history: list, tol: float) -> bool:
    # Bail out only on sustained lack of progress: the best increment of the
    # last 24 steps failed to halve the best of the steps before them.  A
    # windowed rate estimate is too jumpy here; decay-rate crossovers in
    # clustered spectra produce short plateaus that look flat locally.
    if len(history) < 48:
        return False
    recent = min(history[-24:])
    if recent <= tol:
        return False
    return recent > 0.5 * min(history[:-24])


def smallest_singular_value(a) -> float:
    """Smallest singular value of a square complex matrix.

    Inverse iteration on A*A applied implicitly through the LU factors of
    A (one adjoint solve plus one direct solve per step).  Returns exactly
    0.0 when factorisation detects singularity.
    """
    m = as_square_matrix(a)
    n = m.shape[0]
    if n == 1:
        return abs(complex(m[0, 0]))
    try:
        lu, piv = lu_factor(m)
    except SingularMatrixError:
        return 0.0
    x = np.ones(n, dtype=np.complex128) / math.sqrt(n)
    rho_prev = None
    increments: list = []
    for _ in range(ITERATION_CAP):
        w = lu_solve_adjoint(lu, piv, x)
        y = lu_solve(lu, piv, w)
        rho = float(np.vdot(x, y).real)  # -> 1 / sigma_min^2
        nrm = float(np.linalg.norm(y))
        if rho <= 0.0 or nrm == 0.0 or not math.isfinite(nrm):
            break
        x = y / nrm
        if rho_prev is not None:
            inc = abs(rho - rho_prev)
            increments.append(inc)
            if inc <= RAYLEIGH_TOL * rho:
                return 1.0 / math.sqrt(rho)
            if _stalled(increments, RAYLEIGH_TOL * rho):
                break
        rho_prev = rho
    if n <= JACOBI_DIM_LIMIT:
        return float(jacobi_singular_values(m)[-1])
    raise ConvergenceError(f"inverse iteration stalled at dimension {n}")


def largest_singular_value(a) -> float:
    """Largest singular value (spectral norm); accepts any 2-d complex array."""
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2 or m.size == 0:
        raise DimensionError(f"expected a nonempty 2-d array, got shape {m.shape}")
    if not np.all(np.isfinite(m.view(np.float64))):
        raise DimensionError("matrix entries must be finite")
    ncols = m.shape[1]
    x = np.ones(ncols, dtype=np.complex128) / math.sqrt(ncols)
    rho_prev = None
    increments: list = []
    for _ in range(ITERATION_CAP):
        y = m @ x
        z = m.conj().T @ y
        rho = float(np.vdot(x, z).real)  # -> sigma_max^2
        nrm = float(np.linalg.norm(z))
        if nrm == 0.0:
            return 0.0
        x = z / nrm
        if rho_prev is not None:
            inc = abs(rho - rho_prev)
            increments.append(inc)
            if inc <= RAYLEIGH_TOL * max(rho, 1e-300):
                return math.sqrt(max(rho, 0.0))
            if _stalled(increments, RAYLEIGH_TOL * max(rho, 1e-300)):
                break
        rho_prev = rho
    if min(m.shape) <= JACOBI_DIM_LIMIT:
        return float(jacobi_singular_values(m)[0])
    raise ConvergenceError(f"power iteration stalled at shape {m.shape}")


def sv2x2(m) -> SingularExtremes:
    """Closed-form singular values of a 2x2 complex matrix.

    With F = sum |m_ij|^2 and D = |det M|^2 the squares are
    (F +- sqrt(F^2 - 4 D)) / 2.  The radicand equals
    (sigma_max^2 - sigma_min^2)^2 >= 0; tiny negative values down to
    -1e-14 F^2 are roundoff and are clamped to zero.
    """
    a = np.asarray(m, dtype=np.complex128)
    if a.shape != (2, 2):
        raise DimensionError(f"sv2x2 expects shape (2, 2), got {a.shape}")
    if not np.all(np.isfinite(a.view(np.float64))):
        raise DimensionError("matrix entries must be finite")
    f = float(np.sum(np.abs(a) ** 2))
    det = a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]
    d = float(abs(det)) ** 2
    rad = f * f - 4.0 * d
    if rad < 0.0:
        if rad < -1e-14 * f * f:
            raise ArithmeticError(f"sv2x2 radicand {rad:.3e} below clamp threshold")
        rad = 0.0
    root = math.sqrt(rad)
    hi = math.sqrt((f + root) / 2.0)
    lo_sq = (f - root) / 2.0
    lo = math.sqrt(lo_sq) if lo_sq > 0.0 else 0.0
    return SingularExtremes(sigma_max=hi, sigma_min=min(lo, hi))


def sv2x2_batch(m00, m01, m10, m11):
    """Vectorised sv2x2 over aligned arrays of entries.

    Returns (sigma_max, sigma_min) float arrays.  Used by the block-family
    scans, where millions of 2x2 blocks may be evaluated per call.
    """
    a, b = np.asarray(m00, dtype=np.complex128), np.asarray(m01, dtype=np.complex128)
    c, d = np.asarray(m10, dtype=np.complex128), np.asarray(m11, dtype=np.complex128)
    f = (np.abs(a) ** 2 + np.abs(b) ** 2 + np.abs(c) ** 2 + np.abs(d) ** 2).astype(float)
    det = a * d - b * c
    dd = np.abs(det).astype(float) ** 2
    rad = np.maximum(f * f - 4.0 * dd, 0.0)
    root = np.sqrt(rad)
    hi = np.sqrt((f + root) / 2.0)
    lo = np.sqrt(np.maximum((f - root) / 2.0, 0.0))
    return hi, lo
