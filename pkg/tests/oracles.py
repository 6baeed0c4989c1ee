"""Independent reference computations for the test suite.

Every expected value asserted in the tests either comes from a hand
calculation frozen into the test file, or from one of these oracles.
They are deliberately built on LAPACK-backed numpy decompositions
(eigh, eigvals) so that they share no code path with the iterative
kernels in the package.
"""
from __future__ import annotations

import numpy as np


def singular_values_oracle(a) -> np.ndarray:
    """All singular values, descending, via the eigendecomposition of A*A."""
    m = np.asarray(a, dtype=np.complex128)
    gram = m.conj().T @ m
    evals = np.linalg.eigh(gram)[0]
    evals = np.clip(evals, 0.0, None)
    return np.sqrt(evals)[::-1]


def spectral_norm_oracle(a) -> float:
    return float(singular_values_oracle(a)[0])


def smallest_sv_oracle(a) -> float:
    return float(singular_values_oracle(a)[-1])


def resolvent_norm_oracle(a, z: complex) -> float:
    """||(A - z)^-1|| for a dense matrix, via the SVD oracle; inf if singular."""
    m = np.asarray(a, dtype=np.complex128)
    shifted = m - z * np.eye(m.shape[0])
    smin = smallest_sv_oracle(shifted)
    if smin == 0.0:
        return float("inf")
    return 1.0 / smin


def resolvent_power_norm_oracle(a, z: complex, n: int) -> float:
    """||(A - z)^-2^n||^(1 / 2^n) via explicit inverse and the SVD oracle."""
    m = np.asarray(a, dtype=np.complex128)
    shifted = m - z * np.eye(m.shape[0])
    smin = smallest_sv_oracle(shifted)
    if smin == 0.0:
        return float("inf")
    inv = np.linalg.inv(shifted)
    power = np.linalg.matrix_power(inv, 2**n)
    return spectral_norm_oracle(power) ** (1.0 / 2**n)


def eigenvalues_oracle(a) -> np.ndarray:
    return np.linalg.eigvals(np.asarray(a, dtype=np.complex128))


def random_complex_matrix(rng: np.random.Generator, n: int, scale: float = 1.0):
    return scale * (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))
