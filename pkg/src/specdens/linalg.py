"""Dense complex eigensolver wrapper for the sampling path.

A thin validation layer over LAPACK's nonsymmetric solver (unitary
Hessenberg reduction followed by implicitly shifted QR with deflation).
Kept as its own seam so the sampling code has a single eigenvalue entry
point to cross-check: trace, determinant and characteristic-polynomial
tests pin this wrapper, and everything downstream trusts it.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidInputError

__all__ = ["as_complex_matrix", "eigenvalues"]

MAX_SIZE = 256


def as_complex_matrix(entries) -> np.ndarray:
    try:
        m = np.asarray(entries, dtype=np.complex128)
    except (TypeError, ValueError) as exc:
        raise InvalidInputError(f"not interpretable as a complex matrix: {exc}")
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
        raise InvalidInputError(f"need a nonempty square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m.view(np.float64))):
        raise InvalidInputError("matrix entries must be finite")
    return m


def eigenvalues(m) -> np.ndarray:
    """All eigenvalues of a square complex matrix, unordered."""
    m = as_complex_matrix(m)
    if m.shape[0] > MAX_SIZE:
        raise InvalidInputError(f"matrix size {m.shape[0]} exceeds the supported {MAX_SIZE}")
    return np.linalg.eigvals(m)
