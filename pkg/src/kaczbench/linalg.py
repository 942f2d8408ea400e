"""Dense row-major kernels shared by every solver.

Matrices are 2-D C-contiguous float64 arrays (one row per equation) and
vectors are 1-D float64 arrays.  All solvers in this package compute row
inner products through :func:`dot` / ``np.dot`` on 1-D views and apply
updates through :func:`axpy_row`, so the arithmetic of a single projection
is identical everywhere.  That shared arithmetic is what makes the exact
reduction identities between solver variants (averaging with one worker
equals plain randomized Kaczmarz, and so on) hold bitwise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateRowError, DimensionMismatchError

__all__ = [
    "RowNormCache",
    "as_matrix",
    "as_vector",
    "axpy_row",
    "dot",
    "row_norm_cache",
]


def as_matrix(a) -> np.ndarray:
    """Validate and return ``a`` as an m-by-n C-contiguous float64 matrix."""
    a = np.ascontiguousarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise DimensionMismatchError(f"expected a 2-D matrix, got ndim={a.ndim}")
    if a.shape[0] < 1 or a.shape[1] < 1:
        raise DimensionMismatchError(f"matrix dimensions must be >= 1, got {a.shape}")
    return a


def as_vector(v, length: int | None = None) -> np.ndarray:
    """Validate and return ``v`` as a contiguous float64 vector."""
    v = np.ascontiguousarray(v, dtype=np.float64)
    if v.ndim != 1:
        raise DimensionMismatchError(f"expected a 1-D vector, got ndim={v.ndim}")
    if length is not None and v.shape[0] != length:
        raise DimensionMismatchError(f"expected length {length}, got {v.shape[0]}")
    return v


def dot(u: np.ndarray, v: np.ndarray) -> float:
    """Inner product of two equal-length vectors."""
    if u.shape != v.shape:
        raise DimensionMismatchError(f"dot: lengths differ, {u.shape} vs {v.shape}")
    return float(np.dot(u, v))


def axpy_row(x: np.ndarray, scale: float, row: np.ndarray) -> None:
    """In place ``x += scale * row``."""
    if x.shape != row.shape:
        raise DimensionMismatchError(f"axpy_row: lengths differ, {x.shape} vs {row.shape}")
    x += scale * row


@dataclass(frozen=True)
class RowNormCache:
    """Squared row norms of a matrix plus their total (squared Frobenius norm).

    Construction rejects zero rows: both the row-sampling distribution and
    the projection denominator divide by the squared row norm.
    """

    sq_norms: np.ndarray
    frobenius_sq: float

    @property
    def m(self) -> int:
        return self.sq_norms.shape[0]


def row_norm_cache(a: np.ndarray) -> RowNormCache:
    """Compute per-row squared norms of ``a``; raise on any zero row."""
    a = as_matrix(a)
    sq_norms = np.einsum("ij,ij->i", a, a)
    zero = np.flatnonzero(sq_norms == 0.0)
    if zero.size:
        raise DegenerateRowError(int(zero[0]))
    sq_norms.flags.writeable = False
    return RowNormCache(sq_norms=sq_norms, frobenius_sq=float(sq_norms.sum()))
