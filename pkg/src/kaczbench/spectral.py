"""Extreme singular values of A and the optimal averaging weight.

``sigma_max`` comes from power iteration on ``A^T A`` and ``sigma_min``
from inverse power iteration, with each inverse step solved matrix-free by
conjugate gradient on the normal-equations operator.  The normalized
extremes ``s = sigma^2 / ||A||_F^2`` feed the closed-form optimal uniform
weight ``optimal_alpha`` for the averaging solver on consistent systems.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError, SpectralConvergenceError
from .linalg import row_norm_cache
from .sampling import Prng, partition_bounds

__all__ = ["SpectralStats", "optimal_alpha", "partial_alphas", "spectral_stats"]

# Fixed internal stream for start vectors, so the estimates themselves are
# deterministic functions of the matrix.
_START_SEED = 0x5EED


@dataclass(frozen=True)
class SpectralStats:
    sigma_max: float
    sigma_min: float
    s_min: float  # sigma_min^2 / ||A||_F^2
    s_max: float  # sigma_max^2 / ||A||_F^2


def _cg_normal(a, z, rel_tol, max_it):
    """Solve (A^T A) y = z by CG with products against A and A^T only."""
    n = a.shape[1]
    y = np.zeros(n)
    r = z.copy()
    p = r.copy()
    rs = float(np.dot(r, r))
    stop = (rel_tol * np.linalg.norm(z)) ** 2
    for _ in range(max_it):
        if rs <= stop:
            return y, True
        mp = a.T @ (a @ p)
        denom = float(np.dot(p, mp))
        if denom <= 0.0:
            return y, False
        alpha = rs / denom
        y += alpha * p
        r -= alpha * mp
        rs_new = float(np.dot(r, r))
        p *= rs_new / rs
        p += r
        rs = rs_new
    return y, rs <= stop


def _rayleigh(a, v):
    """v^T (A^T A) v for unit v, i.e. ||A v||^2."""
    av = a @ v
    return float(np.dot(av, av))


def spectral_stats(a: np.ndarray, tol: float = 1e-6, max_it: int = 5000) -> SpectralStats:
    """Estimate the extreme singular values of a full-column-rank matrix."""
    m, n = a.shape
    fro_sq = row_norm_cache(a).frobenius_sq

    # Largest: power iteration on A^T A.
    v = Prng(_START_SEED, 0).standard_normal(n)
    v /= np.linalg.norm(v)
    lam = _rayleigh(a, v)
    converged = False
    for _ in range(max_it):
        w = a.T @ (a @ v)
        nw = float(np.linalg.norm(w))
        if nw == 0.0:
            raise SpectralConvergenceError("sigma_max", "power iteration hit a null vector")
        v = w / nw
        lam_new = _rayleigh(a, v)
        if abs(lam_new - lam) <= tol * lam_new:
            lam = lam_new
            converged = True
            break
        lam = lam_new
    if not converged:
        raise SpectralConvergenceError("sigma_max")
    lam_max = lam

    # Smallest: inverse power iteration, each step a matrix-free CG solve.
    cg_max = 20 * n + 200
    v = Prng(_START_SEED, 1).standard_normal(n)
    v /= np.linalg.norm(v)
    theta = _rayleigh(a, v)
    converged = False
    for it in range(max_it):
        y, ok = _cg_normal(a, v, tol, cg_max)
        if not ok:
            raise SpectralConvergenceError("sigma_min", "inner CG solve failed")
        ny = float(np.linalg.norm(y))
        if ny == 0.0:
            raise SpectralConvergenceError("sigma_min", "inverse iteration collapsed")
        v = y / ny
        theta_new = _rayleigh(a, v)
        if it >= 2 and abs(theta_new - theta) <= tol * theta_new:
            theta = theta_new
            converged = True
            break
        theta = theta_new
    if not converged:
        raise SpectralConvergenceError("sigma_min")
    lam_min = theta

    return SpectralStats(
        sigma_max=float(np.sqrt(lam_max)),
        sigma_min=float(np.sqrt(lam_min)),
        s_min=lam_min / fro_sq,
        s_max=lam_max / fro_sq,
    )


def optimal_alpha(stats: SpectralStats, q: int) -> float:
    """Optimal uniform row weight for q-fold averaging on consistent systems.

    With one worker the gap condition holds vacuously and the value is 1.
    """
    if q < 1:
        raise ValueError(f"q must be >= 1, got {q}")
    s_min, s_max = stats.s_min, stats.s_max
    if q == 1 or (s_max - s_min) <= 1.0 / (q - 1):
        return q / (1.0 + (q - 1) * s_min)
    return 2.0 * q / (1.0 + (q - 1) * (s_min + s_max))


def partial_alphas(a: np.ndarray, q: int) -> np.ndarray:
    """Per-worker weights, each computed from that worker's block of rows.

    Worker t owns the contiguous block ``floor(t*m/q) .. floor((t+1)*m/q)-1``
    and runs the spectral estimate on its block alone.  Every block must
    still have at least as many rows as columns.
    """
    m, n = a.shape
    if q > m:
        raise ValueError(f"q={q} exceeds row count m={m}")
    alphas = np.empty(q)
    for t in range(q):
        lo, hi = partition_bounds(m, q, t)
        if hi - lo + 1 < n:
            raise DimensionMismatchError(
                f"worker {t} block has {hi - lo + 1} rows < {n} columns; "
                f"its spectral estimate would be rank deficient"
            )
        alphas[t] = optimal_alpha(spectral_stats(a[lo : hi + 1]), q)
    return alphas
