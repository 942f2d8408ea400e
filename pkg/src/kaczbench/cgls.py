"""Conjugate gradient for least squares, used as the reference solver.

Works on the normal equations ``A^T A x = A^T b`` without ever forming
``A^T A``; each iteration costs one product with A and one with A^T.  For a
full-column-rank A this converges to the least-squares solution, which is
the reference point for the convergence-horizon experiments.
"""

from __future__ import annotations

import numpy as np

from .errors import ConvergenceError

__all__ = ["cgls_solve"]


def _cgls_pass(a, b, x, abs_tol, max_it):
    """Run CGLS from ``x`` until ``||A^T r|| <= abs_tol``; return (x, used, ok)."""
    r = b - a @ x
    s = a.T @ r
    p = s.copy()
    gamma = float(np.dot(s, s))
    for it in range(1, max_it + 1):
        if np.sqrt(gamma) <= abs_tol:
            return x, it - 1, True
        t = a @ p
        delta = float(np.dot(t, t))
        if delta == 0.0:
            return x, it - 1, np.sqrt(gamma) <= abs_tol
        alpha = gamma / delta
        x += alpha * p
        r -= alpha * t
        s = a.T @ r
        gamma_new = float(np.dot(s, s))
        p *= gamma_new / gamma
        p += s
        gamma = gamma_new
    return x, max_it, np.sqrt(gamma) <= abs_tol


def cgls_solve(a: np.ndarray, b: np.ndarray, tol: float = 1e-10, max_it: int | None = None) -> np.ndarray:
    """Least-squares solution of ``min ||A x - b||`` for full-column-rank A.

    Stops when the normal-equations residual satisfies
    ``||A^T (A x - b)|| <= tol * ||A^T b||``, verified against a freshly
    computed residual (the recursive one can drift).  Raises
    :class:`ConvergenceError` carrying the best iterate if the budget runs
    out.
    """
    m, n = a.shape
    if max_it is None:
        max_it = 10 * n + 100
    atb = a.T @ b
    ref = float(np.linalg.norm(atb))
    x = np.zeros(n)
    if ref == 0.0:
        return x
    abs_tol = tol * ref
    used = 0
    # One restart from the current iterate guards against drift of the
    # recursively updated residual.
    for _ in range(2):
        x, it, _ = _cgls_pass(a, b, x, abs_tol, max_it - used)
        used += it
        true_res = float(np.linalg.norm(a.T @ (a @ x - b)))
        if true_res <= abs_tol:
            return x
        if used >= max_it:
            break
    raise ConvergenceError(
        f"CGLS did not reach tol={tol} within {max_it} iterations "
        f"(normal-equations residual {true_res / ref:.3e} relative)",
        best_x=x,
    )


def _cgls_solve_counted(a, b, tol=1e-10, max_it=None):
    """Like :func:`cgls_solve` but also report iterations used (harness detail)."""
    m, n = a.shape
    if max_it is None:
        max_it = 10 * n + 100
    atb = a.T @ b
    ref = float(np.linalg.norm(atb))
    x = np.zeros(n)
    if ref == 0.0:
        return x, 0
    x, used, ok = _cgls_pass(a, b, x, tol * ref, max_it)
    if not ok and float(np.linalg.norm(a.T @ (a @ x - b))) > tol * ref:
        raise ConvergenceError("CGLS did not converge", best_x=x)
    return x, used
