"""Sequential solvers: cyclic and randomized Kaczmarz plus the averaging
variants, with a shared driver for stopping, fixed-budget replay, and
error/residual tracing.

All variants funnel every row update through :func:`kaczmarz_step` and
average worker results with the same expression, which gives exact
reduction identities with shared seeds: averaging with one worker
reproduces plain randomized Kaczmarz bitwise, and the block variant with
block size one reproduces the averaging variant bitwise.  The sequential
averaging solvers loop over simulated workers and therefore double as the
behavioral oracles for the threaded implementations.

Stopping follows the squared-error criterion ``||x - x_ref||^2 < epsilon``
against a known reference solution, evaluated before every iteration.
Fixed-budget runs (used for timing) never evaluate it; ``error_evals`` on
the report proves that.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from time import perf_counter

import numpy as np

from .cgls import cgls_solve
from .linalg import row_norm_cache
from .reports import RunReport, TraceRecord
from .sampling import Prng, RowSampler, make_sampler, partition_bounds, worker_rng
from .spectral import SpectralStats, optimal_alpha, partial_alphas, spectral_stats
from .sysgen import LinearSystem

__all__ = [
    "ALPHA_POLICIES",
    "ENGINES",
    "SAMPLING_SCHEMES",
    "VARIANTS",
    "SolverConfig",
    "cgls_solve",
    "kaczmarz_step",
    "optimal_alpha",
    "partial_alphas",
    "resolve_alphas",
    "rka_combined_step",
    "rkab_worker_block",
    "solve_ck",
    "solve_rk",
    "solve_rka_seq",
    "solve_rkab_seq",
    "spectral_stats",
    "SpectralStats",
]

VARIANTS = ("ck", "rk", "rka", "rkab", "cgls")
ALPHA_POLICIES = ("unit", "fixed", "optimal_full", "optimal_partial")
SAMPLING_SCHEMES = ("full_access", "distributed")
ENGINES = ("seq", "threads")


@dataclass
class SolverConfig:
    """Knobs shared by every solver run.

    ``alpha`` is consumed by the ``fixed`` policy only; ``q`` is the worker
    count for the averaging variants and the thread count for the threaded
    engines; ``block_size`` applies to the block variant.  Under the
    ``distributed`` sampling scheme worker t draws rows only from its
    contiguous block ``floor(t*m/q) .. floor((t+1)*m/q)-1``; under
    ``full_access`` every worker samples the whole matrix on its own
    stream.
    """

    variant: str = "rk"
    q: int = 1
    alpha_policy: str = "unit"
    alpha: float = 1.0
    block_size: int = 1
    epsilon: float = 1e-8
    max_iterations: int = 1_000_000
    base_seed: int = 0
    sampling_scheme: str = "full_access"
    engine: str = "seq"

    def validate(self) -> None:
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.alpha_policy not in ALPHA_POLICIES:
            raise ValueError(f"unknown alpha policy {self.alpha_policy!r}")
        if self.sampling_scheme not in SAMPLING_SCHEMES:
            raise ValueError(f"unknown sampling scheme {self.sampling_scheme!r}")
        if self.engine not in ENGINES:
            raise ValueError(f"unknown engine {self.engine!r}")
        if self.q < 1:
            raise ValueError(f"q must be >= 1, got {self.q}")
        if self.block_size < 1:
            raise ValueError(f"block_size must be >= 1, got {self.block_size}")
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be > 0, got {self.epsilon}")
        if self.max_iterations < 1:
            raise ValueError(f"max_iterations must be >= 1, got {self.max_iterations}")

    def replace(self, **kw) -> "SolverConfig":
        return dataclasses.replace(self, **kw)


def kaczmarz_step(x: np.ndarray, a: np.ndarray, b: np.ndarray, sq_norms: np.ndarray,
                  i: int, alpha: float = 1.0) -> None:
    """Project ``x`` toward the hyperplane of row i, in place.

    With ``alpha == 1`` this is the orthogonal projection onto
    ``{x : <a_i, x> = b_i}``.  Every solver in the package applies row
    updates through this exact expression.
    """
    row = a[i]
    scale = alpha * (b[i] - np.dot(row, x)) / sq_norms[i]
    x += scale * row


def rka_combined_step(x: np.ndarray, a: np.ndarray, b: np.ndarray, sq_norms: np.ndarray,
                      rows, alpha=1.0) -> None:
    """Averaged update for one iteration: mean of the per-row projections.

    Each row in ``rows`` (a multiset; duplicates allowed and meaningful)
    contributes the single-step result computed from the same snapshot of
    ``x``; their mean replaces ``x``.  With a single row this degenerates
    to :func:`kaczmarz_step` bitwise: the one-element mean is exact.
    """
    q = len(rows)
    alphas = np.broadcast_to(np.asarray(alpha, dtype=float), (q,))
    v_all = np.empty((q, x.shape[0]))
    for t, i in enumerate(rows):
        v = v_all[t]
        v[:] = x
        kaczmarz_step(v, a, b, sq_norms, i, alphas[t])
    np.sum(v_all, axis=0, out=x)
    x /= q


def rkab_worker_block(v: np.ndarray, a: np.ndarray, b: np.ndarray, sq_norms: np.ndarray,
                      sampler: RowSampler, rng: Prng, block_size: int,
                      alpha: float = 1.0) -> None:
    """Chain ``block_size`` projections on the worker-local estimate ``v``."""
    for _ in range(block_size):
        kaczmarz_step(v, a, b, sq_norms, sampler.sample(rng), alpha)


def resolve_alphas(a: np.ndarray, cfg: SolverConfig, q: int | None = None) -> np.ndarray:
    """Per-worker row weights for a config (length-q array)."""
    q = cfg.q if q is None else q
    if cfg.alpha_policy == "unit":
        return np.ones(q)
    if cfg.alpha_policy == "fixed":
        return np.full(q, float(cfg.alpha))
    if cfg.alpha_policy == "optimal_full":
        return np.full(q, optimal_alpha(spectral_stats(a), q))
    if cfg.alpha_policy == "optimal_partial":
        return partial_alphas(a, q)
    raise ValueError(f"unknown alpha policy {cfg.alpha_policy!r}")


def worker_streams(cache, cfg: SolverConfig, q: int | None = None):
    """Per-worker (sampler, rng) pairs under the configured sampling scheme."""
    q = cfg.q if q is None else q
    if cfg.sampling_scheme == "full_access":
        shared = make_sampler(cache)
        samplers = [shared] * q
    else:
        samplers = [make_sampler(cache, *partition_bounds(cache.m, q, t)) for t in range(q)]
    rngs = [worker_rng(cfg.base_seed, t) for t in range(q)]
    return samplers, rngs


def _trace_record(k, x, x_ref, a, b):
    return TraceRecord(
        iteration=k,
        error_norm=float(np.linalg.norm(x - x_ref)),
        residual_norm=float(np.linalg.norm(a @ x - b)),
    )


def _drive(system: LinearSystem, cfg: SolverConfig, advance, *, variant, q, block_size,
           alpha_value, x_ref=None, budget=None, trace_step=None, capture=None) -> RunReport:
    """Run ``advance`` under one of three protocols.

    Default: evaluate the stopping criterion before every iteration until
    it holds or the budget cfg.max_iterations is exhausted.  ``budget``:
    run exactly that many iterations with the stopping criterion disabled
    (for timing).  ``trace_step``: run to cfg.max_iterations regardless of
    epsilon, recording error and residual norms every ``trace_step``
    iterations, including iteration 0.
    """
    a, b = system.A, system.b
    x = np.zeros(a.shape[1])
    err_evals = 0
    trace = None
    final_err = float("nan")
    final_res = float("nan")

    if budget is not None:
        if budget < 1:
            raise ValueError(f"fixed iteration budget must be >= 1, got {budget}")
        t0 = perf_counter()
        for k in range(budget):
            advance(x, k)
            if capture is not None:
                capture.append(x.copy())
        wall = perf_counter() - t0
        iterations, converged = budget, False
    elif trace_step is not None:
        if trace_step < 1:
            raise ValueError(f"trace_step must be >= 1, got {trace_step}")
        if x_ref is None:
            x_ref = system.x_ref()
        trace = [_trace_record(0, x, x_ref, a, b)]
        t0 = perf_counter()
        for k in range(cfg.max_iterations):
            advance(x, k)
            if capture is not None:
                capture.append(x.copy())
            if (k + 1) % trace_step == 0:
                trace.append(_trace_record(k + 1, x, x_ref, a, b))
        wall = perf_counter() - t0
        iterations, converged = cfg.max_iterations, False
    else:
        if x_ref is None:
            x_ref = system.x_ref()
        k = 0
        t0 = perf_counter()
        while True:
            d = x - x_ref
            e = float(np.dot(d, d))
            err_evals += 1
            if e < cfg.epsilon:
                converged = True
                break
            if k >= cfg.max_iterations:
                converged = False
                break
            advance(x, k)
            if capture is not None:
                capture.append(x.copy())
            k += 1
        wall = perf_counter() - t0
        iterations, final_err = k, e
        final_res = float(np.linalg.norm(a @ x - b))

    return RunReport(
        variant=variant,
        q=q,
        block_size=block_size,
        alpha_policy=cfg.alpha_policy,
        alpha=alpha_value,
        seed=cfg.base_seed,
        iterations=iterations,
        converged=converged,
        wall_time_s=wall,
        final_error_sq=final_err,
        final_residual=final_res,
        error_evals=err_evals,
        x=x,
        trace=trace,
    )


def _uniform_alpha(alphas: np.ndarray) -> float:
    """Scalar weight for reporting; nan when workers use different weights."""
    return float(alphas[0]) if np.all(alphas == alphas[0]) else float("nan")


def solve_ck(system: LinearSystem, cfg: SolverConfig, *, x_ref=None, budget=None,
             trace_step=None, capture=None) -> RunReport:
    """Cyclic Kaczmarz: rows used in order ``i = k mod m``.

    Classical convergence theory assumes a relaxation weight in (0, 2);
    the weight is taken from the config as-is and not clamped.  Coherent
    systems may exhaust ``max_iterations``; the report is then flagged
    non-converged rather than raising.
    """
    cfg.validate()
    cache = row_norm_cache(system.A)
    alpha = float(resolve_alphas(system.A, cfg, q=1)[0])
    m = system.m
    a, b, sqn = system.A, system.b, cache.sq_norms

    def advance(x, k):
        kaczmarz_step(x, a, b, sqn, k % m, alpha)

    return _drive(system, cfg, advance, variant="ck", q=1, block_size=1,
                  alpha_value=alpha, x_ref=x_ref, budget=budget,
                  trace_step=trace_step, capture=capture)


def solve_rk(system: LinearSystem, cfg: SolverConfig, *, x_ref=None, budget=None,
             trace_step=None, capture=None) -> RunReport:
    """Randomized Kaczmarz: one row per iteration, drawn with probability
    proportional to its squared norm, on worker stream 0 of the seed."""
    cfg.validate()
    cache = row_norm_cache(system.A)
    alpha = float(resolve_alphas(system.A, cfg, q=1)[0])
    sampler = make_sampler(cache)
    rng = worker_rng(cfg.base_seed, 0)
    a, b, sqn = system.A, system.b, cache.sq_norms

    def advance(x, k):
        kaczmarz_step(x, a, b, sqn, sampler.sample(rng), alpha)

    return _drive(system, cfg, advance, variant="rk", q=1, block_size=1,
                  alpha_value=alpha, x_ref=x_ref, budget=budget,
                  trace_step=trace_step, capture=capture)


def solve_rka_seq(system: LinearSystem, cfg: SolverConfig, *, x_ref=None, budget=None,
                  trace_step=None, capture=None) -> RunReport:
    """Averaged randomized Kaczmarz, workers simulated by a loop.

    Each iteration draws one row per worker (all from the snapshot of the
    current iterate) and applies the averaged update.  With ``q == 1`` the
    run is bitwise identical to :func:`solve_rk` on the same seed.
    """
    cfg.validate()
    cache = row_norm_cache(system.A)
    q = cfg.q
    alphas = resolve_alphas(system.A, cfg)
    samplers, rngs = worker_streams(cache, cfg)
    a, b, sqn = system.A, system.b, cache.sq_norms

    def advance(x, k):
        rows = [samplers[t].sample(rngs[t]) for t in range(q)]
        rka_combined_step(x, a, b, sqn, rows, alphas)

    return _drive(system, cfg, advance, variant="rka", q=q, block_size=1,
                  alpha_value=_uniform_alpha(alphas), x_ref=x_ref, budget=budget,
                  trace_step=trace_step, capture=capture)


def solve_rkab_seq(system: LinearSystem, cfg: SolverConfig, *, x_ref=None, budget=None,
                   trace_step=None, capture=None, lead_row: bool = False) -> RunReport:
    """Block-averaged randomized Kaczmarz, workers simulated by a loop.

    Each worker starts from the snapshot of the current iterate, chains
    ``block_size`` projections on its private estimate, and the estimates
    are averaged.  With ``block_size == 1`` this is bitwise identical to
    :func:`solve_rka_seq`.

    ``lead_row=True`` makes every worker apply one extra leading projection
    per iteration (``block_size + 1`` rows total), mirroring the threaded
    implementation, which processes one row from the shared iterate before
    its local block.  That mode is the oracle the threaded block solver is
    checked against.
    """
    cfg.validate()
    cache = row_norm_cache(system.A)
    q = cfg.q
    steps = cfg.block_size + (1 if lead_row else 0)
    alphas = resolve_alphas(system.A, cfg)
    samplers, rngs = worker_streams(cache, cfg)
    a, b, sqn = system.A, system.b, cache.sq_norms
    v_all = np.empty((q, system.n))

    def advance(x, k):
        for t in range(q):
            v = v_all[t]
            v[:] = x
            rkab_worker_block(v, a, b, sqn, samplers[t], rngs[t], steps, alphas[t])
        np.sum(v_all, axis=0, out=x)
        x /= q

    return _drive(system, cfg, advance, variant="rkab", q=q, block_size=cfg.block_size,
                  alpha_value=_uniform_alpha(alphas), x_ref=x_ref, budget=budget,
                  trace_step=trace_step, capture=capture)
