"""Measurement protocol around the solvers.

The protocol mirrors how iterative row-action methods are benchmarked
without letting the stopping criterion pollute the timings: first the
iteration count to reach the squared-error threshold is measured once per
seed (seeds ``base_seed .. base_seed + n_seeds - 1``) and averaged
(ceiling); then the run is replayed with the stopping check disabled for
exactly that many iterations, several times, and only those replays are
timed.  Separately, long fixed-budget runs can record the error and
residual norms at a fixed iteration interval for convergence-horizon
studies.

Results are CSV: one row per (config, seed) plus one ``summary`` row
holding the replay budget and total replay time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from time import perf_counter

import numpy as np

from .cgls import _cgls_solve_counted
from .errors import ConvergenceError
from .parallel import solve_rk_block_sequential, solve_rka_parallel, solve_rkab_parallel
from .reports import RunReport, TraceRecord
from .solvers import SolverConfig, solve_ck, solve_rk, solve_rka_seq, solve_rkab_seq
from .sysgen import LinearSystem

__all__ = [
    "MeasureResult",
    "Protocol",
    "ReplayResult",
    "bench",
    "measure_iterations",
    "plateau_error",
    "run_solver",
    "timed_replay",
    "trace_run",
]


@dataclass
class Protocol:
    """Benchmark protocol parameters."""

    n_seeds: int = 10
    epsilon: float = 1e-8
    trace_step: int = 1
    n_replay_runs: int = 10
    strict: bool = False

    def validate(self) -> None:
        if self.n_seeds < 1:
            raise ValueError(f"n_seeds must be >= 1, got {self.n_seeds}")
        if self.trace_step < 1:
            raise ValueError(f"trace_step must be >= 1, got {self.trace_step}")
        if self.n_replay_runs < 1:
            raise ValueError(f"n_replay_runs must be >= 1, got {self.n_replay_runs}")


_SEQ_SOLVERS = {"ck": solve_ck, "rk": solve_rk, "rka": solve_rka_seq, "rkab": solve_rkab_seq}
_THREADED_SOLVERS = {
    "rk": solve_rk_block_sequential,
    "rka": solve_rka_parallel,
    "rkab": solve_rkab_parallel,
}


def _run_cgls(system, cfg, x_ref):
    t0 = perf_counter()
    x, iterations = _cgls_solve_counted(system.A, system.b, tol=1e-10)
    wall = perf_counter() - t0
    if x_ref is None and (system.x_star is not None or system.x_ls is not None):
        x_ref = system.x_ref()
    err = float("nan")
    if x_ref is not None:
        d = x - x_ref
        err = float(np.dot(d, d))
    return RunReport(
        variant="cgls",
        q=1,
        block_size=1,
        alpha_policy=cfg.alpha_policy,
        alpha=float("nan"),
        seed=cfg.base_seed,
        iterations=iterations,
        converged=True,
        wall_time_s=wall,
        final_error_sq=err,
        final_residual=float(np.linalg.norm(system.A @ x - system.b)),
        x=x,
    )


def run_solver(system: LinearSystem, cfg: SolverConfig, *, x_ref=None, budget=None,
               trace_step=None, capture=None) -> RunReport:
    """Dispatch one solver run according to ``cfg.variant`` / ``cfg.engine``."""
    cfg.validate()
    if cfg.variant == "cgls":
        if budget is not None or trace_step is not None:
            raise ValueError("cgls supports neither fixed-budget replay nor tracing")
        return _run_cgls(system, cfg, x_ref)
    if cfg.engine == "threads":
        if trace_step is not None:
            raise ValueError("tracing is supported by the sequential engine only")
        fn = _THREADED_SOLVERS.get(cfg.variant)
        if fn is None:
            raise ValueError(f"variant {cfg.variant!r} has no threaded engine")
        return fn(system, cfg, x_ref=x_ref, budget=budget, capture=capture)
    fn = _SEQ_SOLVERS[cfg.variant]
    return fn(system, cfg, x_ref=x_ref, budget=budget, trace_step=trace_step, capture=capture)


@dataclass
class MeasureResult:
    """Per-seed iteration counts plus their mean and the replay budget."""

    reports: list[RunReport]
    mean_iterations: float
    budget: int  # ceil(mean), the replay iteration budget
    all_converged: bool


def measure_iterations(system: LinearSystem, cfg: SolverConfig, protocol: Protocol) -> MeasureResult:
    """Run once per seed to the error threshold; average the counts.

    Non-convergent seeds are flagged in their reports and excluded from
    the mean.  Raises :class:`ConvergenceError` if no seed converges.
    """
    protocol.validate()
    reports = []
    for j in range(protocol.n_seeds):
        cj = cfg.replace(base_seed=cfg.base_seed + j, epsilon=protocol.epsilon)
        reports.append(run_solver(system, cj))
    counts = [r.iterations for r in reports if r.converged]
    if not counts:
        raise ConvergenceError(
            f"no seed converged within max_iterations={cfg.max_iterations}"
        )
    mean = sum(counts) / len(counts)
    return MeasureResult(
        reports=reports,
        mean_iterations=mean,
        budget=math.ceil(mean),
        all_converged=len(counts) == len(reports),
    )


@dataclass
class ReplayResult:
    """Wall times of the fixed-budget replays."""

    total_s: float
    per_run_s: list[float]


def timed_replay(system: LinearSystem, cfg: SolverConfig, fixed_iterations: int,
                 n_runs: int = 10) -> ReplayResult:
    """Time n_runs replays of exactly ``fixed_iterations`` iterations each.

    The stopping criterion is disabled; a replay that evaluated it even
    once is a protocol violation and raises.
    """
    if fixed_iterations < 1:
        raise ValueError(f"fixed_iterations must be >= 1, got {fixed_iterations}")
    per_run = []
    for _ in range(n_runs):
        report = run_solver(system, cfg, budget=fixed_iterations)
        if report.error_evals != 0:
            raise RuntimeError(
                "timed replay evaluated the stopping criterion; timing protocol violated"
            )
        per_run.append(report.wall_time_s)
    return ReplayResult(total_s=sum(per_run), per_run_s=per_run)


def trace_run(system: LinearSystem, cfg: SolverConfig, max_iterations: int,
              trace_step: int, x_ref: np.ndarray) -> list[TraceRecord]:
    """Record error/residual norms every ``trace_step`` iterations.

    The solver runs to ``max_iterations`` regardless of epsilon; records
    cover iterations 0, step, 2*step, ...
    """
    cfg = cfg.replace(max_iterations=max_iterations)
    report = run_solver(system, cfg, x_ref=x_ref, trace_step=trace_step)
    return report.trace


def plateau_error(records: list[TraceRecord], tail: int = 10) -> float:
    """Mean error norm over the last ``tail`` records (noise-robust plateau)."""
    if len(records) < tail:
        raise ValueError(f"need at least {tail} trace records, got {len(records)}")
    return float(np.mean([r.error_norm for r in records[-tail:]]))


def bench(system: LinearSystem, cfg: SolverConfig, protocol: Protocol):
    """Full protocol: measure per seed, then timed replay of the mean budget.

    Returns ``(rows, measure, replay)`` where rows are (row_kind, report)
    pairs ready for the report CSV: one ``run`` row per seed and one
    ``summary`` row whose iteration count is the replay budget and whose
    wall time is the total replay time (seed -1 marks the summary).
    """
    measure = measure_iterations(system, cfg, protocol)
    replay = timed_replay(system, cfg, measure.budget, n_runs=protocol.n_replay_runs)
    first = measure.reports[0]
    summary = RunReport(
        variant=first.variant,
        q=first.q,
        block_size=first.block_size,
        alpha_policy=first.alpha_policy,
        alpha=first.alpha,
        seed=-1,
        iterations=measure.budget,
        converged=measure.all_converged,
        wall_time_s=replay.total_s,
        final_error_sq=float("nan"),
        final_residual=float("nan"),
    )
    rows = [("run", r) for r in measure.reports]
    rows.append(("summary", summary))
    return rows, measure, replay
