"""Threaded shared-memory solvers.

Three implementations run q real worker threads over one shared iterate:

* :func:`solve_rk_block_sequential` keeps the plain randomized Kaczmarz
  iteration order (one row per iteration, single sampling stream) and only
  parallelizes the work inside an iteration: the row inner product is
  computed as per-worker partial dots combined in fixed index order, and
  the solution update is split across disjoint column slices.
* :func:`solve_rka_parallel` runs one averaged iteration per round: after a
  barrier, workers snapshot the iterate into ``x_prev`` (each copying its
  column slice, with a second barrier ending the copy), then each samples a
  row on its own stream, computes its scale factor from ``x_prev`` only,
  and accumulates its scaled row into the shared iterate inside a mutual
  exclusion region.  Exactly two barriers per iteration.
* :func:`solve_rkab_parallel` gives each worker a private estimate ``v``:
  one leading row is applied from the shared iterate, then ``block_size``
  further rows are chained on ``v`` (so ``block_size + 1`` rows per worker
  per iteration), ``v`` is turned into a difference against the shared
  iterate, and after a second barrier the differences are folded in as
  ``x += v / q`` under the lock.  Exactly two barriers per iteration.

Row sequences are fully determined by ``(base_seed, q, sampling_scheme)``;
the only run-to-run nondeterminism is the order in which workers enter the
mutual exclusion region, which perturbs iterates at rounding level.  The
sequential averaging solvers with the same per-worker streams are the
behavioral oracles (for the block variant, in its ``lead_row`` mode).

Worker 0 evaluates the stopping criterion between the two barriers, while
the shared iterate is stable, and publishes the decision for everyone;
the criterion's cost is excluded from timing studies by replaying with a
fixed budget instead.  Reported wall time spans thread start to join.
"""

from __future__ import annotations

import threading
from collections import defaultdict
from time import perf_counter

import numpy as np

from .linalg import row_norm_cache
from .reports import RunReport
from .sampling import make_sampler, partition_bounds, worker_rng
from .solvers import SolverConfig, _uniform_alpha, resolve_alphas, worker_streams
from .sysgen import LinearSystem

__all__ = [
    "Instrumentation",
    "solve_rk_block_sequential",
    "solve_rka_parallel",
    "solve_rkab_parallel",
]


class Instrumentation:
    """Optional capture of per-iteration internals, for tests.

    ``rows[k]`` holds (worker, row) pairs of iteration k; ``scales[k]`` the
    scale factors; ``contributions[k]`` each worker's update vector (only
    when ``record_contributions``, intended for small runs); ``iterates[r]``
    the shared iterate after r applied iterations.
    """

    def __init__(self, record_contributions: bool = False):
        self.rows = defaultdict(list)
        self.scales = defaultdict(list)
        self.contributions = defaultdict(list)
        self.iterates = {}
        self.record_contributions = record_contributions
        self._lock = threading.Lock()

    def record_update(self, k, worker, rows, scales, contribution=None):
        with self._lock:
            self.rows[k].append((worker, tuple(rows)))
            self.scales[k].append((worker, tuple(scales)))
            if contribution is not None:
                self.contributions[k].append(contribution)

    def record_iterate(self, r, x):
        with self._lock:
            self.iterates[r] = x.copy()

    def row_multiset(self, k):
        return sorted((w, r) for w, rows in self.rows[k] for r in rows)


def _run_pool(q, body, barrier):
    """Run ``body(t)`` on q threads; re-raise the first real worker error."""
    errors = []

    def wrap(t):
        try:
            body(t)
        except BaseException as exc:  # noqa: BLE001 - propagated below
            errors.append(exc)
            barrier.abort()

    threads = [threading.Thread(target=wrap, args=(t,), name=f"kacz-worker-{t}") for t in range(q)]
    t0 = perf_counter()
    for th in threads:
        th.start()
    for th in threads:
        th.join()
    wall = perf_counter() - t0
    if errors:
        for exc in errors:
            if not isinstance(exc, threading.BrokenBarrierError):
                raise exc
        raise errors[0]
    return wall


class _SharedRun:
    """State shared by the worker threads of one solve."""

    def __init__(self, n):
        self.x = np.zeros(n)
        self.x_prev = np.empty(n)
        self.stop = False
        self.converged = False
        self.err = float("nan")
        self.iterations = 0
        self.error_evals = 0
        self.barrier_events = 0


def _column_slices(n, q):
    return [slice(lo, hi + 1) for lo, hi in (partition_bounds(n, q, t) for t in range(q))]


def _finish_report(system, cfg, run, wall, *, variant, q, block_size, alpha_value, budget):
    x = run.x
    if budget is None:
        final_err = run.err
        final_res = float(np.linalg.norm(system.A @ x - system.b))
    else:
        final_err = float("nan")
        final_res = float("nan")
    return RunReport(
        variant=variant,
        q=q,
        block_size=block_size,
        alpha_policy=cfg.alpha_policy,
        alpha=alpha_value,
        seed=cfg.base_seed,
        iterations=run.iterations,
        converged=run.converged,
        wall_time_s=wall,
        final_error_sq=final_err,
        final_residual=final_res,
        error_evals=run.error_evals,
        barrier_events=run.barrier_events,
        x=x,
    )


def _decide_stop(run, cfg, x_ref, k, budget):
    """Worker 0 only, while the shared iterate is stable."""
    if budget is not None:
        run.stop = k >= budget
        return
    d = run.x - x_ref
    e = float(np.dot(d, d))
    run.error_evals += 1
    run.err = e
    if e < cfg.epsilon:
        run.converged = True
        run.stop = True
    elif k >= cfg.max_iterations:
        run.stop = True


def solve_rka_parallel(system: LinearSystem, cfg: SolverConfig, *, x_ref=None, budget=None,
                       capture=None, instrument: Instrumentation | None = None,
                       probe=None) -> RunReport:
    """Averaged randomized Kaczmarz on q threads (snapshot / critical design).

    ``probe``, if given, is called by worker 0 as ``probe(k, x)`` after the
    snapshot barrier and may mutate the shared iterate; scale factors are
    functions of the snapshot only, so they must not change (tested).
    """
    cfg.validate()
    cache = row_norm_cache(system.A)
    q = cfg.q
    alphas = resolve_alphas(system.A, cfg)
    samplers, rngs = worker_streams(cache, cfg)
    a, b, sqn = system.A, system.b, cache.sq_norms
    if budget is None and x_ref is None:
        x_ref = system.x_ref()
    run = _SharedRun(system.n)
    slices = _column_slices(system.n, min(q, system.n))
    barrier = threading.Barrier(q)
    lock = threading.Lock()

    def body(t):
        sampler, rng, alpha_t = samplers[t], rngs[t], alphas[t]
        sl = slices[t] if t < len(slices) else slice(0, 0)
        k = 0
        while True:
            barrier.wait()
            # x is stable from here until the critical sections: copy the
            # snapshot slice-by-slice, worker 0 also judges the stop rule.
            run.x_prev[sl] = run.x[sl]
            if t == 0:
                run.barrier_events += 2
                if capture is not None and k > 0:
                    capture.append(run.x.copy())
                if instrument is not None and k > 0:
                    instrument.record_iterate(k, run.x)
                _decide_stop(run, cfg, x_ref, k, budget)
            barrier.wait()
            if run.stop:
                break
            if t == 0 and probe is not None:
                with lock:
                    probe(k, run.x)
            i = sampler.sample(rng)
            row = a[i]
            scale = alpha_t * (b[i] - np.dot(row, run.x_prev)) / (q * sqn[i])
            if instrument is not None:
                contrib = scale * row if instrument.record_contributions else None
                instrument.record_update(k, t, [i], [scale], contrib)
            with lock:
                run.x += scale * row
            if t == 0:
                run.iterations = k + 1
            k += 1

    if instrument is not None:
        instrument.record_iterate(0, run.x)
    wall = _run_pool(q, body, barrier)
    return _finish_report(system, cfg, run, wall, variant="rka", q=q, block_size=1,
                          alpha_value=_uniform_alpha(alphas), budget=budget)


def solve_rkab_parallel(system: LinearSystem, cfg: SolverConfig, *, x_ref=None, budget=None,
                        capture=None, instrument: Instrumentation | None = None) -> RunReport:
    """Block-averaged randomized Kaczmarz on q threads.

    Note the worker processes ``block_size + 1`` rows per iteration: one
    leading row computed from the shared iterate plus the local chain.  The
    matching sequential oracle is ``solve_rkab_seq(..., lead_row=True)``.
    """
    cfg.validate()
    cache = row_norm_cache(system.A)
    q = cfg.q
    bs = cfg.block_size
    alphas = resolve_alphas(system.A, cfg)
    samplers, rngs = worker_streams(cache, cfg)
    a, b, sqn = system.A, system.b, cache.sq_norms
    if budget is None and x_ref is None:
        x_ref = system.x_ref()
    run = _SharedRun(system.n)
    barrier = threading.Barrier(q)
    lock = threading.Lock()

    def body(t):
        sampler, rng, alpha_t = samplers[t], rngs[t], alphas[t]
        v = np.empty(system.n)
        x = run.x
        k = 0
        while True:
            barrier.wait()
            # x is stable until after the second barrier.
            if t == 0:
                run.barrier_events += 2
                if capture is not None and k > 0:
                    capture.append(x.copy())
                if instrument is not None and k > 0:
                    instrument.record_iterate(k, x)
                _decide_stop(run, cfg, x_ref, k, budget)
            rows = [sampler.sample(rng)]
            row = a[rows[0]]
            scale = alpha_t * (b[rows[0]] - np.dot(row, x)) / sqn[rows[0]]
            scales = [scale]
            v[:] = x
            v += scale * row
            for _ in range(bs):
                i = sampler.sample(rng)
                row = a[i]
                scale = alpha_t * (b[i] - np.dot(row, v)) / sqn[i]
                v += scale * row
                rows.append(i)
                scales.append(scale)
            v -= x
            barrier.wait()
            if run.stop:
                break
            if instrument is not None:
                contrib = v / q if instrument.record_contributions else None
                instrument.record_update(k, t, rows, scales, contrib)
            with lock:
                x += v / q
            if t == 0:
                run.iterations = k + 1
            k += 1

    if instrument is not None:
        instrument.record_iterate(0, run.x)
    wall = _run_pool(q, body, barrier)
    return _finish_report(system, cfg, run, wall, variant="rkab", q=q, block_size=bs,
                          alpha_value=_uniform_alpha(alphas), budget=budget)


def solve_rk_block_sequential(system: LinearSystem, cfg: SolverConfig, *, x_ref=None,
                              budget=None, capture=None) -> RunReport:
    """Randomized Kaczmarz with the work inside each iteration parallelized.

    The iterate sequence is semantically that of :func:`solve_rk` on the
    same seed: one sampling stream, one row per iteration.  Workers compute
    partial inner products over disjoint column slices (combined in fixed
    index order, so runs are deterministic) and update disjoint slices of
    the solution.  With a single worker the arithmetic is identical to
    :func:`solve_rk`.  Per-iteration work is tiny (a dot product and an
    update over n entries), so no speedup is expected for small n; the
    value of this solver is measuring exactly that.
    """
    cfg.validate()
    cache = row_norm_cache(system.A)
    q = cfg.q
    if q > system.n:
        raise ValueError(f"q={q} workers exceed n={system.n} columns")
    alpha = float(resolve_alphas(system.A, cfg, q=1)[0])
    sampler = make_sampler(cache)
    rng = worker_rng(cfg.base_seed, 0)
    a, b, sqn = system.A, system.b, cache.sq_norms
    if budget is None and x_ref is None:
        x_ref = system.x_ref()
    run = _SharedRun(system.n)
    partials = np.zeros(q)
    shared = {"row": -1, "scale": 0.0}
    slices = _column_slices(system.n, q)
    barrier = threading.Barrier(q)

    def body(t):
        sl = slices[t]
        x = run.x
        k = 0
        while True:
            barrier.wait()
            if t == 0:
                run.barrier_events += 4
                if capture is not None and k > 0:
                    capture.append(x.copy())
                _decide_stop(run, cfg, x_ref, k, budget)
                if not run.stop:
                    shared["row"] = sampler.sample(rng)
            barrier.wait()
            if run.stop:
                break
            i = shared["row"]
            partials[t] = np.dot(a[i, sl], x[sl])
            barrier.wait()
            if t == 0:
                s = float(partials[0])
                for w in range(1, q):  # fixed combine order: deterministic runs
                    s += float(partials[w])
                shared["scale"] = alpha * (b[i] - s) / sqn[i]
                run.iterations = k + 1
            barrier.wait()
            x[sl] += shared["scale"] * a[i, sl]
            k += 1

    wall = _run_pool(q, body, barrier)
    return _finish_report(system, cfg, run, wall, variant="rk", q=q, block_size=1,
                          alpha_value=alpha, budget=budget)
