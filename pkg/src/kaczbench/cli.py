"""Command-line interface: generate systems, solve, bench, trace.

Subcommands:

* ``generate`` writes a system file from generator flags.
* ``solve`` runs one solver on a system file and prints a report CSV row.
* ``bench`` runs the seed-averaged measurement plus timed replay and
  writes one CSV row per seed and a summary row.
* ``trace`` records error/residual norms at a fixed iteration interval.

``KZ_THREADS`` caps the worker count when ``--q`` is not given explicitly
(the flag wins).
"""

from __future__ import annotations

import argparse
import os
import sys

from .errors import ConvergenceError, SystemFormatError
from .harness import Protocol, bench, run_solver, trace_run
from .reports import REPORT_HEADER, TRACE_HEADER, report_row, trace_row, write_csv
from .solvers import ALPHA_POLICIES, ENGINES, SAMPLING_SCHEMES, VARIANTS, SolverConfig
from .sysgen import GeneratorConfig, generate_mother, load_system, make_inconsistent, save_system

__all__ = ["cli_main", "main"]


def _positive(parser, name, value, minimum=1):
    if value < minimum:
        parser.error(f"{name} must be >= {minimum}, got {value}")
    return value


def _add_solver_flags(p):
    p.add_argument("--variant", choices=VARIANTS, default="rk")
    p.add_argument("--q", type=int, default=None, help="worker count (default 1; KZ_THREADS caps it)")
    p.add_argument("--block-size", type=int, default=1)
    p.add_argument("--alpha-policy", choices=ALPHA_POLICIES, default=None)
    p.add_argument("--alpha", type=float, default=None, help="row weight for the fixed policy")
    p.add_argument("--epsilon", type=float, default=1e-8)
    p.add_argument("--max-it", type=int, default=1_000_000)
    p.add_argument("--engine", choices=ENGINES, default="seq")
    p.add_argument("--sampling-scheme", choices=SAMPLING_SCHEMES, default="full_access")


def _build_cfg(args, parser, seed) -> SolverConfig:
    q = args.q
    if q is None:
        q = 1
        cap = os.environ.get("KZ_THREADS")
        if cap is not None:
            try:
                q = min(q, int(cap))
            except ValueError:
                parser.error(f"KZ_THREADS must be an integer, got {cap!r}")
    _positive(parser, "--q", q)
    _positive(parser, "--block-size", args.block_size)
    _positive(parser, "--max-it", args.max_it)
    if not args.epsilon > 0:
        parser.error(f"--epsilon must be > 0, got {args.epsilon}")
    policy = args.alpha_policy
    if policy is None:
        policy = "fixed" if args.alpha is not None else "unit"
    return SolverConfig(
        variant=args.variant,
        q=q,
        alpha_policy=policy,
        alpha=args.alpha if args.alpha is not None else 1.0,
        block_size=args.block_size,
        epsilon=args.epsilon,
        max_iterations=args.max_it,
        base_seed=seed,
        sampling_scheme=args.sampling_scheme,
        engine=args.engine,
    )


def _out_stream(path):
    return open(path, "w", newline="") if path else sys.stdout


def _cmd_generate(args, parser):
    _positive(parser, "--rows", args.rows)
    _positive(parser, "--cols", args.cols)
    if args.rows < args.cols:
        parser.error(f"--rows must be >= --cols (overdetermined), got {args.rows}x{args.cols}")
    cfg = GeneratorConfig(
        m_max=args.rows,
        n_max=args.cols,
        mu_range=(args.mu_lo, args.mu_hi),
        sigma_range=(args.sigma_lo, args.sigma_hi),
        seed=args.seed,
    )
    system = generate_mother(cfg)
    if args.inconsistent:
        system = make_inconsistent(system, args.noise_seed)
    save_system(system, args.out)
    kind = "inconsistent" if args.inconsistent else "consistent"
    print(f"wrote {kind} system {system.m}x{system.n} (seed {args.seed}) to {args.out}")
    return 0


def _cmd_solve(args, parser):
    system = load_system(args.system)
    cfg = _build_cfg(args, parser, args.seed)
    report = run_solver(system, cfg)
    out = _out_stream(args.out)
    try:
        write_csv(out, REPORT_HEADER, [report_row(report, "run")])
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def _cmd_bench(args, parser):
    system = load_system(args.system)
    cfg = _build_cfg(args, parser, args.seed)
    protocol = Protocol(
        n_seeds=_positive(parser, "--seeds", args.seeds),
        epsilon=args.epsilon,
        n_replay_runs=_positive(parser, "--replay-runs", args.replay_runs),
        strict=args.strict,
    )
    rows, measure, _replay = bench(system, cfg, protocol)
    out = _out_stream(args.out)
    try:
        write_csv(out, REPORT_HEADER, [report_row(r, kind) for kind, r in rows])
    finally:
        if out is not sys.stdout:
            out.close()
    if protocol.strict and not measure.all_converged:
        print("error: at least one seed did not converge", file=sys.stderr)
        return 1
    return 0


def _cmd_trace(args, parser):
    system = load_system(args.system)
    cfg = _build_cfg(args, parser, args.seed)
    _positive(parser, "--step", args.step)
    _positive(parser, "--max-it", args.max_it)
    if cfg.engine != "seq":
        parser.error("--engine threads does not support tracing")
    records = trace_run(system, cfg, args.max_it, args.step, system.x_ref())
    out = _out_stream(args.out)
    try:
        write_csv(out, TRACE_HEADER, [trace_row(r) for r in records])
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kaczbench",
        description="Kaczmarz-family solvers and benchmark harness for dense systems",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="generate a system file")
    g.add_argument("--rows", type=int, required=True)
    g.add_argument("--cols", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.add_argument("--mu-lo", type=float, default=-5.0)
    g.add_argument("--mu-hi", type=float, default=5.0)
    g.add_argument("--sigma-lo", type=float, default=1.0)
    g.add_argument("--sigma-hi", type=float, default=20.0)
    g.add_argument("--inconsistent", action="store_true",
                   help="perturb b with unit normal noise and store the least-squares solution")
    g.add_argument("--noise-seed", type=int, default=0)
    g.set_defaults(func=_cmd_generate)

    s = sub.add_parser("solve", help="run one solver, print one CSV row")
    s.add_argument("--system", required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", default=None)
    _add_solver_flags(s)
    s.set_defaults(func=_cmd_solve)

    b = sub.add_parser("bench", help="seed-averaged iterations plus timed replay")
    b.add_argument("--system", required=True)
    b.add_argument("--seed", type=int, default=0, help="first seed of the protocol")
    b.add_argument("--seeds", type=int, default=10, help="number of seeds")
    b.add_argument("--replay-runs", type=int, default=10)
    b.add_argument("--strict", action="store_true",
                   help="nonzero exit if any seed fails to converge")
    b.add_argument("--out", default=None)
    _add_solver_flags(b)
    b.set_defaults(func=_cmd_bench)

    t = sub.add_parser("trace", help="record error/residual norms at an iteration interval")
    t.add_argument("--system", required=True)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--step", type=int, required=True)
    t.add_argument("--out", default=None)
    _add_solver_flags(t)
    t.set_defaults(func=_cmd_trace)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, parser)
    except (OSError, SystemFormatError, ConvergenceError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


cli_main = main

if __name__ == "__main__":
    raise SystemExit(main())
