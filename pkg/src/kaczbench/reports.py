"""Run reports, trace records, and their CSV schemas.

The report CSV schema is fixed: one header, one row per solver run, plus a
single ``summary`` row per benchmark (see README for column meanings).
Floats are written with ``repr`` so every data row parses back losslessly.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "REPORT_HEADER",
    "TRACE_HEADER",
    "RunReport",
    "TraceRecord",
    "parse_report_row",
    "parse_trace_row",
    "read_report_csv",
    "read_trace_csv",
    "report_row",
    "trace_row",
    "write_csv",
]

REPORT_HEADER = [
    "row_kind",
    "variant",
    "q",
    "block_size",
    "alpha_policy",
    "alpha",
    "seed",
    "iterations",
    "converged",
    "wall_time_s",
    "final_error_sq",
    "final_residual",
]

TRACE_HEADER = ["iteration", "error_norm", "residual_norm"]


@dataclass
class TraceRecord:
    """Error and residual norms sampled at one iteration."""

    iteration: int
    error_norm: float
    residual_norm: float


@dataclass
class RunReport:
    """Outcome of one solver run.

    ``wall_time_s`` covers the iteration loop only (setup and spectral
    precomputation excluded).  ``error_evals`` counts stopping-criterion
    evaluations; fixed-budget replays must report 0.  ``x`` holds the final
    iterate and ``barrier_events`` / ``trace`` are filled by solvers that
    instrument them; none of these three appear in the CSV schema.
    """

    variant: str
    q: int
    block_size: int
    alpha_policy: str
    alpha: float
    seed: int
    iterations: int
    converged: bool
    wall_time_s: float
    final_error_sq: float
    final_residual: float
    error_evals: int = 0
    barrier_events: int | None = None
    x: np.ndarray | None = field(default=None, repr=False)
    trace: list[TraceRecord] | None = field(default=None, repr=False)


def report_row(report: RunReport, row_kind: str = "run") -> list[str]:
    return [
        row_kind,
        report.variant,
        str(report.q),
        str(report.block_size),
        report.alpha_policy,
        repr(report.alpha),
        str(report.seed),
        str(report.iterations),
        "true" if report.converged else "false",
        repr(report.wall_time_s),
        repr(report.final_error_sq),
        repr(report.final_residual),
    ]


def parse_report_row(row: list[str]) -> tuple[str, RunReport]:
    kind = row[0]
    return kind, RunReport(
        variant=row[1],
        q=int(row[2]),
        block_size=int(row[3]),
        alpha_policy=row[4],
        alpha=float(row[5]),
        seed=int(row[6]),
        iterations=int(row[7]),
        converged=row[8] == "true",
        wall_time_s=float(row[9]),
        final_error_sq=float(row[10]),
        final_residual=float(row[11]),
    )


def trace_row(rec: TraceRecord) -> list[str]:
    return [str(rec.iteration), repr(rec.error_norm), repr(rec.residual_norm)]


def parse_trace_row(row: list[str]) -> TraceRecord:
    return TraceRecord(int(row[0]), float(row[1]), float(row[2]))


def write_csv(dest, header: list[str], rows) -> None:
    """Write header+rows to a path, file object, or stdout-like stream."""
    if hasattr(dest, "write"):
        w = csv.writer(dest, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
        return
    with open(dest, "w", newline="") as fh:
        write_csv(fh, header, rows)


def _read_rows(src, expected_header):
    if hasattr(src, "read"):
        rows = list(csv.reader(src))
    else:
        with open(src, newline="") as fh:
            rows = list(csv.reader(fh))
    if not rows or rows[0] != expected_header:
        raise ValueError(f"bad CSV header: expected {expected_header}")
    return rows[1:]


def read_report_csv(src) -> list[tuple[str, RunReport]]:
    return [parse_report_row(r) for r in _read_rows(src, REPORT_HEADER)]


def read_trace_csv(src) -> list[TraceRecord]:
    return [parse_trace_row(r) for r in _read_rows(src, TRACE_HEADER)]


def format_report_csv(rows_with_kind) -> str:
    """Render (kind, report) pairs as a CSV string."""
    buf = io.StringIO()
    write_csv(buf, REPORT_HEADER, [report_row(r, k) for k, r in rows_with_kind])
    return buf.getvalue()
