"""Benchmark records and Dolan-More performance profiles.

For a statistic ``theta[m, s]`` of solver ``m`` on problem ``s`` (``+inf``
when the run failed) the profile of ``m`` is::

    p_m(alpha) = |{s : theta[m, s] <= alpha * min_m' theta[m', s]}| / |S|

where ``|S|`` counts every problem, including those no solver solved.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import BenchError, EmptyRecordSet, IoFailure, UnknownMetric

_LOGGER = logging.getLogger(__name__)

METRICS = ("time", "iters", "memory")

RECORD_COLUMNS = ("solver_id", "problem_id", "success", "time_s", "iters", "memory_bytes", "objective")
PROFILE_COLUMNS = ("solver_id", "alpha", "p")

# CSV column of each metric
_METRIC_COLUMNS = {"time": "time_s", "iters": "iters", "memory": "memory_bytes"}
_INTEGER_METRICS = ("iters", "memory")

_ALPHA_RANGES = {"time": (1.0, 10.0), "iters": (1.0, 8.0), "memory": (1.0, 10.0)}
ALPHA_POINTS = 200

# Smallest positive statistic; zero statistics are lifted to it
_TINY = float(np.nextafter(0.0, 1.0))


@dataclass
class RunRecord:
    """Statistics of one solver run on one problem.

    Attributes:
        solver_id: Solver configuration label
        problem_id: Problem label (case name)
        metrics: ``time`` in seconds, ``iters`` and ``memory`` in bytes
        success: The run ended Optimal
        objective: Final objective in $/h (None when unavailable)
    """

    solver_id: str
    problem_id: str
    metrics: dict[str, float] = field(default_factory=dict)
    success: bool = False
    objective: float | None = None

    def statistic(self, metric: str) -> float:
        """Value used by profiles: +inf for failures."""
        if not self.success:
            return math.inf
        value = float(self.metrics.get(metric, math.inf))
        if math.isnan(value):
            return math.inf
        return max(value, _TINY)


@dataclass(frozen=True)
class ProfileCurve:
    """Performance profile of one solver on an ascending alpha grid."""

    solver_id: str
    alphas: np.ndarray
    values: np.ndarray

    @property
    def final_value(self) -> float:
        return float(self.values[-1]) if len(self.values) else 0.0


def default_alphas(metric: str) -> np.ndarray:
    """Log-spaced grid of 200 points, [1, 10] for time and memory, [1, 8] for iterations."""
    if metric not in _ALPHA_RANGES:
        raise UnknownMetric(f"Unknown metric '{metric}' (expected one of {', '.join(METRICS)})")
    lo, hi = _ALPHA_RANGES[metric]
    return np.geomspace(lo, hi, ALPHA_POINTS)


def _check_alphas(alphas: np.ndarray) -> np.ndarray:
    alphas = np.asarray(alphas, dtype=float).ravel()
    if alphas.size == 0:
        raise BenchError("Alpha grid is empty")
    if np.any(alphas < 1.0) or np.any(np.diff(alphas) < 0):
        raise BenchError("Alpha grid must be ascending with every value >= 1")
    return alphas


def statistic_matrix(records: Sequence[RunRecord], metric: str) -> tuple[list[str], list[str], np.ndarray]:
    """Arrange a record set as ``theta[problem, solver]``.

    Returns:
        (solver ids, problem ids, theta) with ids sorted and +inf for failed
        or missing runs.

    Raises:
        EmptyRecordSet: No records
        UnknownMetric: Metric is not one of time, iters, memory
        BenchError: A (solver, problem) pair occurs twice
    """
    if not records:
        raise EmptyRecordSet("No run records to profile")
    if metric not in METRICS:
        raise UnknownMetric(f"Unknown metric '{metric}' (expected one of {', '.join(METRICS)})")

    solvers = sorted({r.solver_id for r in records})
    problems = sorted({r.problem_id for r in records})
    col = {m: j for j, m in enumerate(solvers)}
    row = {s: i for i, s in enumerate(problems)}

    theta = np.full((len(problems), len(solvers)), np.inf)
    seen: set[tuple[str, str]] = set()
    for rec in records:
        key = (rec.solver_id, rec.problem_id)
        if key in seen:
            raise BenchError(f"Duplicate run of solver '{rec.solver_id}' on problem '{rec.problem_id}'")
        seen.add(key)
        theta[row[rec.problem_id], col[rec.solver_id]] = rec.statistic(metric)
    return solvers, problems, theta


def compute_profile(
    records: Sequence[RunRecord],
    metric: str,
    alphas: Iterable[float] | np.ndarray | None = None,
) -> list[ProfileCurve]:
    """Performance profile of every solver in a record set.

    Args:
        records: Runs, at most one per (solver, problem)
        metric: ``time``, ``iters`` or ``memory``
        alphas: Ascending grid (default :func:`default_alphas`)

    Returns:
        One curve per solver, sorted by solver id
    """
    solvers, problems, theta = statistic_matrix(records, metric)
    grid = _check_alphas(default_alphas(metric) if alphas is None else np.fromiter(alphas, dtype=float))

    best = theta.min(axis=1)
    # k[s, m, a] = theta[s, m] <= alpha[a] * best[s]; inf <= inf would count failures
    within = theta[:, :, None] <= grid[None, None, :] * best[:, None, None]
    within &= np.isfinite(theta)[:, :, None]
    values = within.sum(axis=0) / len(problems)

    unsolved = int(np.sum(~np.isfinite(best)))
    if unsolved:
        _LOGGER.debug("%d of %d problems were not solved by any solver", unsolved, len(problems))

    return [ProfileCurve(solver_id=m, alphas=grid.copy(), values=values[j]) for j, m in enumerate(solvers)]


def _fmt_float(value: float) -> str:
    return repr(float(value))


def _fmt_metric(metric: str, value: float) -> str:
    if metric in _INTEGER_METRICS and math.isfinite(value) and float(value).is_integer():
        return str(int(value))
    return _fmt_float(value)


def _csv_text(header: Sequence[str], rows: Iterable[Sequence[str]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buffer.getvalue()


def emit_records(records: Sequence[RunRecord]) -> str:
    """Run records as CSV text, sorted by (solver_id, problem_id)."""
    if not records:
        raise EmptyRecordSet("No run records to emit")
    rows = []
    for rec in sorted(records, key=lambda r: (r.solver_id, r.problem_id)):
        rows.append(
            (
                rec.solver_id,
                rec.problem_id,
                "true" if rec.success else "false",
                *(_fmt_metric(m, rec.metrics.get(m, math.nan)) for m in METRICS),
                "" if rec.objective is None else _fmt_float(rec.objective),
            )
        )
    return _csv_text(RECORD_COLUMNS, rows)


def read_records(text: str) -> list[RunRecord]:
    """Parse CSV text written by :func:`emit_records`."""
    reader = csv.DictReader(io.StringIO(text))
    missing = set(RECORD_COLUMNS) - set(reader.fieldnames or ())
    if missing:
        raise BenchError(f"Run records lack columns: {', '.join(sorted(missing))}")

    records = []
    for line, row in enumerate(reader, start=2):
        try:
            metrics = {m: float(row[_METRIC_COLUMNS[m]]) for m in METRICS}
            objective = float(row["objective"]) if row["objective"] else None
        except ValueError as err:
            raise BenchError(f"Run records line {line}: {err}") from err
        records.append(
            RunRecord(
                solver_id=row["solver_id"],
                problem_id=row["problem_id"],
                metrics=metrics,
                success=row["success"].strip().lower() in ("true", "1", "yes"),
                objective=objective,
            )
        )
    if not records:
        raise EmptyRecordSet("Run record file holds no rows")
    return records


def emit_profile(curves: Sequence[ProfileCurve]) -> str:
    """Profile curves as CSV text with one row per (solver, grid point)."""
    if not curves:
        raise EmptyRecordSet("No profile curves to emit")
    rows = (
        (c.solver_id, _fmt_float(a), _fmt_float(p))
        for c in sorted(curves, key=lambda c: c.solver_id)
        for a, p in zip(c.alphas, c.values)
    )
    return _csv_text(PROFILE_COLUMNS, rows)


def write_artifact(path: str | Path, data: str | bytes) -> Path:
    """Write text or bytes to a file, raising IoFailure on any OS error."""
    target = Path(path)
    try:
        if isinstance(data, bytes):
            target.write_bytes(data)
        else:
            target.write_text(data, encoding="utf-8", newline="\n")
    except OSError as err:
        _LOGGER.error("Failed to write %s: %s", target, err)
        raise IoFailure(f"Failed to write {target}: {err}") from err
    _LOGGER.debug("Wrote %s", target)
    return target


def validate_objectives(records: Sequence[RunRecord], rtol: float = 1e-5) -> list[tuple[str, str, str, float]]:
    """Pairs of successful runs on one problem whose objectives disagree.

    Returns:
        (problem_id, solver_a, solver_b, relative difference) for every pair
        differing by more than ``rtol`` relative to the larger magnitude.
    """
    by_problem: dict[str, list[RunRecord]] = {}
    for rec in records:
        if rec.success and rec.objective is not None:
            by_problem.setdefault(rec.problem_id, []).append(rec)

    disagreements = []
    for problem, runs in sorted(by_problem.items()):
        runs = sorted(runs, key=lambda r: r.solver_id)
        for i, a in enumerate(runs):
            for b in runs[i + 1 :]:
                assert a.objective is not None and b.objective is not None
                scale = max(abs(a.objective), abs(b.objective), 1.0)
                rel = abs(a.objective - b.objective) / scale
                if rel > rtol:
                    disagreements.append((problem, a.solver_id, b.solver_id, rel))
    return disagreements
