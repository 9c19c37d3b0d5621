"""Benchmark suites: every (case, formulation, start, options) combination through the interior-point solver.

A suite is a TOML file::

    cases = ["cases/case9.m", "https://example.org/case118.m"]
    formulations = ["polar-power", "cart-current"]
    starts = ["flat", "mpc", "pf"]
    time_limit = 600          # seconds per run, optional
    linear_solver = "ldl"

    [[options]]
    id = "sigma"
    mu_rule = "sigma"

    [[options]]
    id = "fm"
    mu_rule = "fm"
    step_control = false
"""

from __future__ import annotations

import asyncio
import logging
import math
import time
import tomllib
from collections import Counter
from collections.abc import Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path, PurePosixPath
from typing import TYPE_CHECKING, Any
from urllib.parse import urlparse

from .case_io import CaseData
from .case_loader import load_case
from .errors import GridOptError, SuiteSpecError
from .ipm import SolveOptions, solve_opf
from .network import build_network
from .profiles import RunRecord
from .registry import get_linear_solver
from .types import ALL_FORMULATIONS, Formulation, StartMode

if TYPE_CHECKING:
    import aiohttp

_LOGGER = logging.getLogger(__name__)

# SolveOptions fields a suite may set per option table
OPTION_KEYS = ("tol", "max_iter", "xi", "mu0", "mu_rule", "sigma", "kappa", "theta", "step_control", "bound_shift")


@dataclass(frozen=True)
class OptionSet:
    id: str
    options: SolveOptions


@dataclass(frozen=True)
class SuiteSpec:
    """Parsed benchmark suite.

    Attributes:
        cases: Case paths (resolved) or http(s) URLs
        formulations: Formulations to run
        starts: Start modes to run
        option_sets: Named solver settings
        time_limit: Per-run wall clock limit in seconds (None: unlimited)
        linear_solver: Registered linear solver engine
    """

    cases: tuple[str, ...]
    formulations: tuple[Formulation, ...] = ALL_FORMULATIONS
    starts: tuple[StartMode, ...] = (StartMode.CASE_DATA,)
    option_sets: tuple[OptionSet, ...] = field(default_factory=lambda: (OptionSet("default", SolveOptions()),))
    time_limit: float | None = None
    linear_solver: str = "ldl"

    @property
    def run_count(self) -> int:
        return len(self.cases) * len(self.formulations) * len(self.starts) * len(self.option_sets)


@dataclass(frozen=True)
class RunTask:
    """One run of a suite, picklable for worker processes."""

    case: CaseData
    formulation: Formulation
    start: StartMode
    options_id: str
    options: SolveOptions
    problem_id: str = ""

    @property
    def solver_id(self) -> str:
        return solver_label(self.options_id, self.options, self.formulation, self.start)

    @property
    def problem(self) -> str:
        return self.problem_id or self.case.name


def solver_label(options_id: str, options: SolveOptions, form: Formulation, start: StartMode) -> str:
    """Solver id of a run: ``<options id>/<formulation>/<start>``, engine appended to the id when not ldl."""
    if options.linear_solver != "ldl":
        options_id = f"{options_id}@{options.linear_solver}"
    return f"{options_id}/{form.name}/{start.value}"


def _is_url(source: str) -> bool:
    return source.startswith("http://") or source.startswith("https://")


def _stem(source: str) -> str:
    return PurePosixPath(urlparse(source).path).stem if _is_url(source) else Path(source).stem


def problem_ids(sources: Sequence[str], names: Sequence[str | None]) -> list[str]:
    """Unique problem id for every suite entry.

    An entry keeps its case name when no other entry shares it and falls
    back to its file stem otherwise. Stems that still clash get ``#1``,
    ``#2``, ... in suite order. ``None`` marks a case that failed to load.
    """
    base = [name if name is not None else _stem(src) for src, name in zip(sources, names)]
    shared = Counter(base)
    ids = [b if shared[b] == 1 else _stem(src) for b, src in zip(base, sources)]
    totals, seen = Counter(ids), Counter[str]()
    out: list[str] = []
    for pid in ids:
        if totals[pid] > 1:
            seen[pid] += 1
            pid = f"{pid}#{seen[pid]}"
        out.append(pid)
    return out


def load_suite(path: str | Path) -> SuiteSpec:
    """Read and validate a suite file.

    Raises:
        SuiteSpecError: Unreadable TOML, unknown case path or malformed options
    """
    path = Path(path)
    try:
        data = tomllib.loads(path.read_text(encoding="utf-8"))
    except OSError as err:
        raise SuiteSpecError(f"Cannot read suite file {path}: {err}") from err
    except tomllib.TOMLDecodeError as err:
        raise SuiteSpecError(f"Malformed suite file {path}: {err}") from err
    return suite_from_dict(data, base_dir=path.parent)


def suite_from_dict(data: dict[str, Any], base_dir: Path | None = None) -> SuiteSpec:
    """Validate a suite description already parsed into a dictionary."""
    base_dir = base_dir or Path.cwd()

    raw_cases = data.get("cases")
    if not raw_cases or not isinstance(raw_cases, list):
        raise SuiteSpecError("Suite needs a non-empty 'cases' list")
    cases = []
    for raw in raw_cases:
        source = str(raw)
        if not _is_url(source):
            resolved = Path(source) if Path(source).is_absolute() else base_dir / source
            if not resolved.is_file():
                raise SuiteSpecError(f"Unknown case path: {source}")
            source = str(resolved)
        cases.append(source)

    try:
        formulations = tuple(Formulation.from_name(f) for f in data.get("formulations", [])) or ALL_FORMULATIONS
        starts = tuple(StartMode(s) for s in data.get("starts", ["mpc"]))
    except ValueError as err:
        raise SuiteSpecError(str(err)) from err
    if not starts:
        raise SuiteSpecError("Suite needs at least one start mode")

    time_limit = data.get("time_limit")
    linear_solver = str(data.get("linear_solver", "ldl"))
    try:
        get_linear_solver(linear_solver)
    except ValueError as err:
        raise SuiteSpecError(str(err)) from err

    tables = data.get("options") or [{"id": "default"}]
    option_sets = []
    for i, table in enumerate(tables):
        if not isinstance(table, dict):
            raise SuiteSpecError(f"options[{i}] must be a table")
        option_id = str(table.get("id", f"options{i + 1}"))
        unknown = set(table) - {"id", *OPTION_KEYS}
        if unknown:
            raise SuiteSpecError(f"options '{option_id}': unknown keys {', '.join(sorted(unknown))}")
        kwargs = {k: v for k, v in table.items() if k != "id"}
        try:
            opts = SolveOptions(**kwargs, time_limit=time_limit, linear_solver=linear_solver)
        except (TypeError, ValueError) as err:
            raise SuiteSpecError(f"options '{option_id}': {err}") from err
        option_sets.append(OptionSet(option_id, opts))

    ids = [o.id for o in option_sets]
    if len(set(ids)) != len(ids):
        raise SuiteSpecError(f"Duplicate option ids: {', '.join(ids)}")

    return SuiteSpec(
        cases=tuple(cases),
        formulations=formulations,
        starts=starts,
        option_sets=tuple(option_sets),
        time_limit=time_limit,
        linear_solver=linear_solver,
    )


def run_task(task: RunTask) -> RunRecord:
    """Execute one run; every failure becomes an unsuccessful record."""
    t0 = time.perf_counter()
    try:
        net = build_network(task.case)
        result = solve_opf(net, task.formulation, task.start, task.options)
    except GridOptError as err:
        _LOGGER.warning("Run %s on %s failed: %s", task.solver_id, task.problem, err)
        return _failed_record(task.solver_id, task.problem, time.perf_counter() - t0)
    except Exception as err:  # noqa: BLE001
        _LOGGER.warning("Run %s on %s raised %s: %s", task.solver_id, task.problem, type(err).__name__, err)
        return _failed_record(task.solver_id, task.problem, time.perf_counter() - t0)

    if not result.success:
        _LOGGER.warning("Run %s on %s ended with status %s", task.solver_id, task.problem, result.status)
    return RunRecord(
        solver_id=task.solver_id,
        problem_id=task.problem,
        metrics={"time": result.wall_time, "iters": float(result.iterations), "memory": float(result.peak_mem)},
        success=result.success,
        objective=result.f if math.isfinite(result.f) else None,
    )


def _failed_record(solver_id: str, problem_id: str, elapsed: float) -> RunRecord:
    return RunRecord(
        solver_id=solver_id,
        problem_id=problem_id,
        metrics={"time": elapsed, "iters": 0.0, "memory": 0.0},
        success=False,
    )


async def _load_cases(
    sources: tuple[str, ...], session: aiohttp.ClientSession | None
) -> list[CaseData | GridOptError]:
    loaded: list[CaseData | GridOptError] = []
    for source in sources:
        try:
            loaded.append(await load_case(source if _is_url(source) else Path(source), session))
        except GridOptError as err:
            _LOGGER.warning("Cannot load case %s: %s", source, err)
            loaded.append(err)
    return loaded


def expand_tasks(spec: SuiteSpec, cases: list[CaseData], ids: Sequence[str] | None = None) -> list[RunTask]:
    """All combinations of a suite in a fixed order, ``ids`` naming the problem of each case."""
    ids = ids if ids is not None else [case.name for case in cases]
    return [
        RunTask(case, form, start, opt.id, opt.options, pid)
        for case, pid in zip(cases, ids)
        for form in spec.formulations
        for start in spec.starts
        for opt in spec.option_sets
    ]


async def run_suite_async(
    spec: SuiteSpec,
    jobs: int = 1,
    session: aiohttp.ClientSession | None = None,
) -> list[RunRecord]:
    """Run a suite, dispatching runs to a process pool of ``jobs`` workers.

    Args:
        spec: Parsed suite
        jobs: Worker processes; 1 runs everything in one worker thread
        session: Optional aiohttp session for cases given as URLs

    Returns:
        Records sorted by (solver_id, problem_id)
    """
    if jobs < 1:
        raise SuiteSpecError(f"jobs must be at least 1, got {jobs}")

    loaded = await _load_cases(spec.cases, session)
    ids = problem_ids(spec.cases, [c.name if isinstance(c, CaseData) else None for c in loaded])
    cases: list[CaseData] = []
    case_ids: list[str] = []
    records: list[RunRecord] = []
    for item, problem in zip(loaded, ids):
        if isinstance(item, CaseData):
            cases.append(item)
            case_ids.append(problem)
            continue
        records.extend(
            _failed_record(solver_label(opt.id, opt.options, form, start), problem, 0.0)
            for form in spec.formulations
            for start in spec.starts
            for opt in spec.option_sets
        )

    tasks = expand_tasks(spec, cases, case_ids)
    _LOGGER.debug("Running %d suite runs on %d worker(s)", len(tasks), jobs)

    if jobs == 1:
        for task in tasks:
            records.append(await asyncio.to_thread(run_task, task))
    else:
        loop = asyncio.get_running_loop()
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records.extend(await asyncio.gather(*(loop.run_in_executor(pool, run_task, t) for t in tasks)))

    return sorted(records, key=lambda r: (r.solver_id, r.problem_id))


def run_suite(spec: SuiteSpec, jobs: int = 1) -> list[RunRecord]:
    """Blocking counterpart of :func:`run_suite_async`."""
    return asyncio.run(run_suite_async(spec, jobs))
