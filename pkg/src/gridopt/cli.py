"""Command line entry point: ``gridopt {solve,bench,profile,stats}``."""

from __future__ import annotations

import argparse
import asyncio
import json
import logging
import sys
from collections.abc import Sequence
from pathlib import Path
from typing import Any

import numpy as np

from .bench import load_suite, run_suite_async
from .case_loader import load_case
from .errors import GridOptError
from .ipm import SolveOptions, solve_opf
from .network import build_network, case_statistics
from .opf import build_nlp, split_solution
from .plotting import profile_svg, render_profile_png
from .power_flow import branch_flows
from .profiles import (
    METRICS,
    compute_profile,
    emit_profile,
    emit_records,
    read_records,
    validate_objectives,
    write_artifact,
)
from .types import Formulation, MuRule, StartMode

_LOGGER = logging.getLogger(__name__)

FORMULATION_NAMES = ("polar-power", "polar-current", "cart-power", "cart-current")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gridopt", description="AC optimal power flow and solver benchmarks")
    parser.add_argument("--log-level", default="WARNING", help="Python logging level (default WARNING)")
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", help="Solve the OPF of one case")
    solve.add_argument("--case", required=True, help="Case file (.m or .json) or http(s) URL")
    solve.add_argument("--formulation", choices=FORMULATION_NAMES, default="polar-power")
    solve.add_argument("--start", choices=[m.value for m in StartMode], default=StartMode.CASE_DATA.value)
    solve.add_argument("--tol", type=float, default=1e-4)
    solve.add_argument("--max-iter", type=int, default=500)
    solve.add_argument("--mu-rule", choices=[r.value for r in MuRule], default=MuRule.SCALED_COMPLEMENTARITY.value)
    solve.add_argument("--no-step-control", action="store_true")
    solve.add_argument("--linear-solver", default="ldl")
    solve.add_argument("--time-limit", type=float, default=None)
    solve.add_argument("--verbose", action="store_true", help="Print the iteration log")
    solve.add_argument("--out", help="Result JSON path (default stdout)")

    bench = sub.add_parser("bench", help="Run a benchmark suite")
    bench.add_argument("--suite", required=True, help="Suite TOML file")
    bench.add_argument("--jobs", type=int, default=1)
    bench.add_argument("--out", required=True, help="Run records CSV path")

    profile = sub.add_parser("profile", help="Performance profiles from run records")
    profile.add_argument("--runs", required=True, help="Run records CSV")
    profile.add_argument("--metric", choices=METRICS, default="time")
    profile.add_argument("--out", required=True, help="Profile CSV path")
    profile.add_argument("--svg", help="Step plot SVG path")
    profile.add_argument("--png", help="Step plot PNG path")

    stats = sub.add_parser("stats", help="Problem dimensions of a case")
    stats.add_argument("--case", required=True)
    return parser


def _solve(args: argparse.Namespace) -> int:
    case = asyncio.run(load_case(args.case))
    net = build_network(case)
    form = Formulation.from_name(args.formulation)
    opts = SolveOptions(
        tol=args.tol,
        max_iter=args.max_iter,
        mu_rule=MuRule(args.mu_rule),
        step_control=not args.no_step_control,
        linear_solver=args.linear_solver,
        time_limit=args.time_limit,
        verbose=args.verbose,
        log_stream=sys.stderr if args.out is None else None,
    )
    prob = build_nlp(net, form)
    result = solve_opf(net, form, StartMode(args.start), opts, prob=prob)
    solution = split_solution(prob, result.x, net.base_mva)

    V = solution["Vm"] * np.exp(1j * np.deg2rad(solution["Va"]))
    Sf, St = branch_flows(net, V)
    payload: dict[str, Any] = {
        "case": net.name,
        "formulation": form.name,
        "start": args.start,
        "status": result.status.value,
        "objective": result.f,
        "iterations": result.iterations,
        "conditions": result.kkt_residuals._asdict(),
        "wall_time": result.wall_time,
        "peak_mem": result.peak_mem,
        "factorizations": result.factorization_count,
        "message": result.message,
        "bus": {"Va": solution["Va"].tolist(), "Vm": solution["Vm"].tolist()},
        "gen": {"Pg": solution["Pg"].tolist(), "Qg": solution["Qg"].tolist()},
        "branch": {
            "Pf": (Sf.real * net.base_mva).tolist(),
            "Qf": (Sf.imag * net.base_mva).tolist(),
            "Pt": (St.real * net.base_mva).tolist(),
            "Qt": (St.imag * net.base_mva).tolist(),
        },
    }
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if args.out:
        write_artifact(args.out, text)
    else:
        sys.stdout.write(text)
    return 0 if result.success else 1


def _bench(args: argparse.Namespace) -> int:
    spec = load_suite(args.suite)
    records = asyncio.run(run_suite_async(spec, args.jobs))
    write_artifact(args.out, emit_records(records))
    for problem, a, b, rel in validate_objectives(records):
        _LOGGER.warning("Objectives disagree on %s: %s vs %s (relative %.2e)", problem, a, b, rel)
    solved = sum(r.success for r in records)
    print(f"{solved}/{len(records)} runs solved, records written to {args.out}")
    return 0


def _profile(args: argparse.Namespace) -> int:
    try:
        text = Path(args.runs).read_text(encoding="utf-8")
    except OSError as err:
        raise GridOptError(f"Cannot read run records {args.runs}: {err}") from err
    curves = compute_profile(read_records(text), args.metric)
    write_artifact(args.out, emit_profile(curves))
    if args.svg:
        write_artifact(args.svg, profile_svg(curves))
    if args.png:
        render_profile_png(curves, args.png)
    return 0


def _stats(args: argparse.Namespace) -> int:
    net = build_network(asyncio.run(load_case(args.case)))
    stats = case_statistics(net)
    print("case        n_b    n_g    n_l   n_lc   nvar   |g|    |h|")
    print(
        f"{stats.name:<10} {stats.n_b:>5} {stats.n_g:>6} {stats.n_l:>6} {stats.n_lc:>6} "
        f"{stats.nvar:>6} {stats.n_eq:>6} {stats.n_ineq:>6}"
    )
    return 0


_COMMANDS = {"solve": _solve, "bench": _bench, "profile": _profile, "stats": _stats}


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=args.log_level.upper(), format="%(levelname)s %(name)s: %(message)s")
    try:
        return _COMMANDS[args.command](args)
    except GridOptError as err:
        _LOGGER.error("%s", err)
        print(f"gridopt: error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
