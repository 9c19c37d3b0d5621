"""gridopt - AC optimal power flow with a primal-dual interior-point solver."""

from .bench import SuiteSpec, load_suite, run_suite, run_suite_async
from .case_io import CaseData, parse_case, parse_mirror, write_case, write_mirror
from .case_loader import fetch_case, load_case, read_case
from .ipm import SolveOptions, SolveResult, ipm_solve, solve_opf
from .network import Network, build_network, case_statistics
from .nlp import NlpProblem
from .opf import build_nlp, initial_guess, split_solution
from .power_flow import PfSolution, newton_pf
from .profiles import ProfileCurve, RunRecord, compute_profile, emit_profile, emit_records, read_records
from .types import ALL_FORMULATIONS, BalanceKind, Formulation, Inertia, MuRule, SolveStatus, StartMode, VoltageCoordinates

__version__ = "0.1.0"

__all__ = [
    "load_case",
    "fetch_case",
    "read_case",
    "parse_case",
    "parse_mirror",
    "write_case",
    "write_mirror",
    "CaseData",
    "Network",
    "build_network",
    "case_statistics",
    "PfSolution",
    "newton_pf",
    "NlpProblem",
    "build_nlp",
    "initial_guess",
    "split_solution",
    "SolveOptions",
    "SolveResult",
    "ipm_solve",
    "solve_opf",
    "SuiteSpec",
    "load_suite",
    "run_suite",
    "run_suite_async",
    "RunRecord",
    "ProfileCurve",
    "compute_profile",
    "emit_profile",
    "emit_records",
    "read_records",
    "Formulation",
    "ALL_FORMULATIONS",
    "VoltageCoordinates",
    "BalanceKind",
    "StartMode",
    "MuRule",
    "SolveStatus",
    "Inertia",
]
