"""Primal-dual interior-point solver.

The Lagrangian is ``L = f - mu*sum(ln s) + lam_g^T g + lam_h^T (h + s)``
with ``s > 0`` and ``lam_h > 0``. Box bounds are rewritten as inequality
rows (pinned variables as equality rows) before the iteration starts.
"""

from __future__ import annotations

import dataclasses
import logging
import sys
import time
from dataclasses import dataclass, field
from typing import Any, Callable, NamedTuple, TextIO

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import EvalFailure, FactorizationBreakdown, GridOptError, LinearSolverError
from .network import Network
from .nlp import NlpProblem
from .opf import build_nlp, initial_guess
from .registry import get_linear_solver
from .types import Formulation, Inertia, MuRule, SolveStatus, StartMode

_LOGGER = logging.getLogger(__name__)

LOG_HEADER = " it   objective           feascond   gradcond   compcond   mu         alpha_p    alpha_d    delta_x"
LOG_ROW = "%4d  % .10e  %.3e  %.3e  %.3e  %.3e  %.3e  %.3e  %.3e"

SLACK_FLOOR = 1e-2
DELTA_G = 1e-10
DELTA_G_MAX = 1e-4
DELTA_X_MAX = 1e8
EQUILIBRATION_PASSES = 3
STEP_CONTROL_TRIALS = 10
STEP_CONTROL_GROWTH = 1.1
INFEASIBLE_STALL = 50


@dataclass(frozen=True)
class SolveOptions:
    """Interior-point settings.

    Attributes:
        tol: Tolerance of all four convergence conditions
        max_iter: Iteration limit
        xi: Fraction-to-boundary factor
        mu0: Initial barrier parameter (None: 1, or start dependent through solve_opf)
        mu_rule: Barrier update rule
        sigma: Centering factor of the scaled complementarity rule
        kappa, theta: Linear and superlinear factors of the monotone rule
        step_control: Halve steps that increase the KKT residual by more than 10%
        bound_shift: Minimum distance of the start point from finite box bounds
        time_limit: Wall clock limit in seconds (None: unlimited)
        linear_solver: Registered engine name
        verbose: Write the iteration log
        log_stream: Iteration log destination (default stdout)
    """

    tol: float = 1e-4
    max_iter: int = 500
    xi: float = 0.99995
    mu0: float | None = None
    mu_rule: MuRule = MuRule.SCALED_COMPLEMENTARITY
    sigma: float = 0.1
    kappa: float = 0.2
    theta: float = 1.5
    step_control: bool = True
    bound_shift: float = 1e-2
    time_limit: float | None = None
    linear_solver: str = "ldl"
    verbose: bool = False
    log_stream: TextIO | None = field(default=None, compare=False, repr=False)

    def __post_init__(self) -> None:
        if self.tol <= 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if not 0 < self.xi < 1:
            raise ValueError(f"xi must lie in (0, 1), got {self.xi}")
        if not 0 < self.sigma < 1:
            raise ValueError(f"sigma must lie in (0, 1), got {self.sigma}")
        if self.max_iter < 0:
            raise ValueError(f"max_iter must be nonnegative, got {self.max_iter}")
        if self.mu0 is not None and self.mu0 <= 0:
            raise ValueError(f"mu0 must be positive, got {self.mu0}")
        if self.time_limit is not None and self.time_limit <= 0:
            raise ValueError(f"time_limit must be positive, got {self.time_limit}")
        object.__setattr__(self, "mu_rule", MuRule(self.mu_rule))


@dataclass
class IterateState:
    x: np.ndarray
    s: np.ndarray
    lam_g: np.ndarray
    lam_h: np.ndarray
    mu: float
    k: int = 0


class KktResiduals(NamedTuple):
    r_x: np.ndarray
    r_s: np.ndarray
    r_g: np.ndarray
    r_h: np.ndarray

    def max_norm(self) -> float:
        return max((float(np.max(np.abs(r))) for r in self if r.size), default=0.0)


class Conditions(NamedTuple):
    feas: float
    grad: float
    comp: float
    cost: float

    def satisfied(self, tol: float) -> bool:
        return all(c <= tol for c in self)


class NewtonStep(NamedTuple):
    dx: np.ndarray
    ds: np.ndarray
    dlam_g: np.ndarray
    dlam_h: np.ndarray
    delta_x: float
    delta_g: float
    factorizations: int
    kkt_nnz: int


@dataclass
class SolveResult:
    """Outcome of :func:`ipm_solve`.

    Multipliers and slacks refer to the problem after bound rows were
    appended (see :func:`to_barrier_form`).
    """

    status: SolveStatus
    x: np.ndarray
    f: float
    lam_g: np.ndarray
    lam_h: np.ndarray
    s: np.ndarray
    iterations: int
    kkt_residuals: Conditions
    wall_time: float
    peak_mem: int
    factorization_count: int
    mu_history: list[float] = field(default_factory=list)
    message: str = ""

    @property
    def success(self) -> bool:
        return self.status is SolveStatus.OPTIMAL


def _selection(rows: np.ndarray, n: int) -> sp.csr_matrix:
    return sp.csr_matrix((np.ones(len(rows)), (np.arange(len(rows)), rows)), shape=(len(rows), n))


def to_barrier_form(prob: NlpProblem) -> NlpProblem:
    """Fold box bounds into the constraints.

    Finite upper bounds become rows ``x - ub <= 0`` and finite lower bounds
    ``lb - x <= 0``, both appended to h; pinned variables (lb == ub) become
    rows ``x - lb = 0`` appended to g. The result has no bounds.
    """
    n, lo, hi = prob.n, prob.x_min, prob.x_max
    pinned = np.isfinite(lo) & (lo == hi)
    iu = np.flatnonzero(np.isfinite(hi) & ~pinned)
    il = np.flatnonzero(np.isfinite(lo) & ~pinned)
    ip = np.flatnonzero(pinned)
    Eu, El, Ep = _selection(iu, n), _selection(il, n), _selection(ip, n)
    m_eq, m_ineq = prob.m_eq, prob.m_ineq

    def eval_g(x: np.ndarray) -> np.ndarray:
        return np.r_[prob.eval_g(x), x[ip] - lo[ip]]

    def eval_h(x: np.ndarray) -> np.ndarray:
        return np.r_[prob.eval_h(x), x[iu] - hi[iu], lo[il] - x[il]]

    def eval_Jg(x: np.ndarray) -> sp.csr_matrix:
        return sp.vstack([prob.eval_Jg(x), Ep], format="csr")

    def eval_Jh(x: np.ndarray) -> sp.csr_matrix:
        return sp.vstack([prob.eval_Jh(x), Eu, -El], format="csr")

    def eval_H(x: np.ndarray, obj_weight: float, lam_g: np.ndarray, lam_h: np.ndarray) -> sp.csr_matrix:
        return prob.eval_H(x, obj_weight, lam_g[:m_eq], lam_h[:m_ineq])

    return NlpProblem(
        n=n,
        m_eq=m_eq + len(ip),
        m_ineq=m_ineq + len(iu) + len(il),
        x_min=np.full(n, -np.inf),
        x_max=np.full(n, np.inf),
        eval_f=prob.eval_f,
        eval_grad_f=prob.eval_grad_f,
        eval_g=eval_g,
        eval_h=eval_h,
        eval_Jg=eval_Jg,
        eval_Jh=eval_Jh,
        eval_H=eval_H,
        var_layout=dict(prob.var_layout),
        name=prob.name,
    )


def _checked(fn: Callable[..., Any], *args: Any) -> Any:
    """Call a problem callback, turning exceptions and non-finite output into EvalFailure."""
    try:
        out = fn(*args)
    except EvalFailure:
        raise
    except (GridOptError, ArithmeticError, ValueError) as err:
        raise EvalFailure(f"{getattr(fn, '__name__', 'callback')} failed: {err}") from err
    data = out.data if sp.issparse(out) else np.asarray(out)
    if not np.all(np.isfinite(data)):
        raise EvalFailure(f"{getattr(fn, '__name__', 'callback')} returned non-finite values")
    return out


def kkt_residuals(prob: NlpProblem, st: IterateState) -> KktResiduals:
    """Residuals of the perturbed KKT conditions at an iterate.

    ``r_x = grad f + Jg^T lam_g + Jh^T lam_h``, ``r_s = lam_h*s - mu``,
    ``r_g = g(x)``, ``r_h = h(x) + s``.

    Raises:
        EvalFailure: A callback failed or returned non-finite values
    """
    x = st.x
    Jg = _checked(prob.eval_Jg, x)
    Jh = _checked(prob.eval_Jh, x)
    r_x = _checked(prob.eval_grad_f, x) + Jg.T @ st.lam_g + Jh.T @ st.lam_h
    r_s = st.lam_h * st.s - st.mu
    r_g = _checked(prob.eval_g, x)
    r_h = _checked(prob.eval_h, x) + st.s
    return KktResiduals(np.asarray(r_x), r_s, np.asarray(r_g), np.asarray(r_h))


def _inf(v: np.ndarray) -> float:
    return float(np.max(np.abs(v))) if v.size else 0.0


def convergence_conditions(prob: NlpProblem, st: IterateState, f_prev: float | None = None) -> Conditions:
    """Scaled feasibility, gradient, complementarity and cost-change conditions."""
    x, s = st.x, st.s
    g = _checked(prob.eval_g, x)
    h = _checked(prob.eval_h, x)
    res = kkt_residuals(prob, st)
    h_pos = float(np.max(h)) if h.size else 0.0
    feas = max(_inf(g), max(h_pos, 0.0)) / (1.0 + max(_inf(x), _inf(s)))
    grad = _inf(res.r_x) / (1.0 + max(_inf(st.lam_g), _inf(st.lam_h)))
    comp = float(s @ st.lam_h) / (1.0 + _inf(x))
    if f_prev is None:
        cost = 0.0
    else:
        f = float(_checked(prob.eval_f, x))
        cost = abs(f - f_prev) / (1.0 + abs(f_prev))
    return Conditions(feas, grad, comp, cost)


def _reduced_matrix(
    W: sp.spmatrix, Jg: sp.spmatrix, Jh: sp.spmatrix, sigma: np.ndarray, delta_x: float, delta_g: float
) -> sp.csr_matrix:
    n, m = W.shape[0], Jg.shape[0]
    M = W + Jh.T @ sp.diags(sigma) @ Jh
    if delta_x:
        M = M + delta_x * sp.identity(n)
    if m == 0:
        return sp.csr_matrix(M)
    C = -delta_g * sp.identity(m) if delta_g else sp.csr_matrix((m, m))
    return sp.bmat([[M, Jg.T], [Jg, C]], format="csr")


def equilibrate(K: sp.spmatrix, passes: int = EQUILIBRATION_PASSES) -> tuple[sp.csr_matrix, np.ndarray]:
    """Symmetric scaling ``D K D`` with every row's largest entry driven towards one.

    ``D K D`` is congruent to ``K``, so both have the same inertia. The
    stored pattern (explicit zeros included) is kept.

    Returns:
        ``(D K D, d)`` with ``D = diag(d)``
    """
    A = sp.coo_matrix(K, dtype=float, copy=True)
    n = A.shape[0]
    d = np.ones(n)
    for _ in range(passes):
        row_max = np.zeros(n)
        np.maximum.at(row_max, A.row, np.abs(A.data))
        r = np.ones(n)
        nonzero = row_max > 0
        r[nonzero] = 1.0 / np.sqrt(row_max[nonzero])
        A.data *= r[A.row] * r[A.col]
        d *= r
    return A.tocsr(), d


def newton_step(prob: NlpProblem, st: IterateState, engine: Any) -> NewtonStep:
    """Newton direction from the reduced symmetric KKT system with inertia correction.

    Solves ``[[W + Jh^T S^-1 Lam Jh, Jg^T], [Jg, 0]] [dx; dlam_g] =
    [-r_x - Jh^T S^-1 (Lam r_h - r_s); -r_g]`` and recovers
    ``ds = -r_h - Jh dx`` and ``dlam_h = S^-1 (Lam r_h - r_s) + S^-1 Lam Jh dx``.
    The matrix is equilibrated before factorization so that zero pivots are
    judged on a scale that large ``lam_h/s`` ratios do not inflate.
    When the inertia differs from ``(n, m_eq, 0)`` the (1,1) block is shifted
    by ``delta_x I`` and the (2,2) block by ``-delta_g I``; ``delta_g`` grows
    only while zero pivots stand in for missing negative ones.

    Raises:
        FactorizationBreakdown: No shift up to 1e8 gives the required inertia
    """
    x, s, lam_h = st.x, st.s, st.lam_h
    n, m_eq = prob.n, prob.m_eq
    res = kkt_residuals(prob, st)
    W = _checked(prob.eval_H, x, 1.0, st.lam_g, lam_h)
    Jg = _checked(prob.eval_Jg, x)
    Jh = _checked(prob.eval_Jh, x)
    sigma = lam_h / s
    w = (lam_h * res.r_h - res.r_s) / s
    rhs = np.r_[-res.r_x - Jh.T @ w, -res.r_g]
    required = Inertia(n, m_eq, 0)

    delta_x = delta_g = 0.0
    first_shift = 1e-8 * (1.0 + float(spla.norm(W, np.inf))) if W.nnz else 1e-8
    factorizations = 0
    while True:
        K = _reduced_matrix(W, Jg, Jh, sigma, delta_x, delta_g)
        K_scaled, d = equilibrate(K)
        factorizations += 1
        try:
            inertia = engine.factorize(K_scaled)
        except LinearSolverError as err:
            _LOGGER.debug("Factorization failed at delta_x=%.1e: %s", delta_x, err)
            inertia = None
        if inertia == required:
            break
        if delta_x == 0.0:
            delta_x, delta_g = first_shift, DELTA_G
        else:
            delta_x *= 10.0
            if inertia is not None and inertia.n_zero and inertia.n_neg < m_eq:
                delta_g = min(10.0 * delta_g, DELTA_G_MAX)
        if delta_x > DELTA_X_MAX:
            raise FactorizationBreakdown(f"Inertia correction failed (last inertia {inertia}, required {required})")
        _LOGGER.debug("Inertia %s != %s, shifting delta_x=%.3e delta_g=%.1e", inertia, required, delta_x, delta_g)

    sol = d * engine.solve(d * rhs)
    dx, dlam_g = sol[:n], sol[n:]
    Jdx = Jh @ dx
    ds = -res.r_h - Jdx
    dlam_h = w + sigma * Jdx
    return NewtonStep(dx, ds, dlam_g, dlam_h, delta_x, delta_g, factorizations, K.nnz)


def fraction_to_boundary(st: IterateState, step: NewtonStep, xi: float) -> tuple[float, float]:
    """Largest primal and dual step lengths keeping ``s`` and ``lam_h`` strictly positive."""

    def ratio(v: np.ndarray, dv: np.ndarray) -> float:
        neg = dv < 0
        if not np.any(neg):
            return 1.0
        return min(1.0, xi * float(np.min(-v[neg] / dv[neg])))

    return ratio(st.s, step.ds), ratio(st.lam_h, step.dlam_h)


def update_mu(st: IterateState, opts: SolveOptions, subproblem_error: float = 0.0) -> float:
    """Next barrier parameter.

    The scaled complementarity rule returns ``sigma * s^T lam_h / m``. The
    monotone rule returns ``max(tol/10, min(kappa*mu, mu**theta))`` once the
    barrier subproblem error is at most ``10*mu`` and keeps mu otherwise.
    """
    m = len(st.s)
    if opts.mu_rule is MuRule.SCALED_COMPLEMENTARITY:
        return opts.sigma * float(st.s @ st.lam_h) / m if m else 0.0
    if subproblem_error <= 10.0 * st.mu:
        return min(st.mu, max(opts.tol / 10.0, min(opts.kappa * st.mu, st.mu**opts.theta)))
    return st.mu


def _interior_start(prob: NlpProblem, x0: np.ndarray, shift: float) -> np.ndarray:
    """Move x0 at least ``shift`` inside every finite, non-degenerate bound."""
    lo, hi = prob.x_min, prob.x_max
    x = np.array(x0, dtype=float)
    if x.shape != (prob.n,):
        raise ValueError(f"x0 must have shape ({prob.n},), got {x.shape}")
    x = np.where(np.isfinite(x), x, 0.0)
    pinned = np.isfinite(lo) & (lo == hi)
    narrow = np.isfinite(lo) & np.isfinite(hi) & (hi - lo <= 2 * shift) & ~pinned
    x = np.maximum(x, np.where(np.isfinite(lo), lo + shift, -np.inf))
    x = np.minimum(x, np.where(np.isfinite(hi), hi - shift, np.inf))
    x[narrow] = 0.5 * (lo[narrow] + hi[narrow])
    x[pinned] = lo[pinned]
    return x


def _kkt_pattern(prob: NlpProblem, x: np.ndarray) -> sp.csr_matrix:
    """Structure of the reduced KKT matrix with all multipliers set to one."""
    W = _checked(prob.eval_H, x, 1.0, np.ones(prob.m_eq), np.ones(prob.m_ineq))
    Jg = _checked(prob.eval_Jg, x)
    Jh = _checked(prob.eval_Jh, x)
    return _reduced_matrix(abs(W), abs(Jg), abs(Jh), np.ones(prob.m_ineq), 1.0, 1.0)


def _merit(prob: NlpProblem, st: IterateState) -> float:
    return kkt_residuals(prob, st).max_norm()


def _advance(st: IterateState, step: NewtonStep, ap: float, ad: float) -> IterateState:
    return IterateState(
        x=st.x + ap * step.dx,
        s=st.s + ap * step.ds,
        lam_g=st.lam_g + ad * step.dlam_g,
        lam_h=st.lam_h + ad * step.dlam_h,
        mu=st.mu,
        k=st.k + 1,
    )


def _step_control(
    prob: NlpProblem, st: IterateState, step: NewtonStep, ap: float, ad: float
) -> tuple[IterateState, float, float]:
    """Halve the step until the KKT residual grows by at most 10%; keep the smallest trial otherwise."""
    base = _merit(prob, st)
    trial = _advance(st, step, ap, ad)
    for _ in range(STEP_CONTROL_TRIALS):
        try:
            if _merit(prob, trial) <= STEP_CONTROL_GROWTH * base:
                return trial, ap, ad
        except EvalFailure:
            pass
        ap, ad = 0.5 * ap, 0.5 * ad
        trial = _advance(st, step, ap, ad)
    return trial, ap, ad


def _memory(st: IterateState, K_nnz: int, factor_nnz: int) -> int:
    vectors = sum(v.nbytes for v in (st.x, st.s, st.lam_g, st.lam_h))
    # Iterate, direction and values + indices of the KKT matrix and its factor
    return 2 * vectors + 12 * (K_nnz + factor_nnz)


def ipm_solve(prob: NlpProblem, x0: np.ndarray, opts: SolveOptions | None = None) -> SolveResult:
    """Solve an NLP with the primal-dual interior-point method.

    Args:
        prob: Problem with bounds (folded into constraints internally)
        x0: Starting point, moved inside the bounds
        opts: Solver settings

    Returns:
        SolveResult; failures are reported through ``status``
    """
    opts = opts or SolveOptions()
    started = time.perf_counter()
    stream = opts.log_stream or sys.stdout
    bp = to_barrier_form(prob)
    _LOGGER.debug("Solving %s: n=%d, m_eq=%d, m_ineq=%d", bp.name, bp.n, bp.m_eq, bp.m_ineq)

    mu = opts.mu0 if opts.mu0 is not None else 1.0
    x = _interior_start(prob, x0, opts.bound_shift)
    status = SolveStatus.NUMERICAL_FAILURE
    message = ""
    mu_history: list[float] = []
    factorizations = 0
    peak = 0
    f = np.nan
    conditions = Conditions(np.inf, np.inf, np.inf, np.inf)

    try:
        h = _checked(bp.eval_h, x)
        s = np.maximum(-h, SLACK_FLOOR)
        st = IterateState(x=x, s=s, lam_g=np.zeros(bp.m_eq), lam_h=mu / s, mu=mu)
        engine = get_linear_solver(opts.linear_solver)()
        engine.analyze(_kkt_pattern(bp, x))
        f = float(_checked(bp.eval_f, x))
        f_prev = f
        ap = ad = delta_x = 0.0
        best_feas, stall = np.inf, 0
    except (EvalFailure, LinearSolverError) as err:
        _LOGGER.warning("Initialization of %s failed: %s", bp.name, err)
        empty = np.zeros(0)
        return SolveResult(
            status=status,
            x=x,
            f=float("nan"),
            lam_g=empty,
            lam_h=empty,
            s=empty,
            iterations=0,
            kkt_residuals=conditions,
            wall_time=time.perf_counter() - started,
            peak_mem=0,
            factorization_count=0,
            message=str(err),
        )

    if opts.verbose:
        print(LOG_HEADER, file=stream)

    while True:
        try:
            conditions = convergence_conditions(bp, st, f_prev)
        except EvalFailure as err:
            message = str(err)
            status = SolveStatus.NUMERICAL_FAILURE
            break
        if opts.verbose:
            print(LOG_ROW % (st.k, f, *conditions[:3], st.mu, ap, ad, delta_x), file=stream)

        if conditions.satisfied(opts.tol):
            status = SolveStatus.OPTIMAL
            break
        if st.k >= opts.max_iter:
            status = SolveStatus.MAX_ITER
            break
        if opts.time_limit is not None and time.perf_counter() - started > opts.time_limit:
            status = SolveStatus.TIME_LIMIT
            break
        if conditions.feas > 1e3 * opts.tol:
            if conditions.feas < 0.99 * best_feas:
                best_feas, stall = conditions.feas, 0
            else:
                stall += 1
            if stall >= INFEASIBLE_STALL:
                status = SolveStatus.INFEASIBLE
                message = f"Feasibility stalled at {conditions.feas:.3e} for {stall} iterations"
                break
        else:
            stall = 0

        try:
            st.mu = update_mu(st, opts, kkt_residuals(bp, st).max_norm())
            step = newton_step(bp, st, engine)
            factorizations += step.factorizations
            delta_x = step.delta_x
            ap, ad = fraction_to_boundary(st, step, opts.xi)
            if opts.step_control:
                nxt, ap, ad = _step_control(bp, st, step, ap, ad)
            else:
                nxt = _advance(st, step, ap, ad)
            f_new = float(_checked(bp.eval_f, nxt.x))
        except (EvalFailure, FactorizationBreakdown, LinearSolverError) as err:
            message = str(err)
            status = SolveStatus.NUMERICAL_FAILURE
            _LOGGER.debug("Iteration %d of %s failed: %s", st.k, bp.name, err)
            break

        mu_history.append(st.mu)
        peak = max(peak, _memory(nxt, step.kkt_nnz, int(engine.factor_nnz)))
        st = nxt
        f_prev, f = f, f_new

    wall = time.perf_counter() - started
    _LOGGER.debug("%s: %s after %d iterations (%.3f s)", bp.name, status, st.k, wall)
    return SolveResult(
        status=status,
        x=st.x,
        f=f,
        lam_g=st.lam_g,
        lam_h=st.lam_h,
        s=st.s,
        iterations=st.k,
        kkt_residuals=conditions,
        wall_time=wall,
        peak_mem=peak,
        factorization_count=factorizations,
        mu_history=mu_history,
        message=message,
    )


def solve_opf(
    net: Network,
    form: Formulation,
    start: StartMode | str = StartMode.CASE_DATA,
    opts: SolveOptions | None = None,
    prob: NlpProblem | None = None,
) -> SolveResult:
    """Build, seed and solve the OPF of a network.

    Without an explicit ``mu0`` the barrier starts at 1 for a flat start
    and at 1e-2 for case-data and power flow starts.
    """
    opts = opts or SolveOptions()
    start = StartMode(start)
    if opts.mu0 is None:
        opts = dataclasses.replace(opts, mu0=1.0 if start is StartMode.FLAT else 1e-2)
    prob = prob or build_nlp(net, form)
    x0 = initial_guess(net, prob, start)
    return ipm_solve(prob, x0, opts)
