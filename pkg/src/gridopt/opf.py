"""OPF problem construction and initial guesses."""

from __future__ import annotations

import logging

import numpy as np

from .errors import Diverged, PfDiverged
from .network import Network
from .nlp import NlpProblem
from .power_flow import newton_pf
from .registry import get_formulation
from .types import Formulation, StartMode

_LOGGER = logging.getLogger(__name__)


def build_nlp(net: Network, form: Formulation) -> NlpProblem:
    """Build the OPF nonlinear program of a network in one formulation.

    Args:
        net: Validated network
        form: Voltage coordinates and balance kind

    Returns:
        NlpProblem with analytic derivatives

    Raises:
        UnsupportedCost: Piecewise-linear cost or polynomial degree above 3
    """
    model = get_formulation(form)(net)
    x_min, x_max = model.bounds()
    prob = NlpProblem(
        n=model.n,
        m_eq=model.m_eq,
        m_ineq=model.m_ineq,
        x_min=x_min,
        x_max=x_max,
        eval_f=model.objective,
        eval_grad_f=model.objective_gradient,
        eval_g=model.eval_g,
        eval_h=model.eval_h,
        eval_Jg=model.eval_Jg,
        eval_Jh=model.eval_Jh,
        eval_H=model.eval_H,
        var_layout=dict(model.var_layout),
        name=f"{net.name}/{form.name}",
    )
    _LOGGER.debug("Built %s: n=%d, m_eq=%d, m_ineq=%d", prob.name, prob.n, prob.m_eq, prob.m_ineq)
    return prob


def flat_point(x_min: np.ndarray, x_max: np.ndarray) -> np.ndarray:
    """Bound midpoints, one unit inside a one-sided bound, zero when free."""
    lo_ok, hi_ok = np.isfinite(x_min), np.isfinite(x_max)
    x = np.zeros_like(x_min, dtype=float)
    both = lo_ok & hi_ok
    x[both] = 0.5 * (x_min[both] + x_max[both])
    x[lo_ok & ~hi_ok] = x_min[lo_ok & ~hi_ok] + 1.0
    x[hi_ok & ~lo_ok] = x_max[hi_ok & ~lo_ok] - 1.0
    return x


def initial_guess(net: Network, prob: NlpProblem, mode: StartMode | str) -> np.ndarray:
    """Starting point for the interior-point solver.

    Flat starts follow :func:`flat_point`. In Cartesian coordinates the
    voltage block of a flat start is the polar flat voltage (midpoint
    magnitudes at the reference angle) mapped to rectangular form, since the
    midpoint of the symmetric rectangular box is the origin.

    Args:
        net: Network the problem was built from
        prob: Problem from :func:`build_nlp`
        mode: flat, mpc (case data) or pf (power flow solution)

    Returns:
        Starting vector of length prob.n

    Raises:
        PfDiverged: The seeding power flow did not converge
    """
    mode = StartMode(mode)
    layout = prob.var_layout
    cartesian = "Vre" in layout

    if mode is StartMode.FLAT:
        x = flat_point(prob.x_min, prob.x_max)
        if cartesian:
            Vm = flat_point(net.bus.Vmin, net.bus.Vmax)
            Va = np.full(net.n_bus, net.bus.Va0[net.ref])
            _set_voltage(x, layout, Va, Vm)
        return np.clip(x, prob.x_min, prob.x_max)

    if mode is StartMode.CASE_DATA:
        Va, Vm = net.bus.Va0, net.bus.Vm0
        Pg, Qg = net.gen.Pg0, net.gen.Qg0
    else:
        try:
            sol = newton_pf(net)
        except Diverged as err:
            raise PfDiverged(f"Power flow start for {net.name} failed: {err}") from err
        Va, Vm, Pg, Qg = sol.Va, sol.Vm, sol.Pg, sol.Qg

    x = np.zeros(prob.n)
    _set_voltage(x, layout, Va, Vm)
    x[layout["Pg"]] = Pg
    x[layout["Qg"]] = Qg
    return np.clip(x, prob.x_min, prob.x_max)


def _set_voltage(x: np.ndarray, layout: dict[str, slice], Va: np.ndarray, Vm: np.ndarray) -> None:
    if "Vre" in layout:
        x[layout["Vre"]] = Vm * np.cos(Va)
        x[layout["Vim"]] = Vm * np.sin(Va)
    else:
        x[layout["Va"]] = Va
        x[layout["Vm"]] = Vm


def split_solution(prob: NlpProblem, x: np.ndarray, base_mva: float = 100.0) -> dict[str, np.ndarray]:
    """Voltages (Va in degrees, Vm in pu) and generator outputs (MW, MVAr) of a solution vector."""
    layout = prob.var_layout
    if "Vre" in layout:
        V = x[layout["Vre"]] + 1j * x[layout["Vim"]]
        Va, Vm = np.angle(V), np.abs(V)
    else:
        Va, Vm = x[layout["Va"]], x[layout["Vm"]]
    return {
        "Va": np.rad2deg(Va),
        "Vm": np.asarray(Vm, dtype=float),
        "Pg": x[layout["Pg"]] * base_mva,
        "Qg": x[layout["Qg"]] * base_mva,
    }
