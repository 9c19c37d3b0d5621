"""Newton-Raphson AC power flow."""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .derivatives import dS_dV_polar, injection
from .errors import Diverged, SingularJacobian
from .network import Network
from .types import BusType

_LOGGER = logging.getLogger(__name__)

PF_TOL = 1e-8
PF_MAX_ITER = 30


@dataclass(frozen=True)
class PfSolution:
    """Converged power flow state.

    Attributes:
        Vm, Va: Bus voltage magnitude (pu) and angle (rad)
        Pg, Qg: Generator injections (pu), slack absorbed at the reference and PV buses
        iterations: Newton iterations performed
        max_mismatch: Infinity norm of the final mismatch (pu)
        converged: Whether max_mismatch <= tolerance
    """

    Vm: np.ndarray
    Va: np.ndarray
    Pg: np.ndarray
    Qg: np.ndarray
    iterations: int
    max_mismatch: float
    converged: bool

    @property
    def V(self) -> np.ndarray:
        return self.Vm * np.exp(1j * self.Va)


def newton_pf(net: Network, tol: float = PF_TOL, max_iter: int = PF_MAX_ITER, strict: bool = True) -> PfSolution:
    """Solve the AC power flow with full Newton on the polar mismatch equations.

    Unknowns are the angles at PV and PQ buses and the magnitudes at PQ
    buses; the seed is the case voltage (generator setpoints at PV and
    reference buses). Reactive limits are not enforced.

    Args:
        net: Network to solve
        tol: Mismatch tolerance (pu, infinity norm)
        max_iter: Newton iteration limit
        strict: Raise Diverged instead of returning an unconverged solution

    Returns:
        PfSolution

    Raises:
        Diverged: Iteration limit reached with mismatch above tol (strict mode)
        SingularJacobian: The Newton system could not be solved
    """
    if tol <= 0:
        raise ValueError(f"Power flow tolerance must be positive, got {tol}")

    pv, pq = net.pv, net.pq
    pvpq = np.r_[pv, pq]
    n_pvpq, n_pq = len(pvpq), len(pq)

    Sbus = net.Cg @ (net.gen.Pg0 + 1j * net.gen.Qg0) - net.Sd
    V = net.bus.Vm0 * np.exp(1j * net.bus.Va0)
    Va, Vm = net.bus.Va0.copy(), net.bus.Vm0.copy()

    def mismatch(V: np.ndarray) -> np.ndarray:
        mis = injection(None, net.Ybus, V) - Sbus
        return np.r_[mis[pvpq].real, mis[pq].imag]

    F = mismatch(V)
    norm = float(np.max(np.abs(F))) if F.size else 0.0
    iterations = 0
    _LOGGER.debug("PF it %d: max mismatch %.3e", iterations, norm)

    while norm > tol and iterations < max_iter:
        iterations += 1
        J = pf_jacobian(net, V, pv, pq)
        with warnings.catch_warnings():
            warnings.simplefilter("error", spla.MatrixRankWarning)
            try:
                dx = spla.spsolve(J.tocsc(), -F)
            except (spla.MatrixRankWarning, RuntimeError) as err:
                raise SingularJacobian(f"Power flow Jacobian is singular at iteration {iterations}") from err
        if not np.all(np.isfinite(dx)):
            raise SingularJacobian(f"Power flow Jacobian is singular at iteration {iterations}")

        Va[pvpq] += dx[:n_pvpq]
        Vm[pq] += dx[n_pvpq : n_pvpq + n_pq]
        V = Vm * np.exp(1j * Va)

        F = mismatch(V)
        norm = float(np.max(np.abs(F)))
        _LOGGER.debug("PF it %d: max mismatch %.3e", iterations, norm)

    converged = norm <= tol
    if not converged:
        msg = f"Power flow did not converge in {max_iter} iterations (mismatch {norm:.3e} > {tol:.1e})"
        if strict:
            raise Diverged(msg)
        _LOGGER.warning(msg)

    Pg, Qg = _slack_dispatch(net, V)
    return PfSolution(
        Vm=Vm, Va=Va, Pg=Pg, Qg=Qg, iterations=iterations, max_mismatch=norm, converged=converged
    )


def pf_jacobian(net: Network, V: np.ndarray, pv: np.ndarray, pq: np.ndarray) -> sp.csr_matrix:
    """Jacobian of the mismatch ``[dP(pv, pq); dQ(pq)]`` with respect to ``[Va(pv, pq); Vm(pq)]``."""
    pvpq = np.r_[pv, pq]
    dS_dVa, dS_dVm = dS_dV_polar(None, net.Ybus, V)
    J11 = dS_dVa[pvpq][:, pvpq].real
    J12 = dS_dVm[pvpq][:, pq].real
    J21 = dS_dVa[pq][:, pvpq].imag
    J22 = dS_dVm[pq][:, pq].imag
    return sp.bmat([[J11, J12], [J21, J22]], format="csr")


def _slack_dispatch(net: Network, V: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Generator outputs implied by a solved voltage profile.

    The reference bus takes the active power slack and every generator
    bus the reactive slack, split equally among co-located generators.
    """
    gen = net.gen
    Sinj = injection(None, net.Ybus, V) + net.Sd
    Pg, Qg = gen.Pg0.copy(), gen.Qg0.copy()
    counts = np.bincount(gen.bus, minlength=net.n_bus)

    for b in np.unique(gen.bus):
        at_bus = np.flatnonzero(gen.bus == b)
        if net.bus.kind[b] in (BusType.PV, BusType.REF):
            Qg[at_bus] = Sinj[b].imag / counts[b]
        if b == net.ref:
            Pg[at_bus] += (Sinj[b].real - Pg[at_bus].sum()) / counts[b]
    return Pg, Qg


def branch_flows(net: Network, V: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Complex power entering each branch at its from and to ends (pu)."""
    return injection(net.Cf, net.Yf, V), injection(net.Ct, net.Yt, V)


def pf_solution_voltage(sol: PfSolution) -> np.ndarray:
    return sol.V
