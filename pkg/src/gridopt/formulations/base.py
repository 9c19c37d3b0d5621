"""Evaluation core shared by every OPF formulation.

Constraint values and derivatives are produced in Cartesian voltage
coordinates over the variable vector ``[Vr; Vi; Pg; Qg]``. Polar models map
them to ``[Va; Vm; Pg; Qg]`` with the chain rule.
"""

from __future__ import annotations

import logging
from typing import ClassVar

import numpy as np
import scipy.sparse as sp

from ..derivatives import dS_dV_cartesian, injection, weighted_injection_hessian
from ..errors import UnsupportedCost, ZeroVoltageDomain
from ..network import POLYNOMIAL, Network
from ..types import BalanceKind, Formulation

_LOGGER = logging.getLogger(__name__)

MAX_COST_DEGREE = 3


def _diag(v: np.ndarray) -> sp.csr_matrix:
    return sp.diags(v, format="csr")


def polynomial_costs(net: Network) -> list[np.ndarray]:
    """Per-generator cost polynomials (highest degree first, $/h of MW).

    Raises:
        UnsupportedCost: Piecewise-linear cost or degree above 3
    """
    gen = net.gen
    if len(gen.cost) == 0:
        _LOGGER.debug("Case %s has no gencost table, using zero costs", net.name)
        return [np.zeros(1) for _ in range(net.n_gen)]

    costs = []
    for g, (model, coeffs) in enumerate(zip(gen.cost_model, gen.cost)):
        if model != POLYNOMIAL:
            raise UnsupportedCost(f"Generator {g + 1} at bus {net.bus.ids[gen.bus[g]]}: cost model {model} is not polynomial")
        if len(coeffs) - 1 > MAX_COST_DEGREE:
            raise UnsupportedCost(f"Generator {g + 1}: polynomial cost of degree {len(coeffs) - 1} > {MAX_COST_DEGREE}")
        costs.append(coeffs if len(coeffs) else np.zeros(1))
    return costs


class OpfModel:
    """Objective, nodal balance and branch flow limits of one network.

    Subclasses fix the voltage coordinates and the balance kind and expose
    the ``eval_*`` callbacks of an NLP.
    """

    formulation: ClassVar[Formulation]

    def __init__(self, net: Network) -> None:
        self.net = net
        self.nb = net.n_bus
        self.ng = net.n_gen
        self.n = 2 * self.nb + 2 * self.ng
        self.costs = polynomial_costs(net)

        lim = net.limited_branches
        self.limited = lim
        self.n_lim = len(lim)
        self.rate2 = net.branch.rate[lim] ** 2
        self.Cf_lim = net.Cf[lim]
        self.Ct_lim = net.Ct[lim]
        self.Yf_lim = net.Yf[lim]
        self.Yt_lim = net.Yt[lim]

        self.pg = slice(2 * self.nb, 2 * self.nb + self.ng)
        self.qg = slice(2 * self.nb + self.ng, self.n)

    @property
    def balance_kind(self) -> BalanceKind:
        return self.formulation.balance

    # Objective

    def objective(self, x: np.ndarray) -> float:
        P = x[self.pg] * self.net.base_mva
        return float(sum(np.polyval(c, p) for c, p in zip(self.costs, P)))

    def objective_gradient(self, x: np.ndarray) -> np.ndarray:
        base = self.net.base_mva
        P = x[self.pg] * base
        grad = np.zeros(self.n)
        grad[self.pg] = [base * np.polyval(np.polyder(c), p) for c, p in zip(self.costs, P)]
        return grad

    def objective_hessian_diag(self, x: np.ndarray) -> np.ndarray:
        base = self.net.base_mva
        P = x[self.pg] * base
        diag = np.zeros(self.n)
        diag[self.pg] = [base**2 * np.polyval(np.polyder(c, 2), p) for c, p in zip(self.costs, P)]
        return diag

    # Nodal balance in Cartesian coordinates

    def balance(self, V: np.ndarray, Sg: np.ndarray) -> np.ndarray:
        """Complex mismatch per bus."""
        net = self.net
        if self.balance_kind is BalanceKind.POWER:
            return injection(None, net.Ybus, V) + net.Sd - net.Cg @ Sg
        self._check_domain(V)
        Sinj = net.Cg @ Sg - net.Sd
        return net.Ybus @ V - np.conj(Sinj / V)

    def balance_jacobian(self, V: np.ndarray, Sg: np.ndarray) -> sp.csr_matrix:
        """Real Jacobian of ``[Re; Im]`` of the balance over ``[Vr; Vi; Pg; Qg]``."""
        net = self.net
        if self.balance_kind is BalanceKind.POWER:
            dVr, dVi = dS_dV_cartesian(None, net.Ybus, V)
            dPg = -net.Cg
            dQg = -1j * net.Cg
        else:
            self._check_domain(V)
            a = np.conj(net.Cg @ Sg - net.Sd)
            z = np.conj(V)
            d = _diag(a / z**2)
            dVr = net.Ybus + d
            dVi = 1j * net.Ybus - 1j * d
            inv = _diag(1.0 / z)
            dPg = -inv @ net.Cg
            dQg = 1j * inv @ net.Cg
        blocks = [sp.csr_matrix(m) for m in (dVr, dVi, dPg, dQg)]
        return sp.bmat([[m.real for m in blocks], [m.imag for m in blocks]], format="csr")

    def balance_hessian(self, V: np.ndarray, Sg: np.ndarray, lam: np.ndarray) -> sp.csr_matrix:
        """Hessian of ``lam^T [Re; Im](balance)`` over ``[Vr; Vi; Pg; Qg]``."""
        nb, n = self.nb, self.n
        w = lam[:nb] - 1j * lam[nb:]
        if self.balance_kind is BalanceKind.POWER:
            Hv = weighted_injection_hessian(None, self.net.Ybus, w)
            return sp.block_diag([Hv, sp.csr_matrix((2 * self.ng, 2 * self.ng))], format="csr")

        self._check_domain(V)
        net = self.net
        a = np.conj(net.Cg @ Sg - net.Sd)
        z = np.conj(V)
        # The nonlinear term enters the mismatch with a minus sign
        k3 = 2.0 * w * a / z**3
        k2 = w / z**2
        buses = np.arange(nb)
        gb = net.gen.bus
        gi = np.arange(self.ng)
        pg = 2 * nb + gi
        qg = 2 * nb + self.ng + gi

        rows = [buses, buses, nb + buses, gb, pg, nb + gb, pg, gb, qg, nb + gb, qg]
        cols = [buses, nb + buses, buses, pg, gb, pg, nb + gb, qg, gb, qg, nb + gb]
        vals = [
            -k3.real,
            -(-1j * k3).real,
            -(-1j * k3).real,
            k2[gb].real,
            k2[gb].real,
            -(1j * k2[gb]).real,
            -(1j * k2[gb]).real,
            -(1j * k2[gb]).real,
            -(1j * k2[gb]).real,
            -k2[gb].real,
            -k2[gb].real,
        ]
        H = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n))
        Hvv = sp.coo_matrix((k3.real, (nb + buses, nb + buses)), shape=(n, n))
        return (H + Hvv).tocsr()

    # Branch flow limits |S|^2 - rate^2 <= 0

    def flows(self, V: np.ndarray) -> np.ndarray:
        Sf = injection(self.Cf_lim, self.Yf_lim, V)
        St = injection(self.Ct_lim, self.Yt_lim, V)
        return np.r_[np.abs(Sf) ** 2 - self.rate2, np.abs(St) ** 2 - self.rate2]

    def flows_jacobian(self, V: np.ndarray) -> sp.csr_matrix:
        """Jacobian of the flow rows over ``[Vr; Vi; Pg; Qg]``."""
        if self.n_lim == 0:
            return sp.csr_matrix((0, self.n))
        parts = []
        for C, Y in ((self.Cf_lim, self.Yf_lim), (self.Ct_lim, self.Yt_lim)):
            S = injection(C, Y, V)
            dVr, dVi = dS_dV_cartesian(C, Y, V)
            P, Q = _diag(S.real), _diag(S.imag)
            parts.append(
                sp.hstack(
                    [
                        2 * (P @ dVr.real + Q @ dVr.imag),
                        2 * (P @ dVi.real + Q @ dVi.imag),
                        sp.csr_matrix((self.n_lim, 2 * self.ng)),
                    ]
                )
            )
        return sp.vstack(parts, format="csr")

    def flows_hessian(self, V: np.ndarray, mu: np.ndarray) -> sp.csr_matrix:
        """Hessian of ``mu^T flows`` over ``[Vr; Vi; Pg; Qg]``."""
        if self.n_lim == 0:
            return sp.csr_matrix((self.n, self.n))
        nl = self.n_lim
        Hv = sp.csr_matrix((2 * self.nb, 2 * self.nb))
        for k, (C, Y) in enumerate(((self.Cf_lim, self.Yf_lim), (self.Ct_lim, self.Yt_lim))):
            m = mu[k * nl : (k + 1) * nl]
            S = injection(C, Y, V)
            dVr, dVi = dS_dV_cartesian(C, Y, V)
            dS = sp.hstack([dVr, dVi], format="csr")
            dP, dQ = sp.csr_matrix(dS.real), sp.csr_matrix(dS.imag)
            M = _diag(m)
            Hv = Hv + 2 * (dP.T @ M @ dP + dQ.T @ M @ dQ)
            Hv = Hv + 2 * weighted_injection_hessian(C, Y, m * np.conj(S))
        return sp.block_diag([Hv, sp.csr_matrix((2 * self.ng, 2 * self.ng))], format="csr")

    def _check_domain(self, V: np.ndarray) -> None:
        if np.any(V == 0):
            bus = int(np.flatnonzero(V == 0)[0])
            raise ZeroVoltageDomain(f"Current balance undefined at bus {self.net.bus.ids[bus]} (V = 0)")
