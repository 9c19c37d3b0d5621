"""Cartesian voltage formulations over ``x = [Vre; Vim; Pg; Qg]``."""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from ..network import Network
from ..registry import formulation_handler
from ..types import BalanceKind, Formulation, VoltageCoordinates
from .base import OpfModel


class CartesianModel(OpfModel):
    """Rectangular voltages with the magnitude corridor as nonlinear inequalities.

    Equalities are the nodal balance followed by one row pinning the
    reference angle, ``Vim[ref]*cos(a) - Vre[ref]*sin(a) = 0`` for the case
    reference angle ``a``. Inequalities are the flow limits followed by
    ``Vmin^2 - |V|^2 <= 0`` and ``|V|^2 - Vmax^2 <= 0`` for every bus.
    """

    def __init__(self, net: Network) -> None:
        super().__init__(net)
        nb = self.nb
        self.m_eq = 2 * nb + 1
        self.m_ineq = 2 * self.n_lim + 2 * nb
        self.var_layout = {
            "Vre": slice(0, nb),
            "Vim": slice(nb, 2 * nb),
            "Pg": self.pg,
            "Qg": self.qg,
        }
        angle = float(net.bus.Va0[net.ref])
        self._pin = np.array([-np.sin(angle), np.cos(angle)])
        pin_row = np.zeros(self.n)
        pin_row[net.ref] = self._pin[0]
        pin_row[nb + net.ref] = self._pin[1]
        self._pin_row = sp.csr_matrix(pin_row)

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        net = self.net
        vmax = net.bus.Vmax
        lo = np.r_[-vmax, -vmax, net.gen.Pmin, net.gen.Qmin]
        hi = np.r_[vmax, vmax, net.gen.Pmax, net.gen.Qmax]
        # Half-plane of the reference voltage
        if self._pin[1] >= 0:
            lo[net.ref] = max(lo[net.ref], 0.0)
        else:
            hi[net.ref] = min(hi[net.ref], 0.0)
        return lo, hi

    def voltage(self, x: np.ndarray) -> np.ndarray:
        return x[: self.nb] + 1j * x[self.nb : 2 * self.nb]

    def gen_power(self, x: np.ndarray) -> np.ndarray:
        return x[self.pg] + 1j * x[self.qg]

    def eval_g(self, x: np.ndarray) -> np.ndarray:
        mis = self.balance(self.voltage(x), self.gen_power(x))
        pin = self._pin_row @ x
        return np.r_[mis.real, mis.imag, pin]

    def eval_h(self, x: np.ndarray) -> np.ndarray:
        V = self.voltage(x)
        mag2 = np.abs(V) ** 2
        bus = self.net.bus
        return np.r_[self.flows(V), bus.Vmin**2 - mag2, mag2 - bus.Vmax**2]

    def eval_Jg(self, x: np.ndarray) -> sp.csr_matrix:
        J = self.balance_jacobian(self.voltage(x), self.gen_power(x))
        return sp.vstack([J, self._pin_row], format="csr")

    def eval_Jh(self, x: np.ndarray) -> sp.csr_matrix:
        nb = self.nb
        V = self.voltage(x)
        d = sp.hstack(
            [sp.diags(2 * V.real), sp.diags(2 * V.imag), sp.csr_matrix((nb, 2 * self.ng))],
            format="csr",
        )
        return sp.vstack([self.flows_jacobian(V), -d, d], format="csr")

    def eval_H(self, x: np.ndarray, obj_weight: float, lam_g: np.ndarray, lam_h: np.ndarray) -> sp.csr_matrix:
        nb = self.nb
        V = self.voltage(x)
        H = sp.diags(obj_weight * self.objective_hessian_diag(x), format="csr")
        H = H + self.balance_hessian(V, self.gen_power(x), lam_g[: 2 * nb])
        H = H + self.flows_hessian(V, lam_h[: 2 * self.n_lim])
        corridor = lam_h[2 * self.n_lim + nb :] - lam_h[2 * self.n_lim : 2 * self.n_lim + nb]
        diag = np.zeros(self.n)
        diag[: 2 * nb] = 2 * np.r_[corridor, corridor]
        return (H + sp.diags(diag, format="csr")).tocsr()


@formulation_handler(Formulation(VoltageCoordinates.CARTESIAN, BalanceKind.POWER))
class CartesianPowerModel(CartesianModel):
    formulation = Formulation(VoltageCoordinates.CARTESIAN, BalanceKind.POWER)


@formulation_handler(Formulation(VoltageCoordinates.CARTESIAN, BalanceKind.CURRENT))
class CartesianCurrentModel(CartesianModel):
    formulation = Formulation(VoltageCoordinates.CARTESIAN, BalanceKind.CURRENT)
