"""Polar voltage formulations over ``x = [Va; Vm; Pg; Qg]``."""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from ..derivatives import voltage_map_curvature, voltage_map_jacobian
from ..network import Network
from ..registry import formulation_handler
from ..types import BalanceKind, Formulation, VoltageCoordinates
from .base import OpfModel


class PolarModel(OpfModel):
    """Voltage angle and magnitude variables; every limit except flows is a box bound."""

    def __init__(self, net: Network) -> None:
        super().__init__(net)
        nb = self.nb
        self.m_eq = 2 * nb
        self.m_ineq = 2 * self.n_lim
        self.var_layout = {
            "Va": slice(0, nb),
            "Vm": slice(nb, 2 * nb),
            "Pg": self.pg,
            "Qg": self.qg,
        }
        self._gen_identity = sp.identity(2 * self.ng, format="csr")

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        net, nb = self.net, self.nb
        lo = np.r_[np.full(nb, -np.inf), net.bus.Vmin, net.gen.Pmin, net.gen.Qmin]
        hi = np.r_[np.full(nb, np.inf), net.bus.Vmax, net.gen.Pmax, net.gen.Qmax]
        lo[net.ref] = hi[net.ref] = net.bus.Va0[net.ref]
        return lo, hi

    def voltage(self, x: np.ndarray) -> np.ndarray:
        return x[self.nb : 2 * self.nb] * np.exp(1j * x[: self.nb])

    def gen_power(self, x: np.ndarray) -> np.ndarray:
        return x[self.pg] + 1j * x[self.qg]

    def _map(self, x: np.ndarray) -> sp.csr_matrix:
        """Jacobian of the Cartesian variables with respect to x."""
        Va, Vm = x[: self.nb], x[self.nb : 2 * self.nb]
        return sp.block_diag([voltage_map_jacobian(Va, Vm), self._gen_identity], format="csr")

    def eval_g(self, x: np.ndarray) -> np.ndarray:
        mis = self.balance(self.voltage(x), self.gen_power(x))
        return np.r_[mis.real, mis.imag]

    def eval_h(self, x: np.ndarray) -> np.ndarray:
        return self.flows(self.voltage(x))

    def eval_Jg(self, x: np.ndarray) -> sp.csr_matrix:
        J = self.balance_jacobian(self.voltage(x), self.gen_power(x))
        return (J @ self._map(x)).tocsr()

    def eval_Jh(self, x: np.ndarray) -> sp.csr_matrix:
        return (self.flows_jacobian(self.voltage(x)) @ self._map(x)).tocsr()

    def eval_H(self, x: np.ndarray, obj_weight: float, lam_g: np.ndarray, lam_h: np.ndarray) -> sp.csr_matrix:
        nb = self.nb
        V, Sg = self.voltage(x), self.gen_power(x)
        Hc = self.balance_hessian(V, Sg, lam_g) + self.flows_hessian(V, lam_h)
        # Gradient of the weighted constraints in Cartesian voltages drives the map curvature
        grad = self.balance_jacobian(V, Sg).T @ lam_g
        if self.n_lim:
            grad = grad + self.flows_jacobian(V).T @ lam_h
        T = self._map(x)
        curvature = voltage_map_curvature(grad[: 2 * nb], x[:nb], x[nb : 2 * nb])
        H = T.T @ Hc @ T + sp.block_diag([curvature, sp.csr_matrix((2 * self.ng, 2 * self.ng))])
        H = H + sp.diags(obj_weight * self.objective_hessian_diag(x))
        return sp.csr_matrix(H)


@formulation_handler(Formulation(VoltageCoordinates.POLAR, BalanceKind.POWER))
class PolarPowerModel(PolarModel):
    formulation = Formulation(VoltageCoordinates.POLAR, BalanceKind.POWER)


@formulation_handler(Formulation(VoltageCoordinates.POLAR, BalanceKind.CURRENT))
class PolarCurrentModel(PolarModel):
    formulation = Formulation(VoltageCoordinates.POLAR, BalanceKind.CURRENT)
