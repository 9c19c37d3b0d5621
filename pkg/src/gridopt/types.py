from __future__ import annotations

from dataclasses import dataclass
from enum import Enum, IntEnum
from typing import Any, Protocol

import numpy as np
import scipy.sparse as sp


class BusType(IntEnum):
    """Bus type codes as stored in the BUS_TYPE column."""

    PQ = 1
    PV = 2
    REF = 3
    ISOLATED = 4


class VoltageCoordinates(str, Enum):
    POLAR = "polar"
    CARTESIAN = "cart"

    def __str__(self) -> str:
        return self.value


class BalanceKind(str, Enum):
    POWER = "power"
    CURRENT = "current"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class Formulation:
    """One of the four OPF formulations.

    Attributes:
        voltage: Polar (Va, Vm) or Cartesian (Vre, Vim) voltage variables
        balance: Nodal balance written as complex power or complex current mismatch
    """

    voltage: VoltageCoordinates = VoltageCoordinates.POLAR
    balance: BalanceKind = BalanceKind.POWER

    @classmethod
    def from_name(cls, name: str) -> Formulation:
        """Parse a CLI name such as ``polar-power`` or ``cart-current``."""
        try:
            voltage, balance = str(name).strip().lower().split("-")
            return cls(VoltageCoordinates(voltage), BalanceKind(balance))
        except ValueError as err:
            raise ValueError(
                f"Unknown formulation '{name}' (expected polar-power, polar-current, cart-power or cart-current)"
            ) from err

    @property
    def name(self) -> str:
        return f"{self.voltage.value}-{self.balance.value}"

    def __str__(self) -> str:
        return self.name


ALL_FORMULATIONS: tuple[Formulation, ...] = tuple(
    Formulation(v, b) for v in VoltageCoordinates for b in BalanceKind
)


class StartMode(str, Enum):
    """Initial guess strategy."""

    FLAT = "flat"
    CASE_DATA = "mpc"
    PF_SOLVE = "pf"

    def __str__(self) -> str:
        return self.value


class MuRule(str, Enum):
    """Barrier parameter update rule.

    SCALED_COMPLEMENTARITY sets mu from the average complementarity product
    every iteration; MONOTONE_FM decreases mu only once the current barrier
    subproblem is solved to within a multiple of mu.
    """

    SCALED_COMPLEMENTARITY = "sigma"
    MONOTONE_FM = "fm"

    def __str__(self) -> str:
        return self.value


class SolveStatus(str, Enum):
    OPTIMAL = "optimal"
    MAX_ITER = "max_iter"
    TIME_LIMIT = "time_limit"
    NUMERICAL_FAILURE = "numerical_failure"
    INFEASIBLE = "infeasible"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class Inertia:
    """Signature of a symmetric matrix (positive, negative and zero eigenvalue counts)."""

    n_pos: int
    n_neg: int
    n_zero: int

    @property
    def dim(self) -> int:
        return self.n_pos + self.n_neg + self.n_zero


class LinearSolver(Protocol):
    """Protocol for symmetric indefinite linear solver engines.

    Implement this protocol (and register the class with
    :func:`gridopt.registry.linear_solver`) to plug another factorization
    into the interior-point solver without touching it.
    """

    def analyze(self, pattern: sp.spmatrix | sp.sparray) -> Any:
        """Compute the symbolic analysis (ordering, elimination tree) for a sparsity pattern.

        Args:
            pattern: Symmetric matrix or its lower triangle; only the structure is used.

        Returns:
            Engine-specific symbolic handle.
        """
        ...

    def factorize(self, matrix: sp.spmatrix | sp.sparray) -> Inertia:
        """Factorize a matrix with the analyzed pattern and return the inertia of D."""
        ...

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        """Solve with the most recent factorization."""
        ...

    @property
    def factor_nnz(self) -> int:
        """Stored entries of the current factor (for memory accounting)."""
        ...
