"""Validated per-unit network model and admittance matrices."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .case_io import CaseData
from .errors import DanglingGen, IsolatedBus, MultipleRefBus, NetworkError, NoRefBus, ZeroImpedanceBranch
from .types import BusType

_LOGGER = logging.getLogger(__name__)

# Column indices (0-based) of the case tables
BUS_I, BUS_TYPE, PD, QD, GS, BS, BUS_AREA, VM, VA, BASE_KV, ZONE, VMAX, VMIN = range(13)
GEN_BUS, PG, QG, QMAX, QMIN, VG, MBASE, GEN_STATUS, PMAX, PMIN = range(10)
F_BUS, T_BUS, BR_R, BR_X, BR_B, RATE_A, RATE_B, RATE_C, TAP, SHIFT, BR_STATUS, ANGMIN, ANGMAX = range(13)
MODEL, STARTUP, SHUTDOWN, NCOST, COST = range(5)

POLYNOMIAL = 2
PW_LINEAR = 1


@dataclass(frozen=True)
class BusTable:
    """Per-bus data in per unit (angles in radians)."""

    ids: np.ndarray
    kind: np.ndarray
    Pd: np.ndarray
    Qd: np.ndarray
    Gs: np.ndarray
    Bs: np.ndarray
    Vmax: np.ndarray
    Vmin: np.ndarray
    Va0: np.ndarray
    Vm0: np.ndarray


@dataclass(frozen=True)
class GenTable:
    """In-service generators in per unit.

    ``cost`` holds one polynomial per generator, coefficients highest
    degree first, in $/h of MW output; ``cost_model`` is the gencost MODEL
    column (2 = polynomial).
    """

    bus: np.ndarray
    Pg0: np.ndarray
    Qg0: np.ndarray
    Pmin: np.ndarray
    Pmax: np.ndarray
    Qmin: np.ndarray
    Qmax: np.ndarray
    Vg: np.ndarray
    cost_model: np.ndarray
    cost: tuple[np.ndarray, ...]


@dataclass(frozen=True)
class BranchTable:
    """In-service branches: series admittance, charging, tap, shift and rating (0 = unlimited)."""

    f: np.ndarray
    t: np.ndarray
    ys: np.ndarray
    bc: np.ndarray
    tap: np.ndarray
    shift: np.ndarray
    rate: np.ndarray
    angmin: np.ndarray
    angmax: np.ndarray


@dataclass(frozen=True)
class Network:
    """Validated per-unit grid model.

    Attributes:
        name: Case name
        base_mva: System MVA base
        bus, gen, branch: Per-element tables (in-service elements only)
        ref: Index of the single reference bus
        Ybus: Bus admittance matrix (n_bus x n_bus)
        Yf, Yt: Branch from/to admittance matrices (n_branch x n_bus)
        Cf, Ct: Branch from/to incidence matrices (n_branch x n_bus)
        Cg: Generator incidence matrix (n_bus x n_gen)
    """

    name: str
    base_mva: float
    bus: BusTable
    gen: GenTable
    branch: BranchTable
    ref: int
    Ybus: sp.csr_matrix
    Yf: sp.csr_matrix
    Yt: sp.csr_matrix
    Cf: sp.csr_matrix
    Ct: sp.csr_matrix
    Cg: sp.csr_matrix

    @property
    def n_bus(self) -> int:
        return len(self.bus.ids)

    @property
    def n_gen(self) -> int:
        return len(self.gen.bus)

    @property
    def n_branch(self) -> int:
        return len(self.branch.f)

    @property
    def limited_branches(self) -> np.ndarray:
        """Indices of branches with a flow rating (rate > 0)."""
        return np.flatnonzero(self.branch.rate > 0)

    @property
    def pv(self) -> np.ndarray:
        return np.flatnonzero(self.bus.kind == BusType.PV)

    @property
    def pq(self) -> np.ndarray:
        return np.flatnonzero(self.bus.kind == BusType.PQ)

    @property
    def Sd(self) -> np.ndarray:
        """Complex bus load in per unit."""
        return self.bus.Pd + 1j * self.bus.Qd


@dataclass(frozen=True)
class CaseStats:
    """Problem dimensions of a case under the polar formulation."""

    name: str
    n_b: int
    n_g: int
    n_l: int
    n_lc: int
    nvar: int
    n_eq: int
    n_ineq: int


def build_network(case: CaseData) -> Network:
    """Validate CaseData, convert it to per unit and build the admittance matrices.

    Args:
        case: Parsed case tables

    Returns:
        Immutable Network

    Raises:
        NoRefBus, MultipleRefBus: Reference bus count is not exactly one
        IsolatedBus: A bus has type ISOLATED
        DanglingGen: An in-service generator sits on an unknown bus
        ZeroImpedanceBranch: An in-service branch with r = x = 0
    """
    base = float(case.base_mva)
    bus_rows = _table(case.bus_rows, 13)
    n_bus = bus_rows.shape[0]
    if n_bus == 0:
        raise NoRefBus("Case has no buses")

    ids = bus_rows[:, BUS_I].astype(int)
    index = {int(bus_id): i for i, bus_id in enumerate(ids)}

    kind = bus_rows[:, BUS_TYPE].astype(int)
    unknown = sorted(set(kind) - {int(k) for k in BusType})
    if unknown:
        raise NetworkError(f"Unknown bus type code(s): {unknown}")
    isolated = ids[kind == BusType.ISOLATED]
    if isolated.size:
        raise IsolatedBus(f"Isolated bus(es) not supported: {isolated.tolist()}")

    gen_rows = _table(case.gen_rows, 10)
    in_service = gen_rows[:, GEN_STATUS] > 0
    dropped = int(np.count_nonzero(~in_service))
    if dropped:
        _LOGGER.warning("Dropping %d out-of-service generator(s)", dropped)

    gen_bus = []
    for row in gen_rows[in_service]:
        bus_id = int(row[GEN_BUS])
        if bus_id not in index:
            raise DanglingGen(f"Generator on unknown bus {bus_id}")
        gen_bus.append(index[bus_id])
    gen_bus_arr = np.asarray(gen_bus, dtype=int)
    active = gen_rows[in_service]

    # PV/REF buses without an in-service generator behave as PQ buses
    kind = kind.copy()
    has_gen = np.zeros(n_bus, dtype=bool)
    has_gen[gen_bus_arr] = True
    orphan_pv = (kind == BusType.PV) & ~has_gen
    if orphan_pv.any():
        _LOGGER.debug("Treating %d PV bus(es) without generation as PQ", int(orphan_pv.sum()))
        kind[orphan_pv] = BusType.PQ

    refs = np.flatnonzero(kind == BusType.REF)
    if refs.size == 0:
        raise NoRefBus("Case has no reference bus")
    if refs.size > 1:
        raise MultipleRefBus(f"Case has {refs.size} reference buses: {ids[refs].tolist()}")
    ref = int(refs[0])
    if not has_gen[ref]:
        raise NoRefBus(f"Reference bus {ids[ref]} has no in-service generator")

    Vm0 = bus_rows[:, VM].copy()
    # Generator voltage setpoints fix the magnitude at PV and REF buses
    for g in range(len(gen_bus_arr) - 1, -1, -1):
        b = gen_bus_arr[g]
        if kind[b] in (BusType.PV, BusType.REF):
            Vm0[b] = active[g, VG]

    bus = BusTable(
        ids=ids,
        kind=kind,
        Pd=bus_rows[:, PD] / base,
        Qd=bus_rows[:, QD] / base,
        Gs=bus_rows[:, GS] / base,
        Bs=bus_rows[:, BS] / base,
        Vmax=bus_rows[:, VMAX].copy(),
        Vmin=bus_rows[:, VMIN].copy(),
        Va0=np.deg2rad(bus_rows[:, VA]),
        Vm0=Vm0,
    )

    cost_model, cost = _gen_costs(case, in_service)
    gen = GenTable(
        bus=gen_bus_arr,
        Pg0=active[:, PG] / base,
        Qg0=active[:, QG] / base,
        Pmin=active[:, PMIN] / base,
        Pmax=active[:, PMAX] / base,
        Qmin=active[:, QMIN] / base,
        Qmax=active[:, QMAX] / base,
        Vg=active[:, VG].copy(),
        cost_model=cost_model,
        cost=cost,
    )

    branch = _branch_table(case, index, base)
    Yf, Yt, Cf, Ct = _branch_matrices(branch, n_bus)
    Ysh = (bus.Gs + 1j * bus.Bs).astype(complex)
    Ybus = (Cf.T @ Yf + Ct.T @ Yt + sp.diags(Ysh, format="csr")).tocsr()

    n_gen = len(gen_bus_arr)
    Cg = sp.csr_matrix((np.ones(n_gen), (gen_bus_arr, np.arange(n_gen))), shape=(n_bus, n_gen))

    net = Network(
        name=case.name,
        base_mva=base,
        bus=bus,
        gen=gen,
        branch=branch,
        ref=ref,
        Ybus=Ybus,
        Yf=Yf,
        Yt=Yt,
        Cf=Cf,
        Ct=Ct,
        Cg=Cg,
    )
    _LOGGER.debug("Built network %s: %d buses, %d gens, %d branches", net.name, n_bus, net.n_gen, net.n_branch)
    return net


def _table(rows: list[list[float]], width: int) -> np.ndarray:
    """Rows as a 2-D float array (an empty table gets the minimum width)."""
    if not rows:
        return np.zeros((0, width))
    return np.asarray(rows, dtype=float)


def _gen_costs(case: CaseData, in_service: np.ndarray) -> tuple[np.ndarray, tuple[np.ndarray, ...]]:
    """Active-power cost rows of the in-service generators.

    Rows beyond the generator count (reactive costs) are ignored.
    """
    n_total = len(case.gen_rows)
    rows = case.gencost_rows
    if not rows:
        return np.zeros(0, dtype=int), ()
    if len(rows) < n_total:
        raise NetworkError(f"gencost has {len(rows)} rows for {n_total} generators")
    if len(rows) > n_total:
        _LOGGER.debug("Ignoring %d reactive power cost row(s)", len(rows) - n_total)

    models = []
    polys = []
    for g in np.flatnonzero(in_service):
        row = rows[g]
        model = int(row[MODEL])
        ncost = int(row[NCOST])
        models.append(model)
        if model == POLYNOMIAL:
            coeffs = np.asarray(row[COST : COST + ncost], dtype=float)
            if len(coeffs) != ncost:
                raise NetworkError(f"gencost row {g + 1}: NCOST={ncost} but only {len(coeffs)} coefficients")
            polys.append(coeffs)
        else:
            # Breakpoints are stored but not interpreted
            polys.append(np.asarray(row[COST:], dtype=float))
    return np.asarray(models, dtype=int), tuple(polys)


def _branch_table(case: CaseData, index: dict[int, int], base: float) -> BranchTable:
    rows = _table(case.branch_rows, 13)
    rows = rows[rows[:, BR_STATUS] > 0]

    f = np.empty(len(rows), dtype=int)
    t = np.empty(len(rows), dtype=int)
    for k, row in enumerate(rows):
        fb, tb = int(row[F_BUS]), int(row[T_BUS])
        if fb not in index or tb not in index:
            raise NetworkError(f"Branch {k + 1} references unknown bus ({fb} -> {tb})")
        if fb == tb:
            raise NetworkError(f"Branch {k + 1} connects bus {fb} to itself")
        f[k], t[k] = index[fb], index[tb]

    r, x = rows[:, BR_R], rows[:, BR_X]
    zero = (r == 0) & (x == 0)
    if zero.any():
        k = int(np.flatnonzero(zero)[0])
        raise ZeroImpedanceBranch(f"Branch {int(rows[k, F_BUS])} -> {int(rows[k, T_BUS])} has r = x = 0")

    tap = rows[:, TAP].copy()
    tap[tap == 0] = 1.0
    return BranchTable(
        f=f,
        t=t,
        ys=1.0 / (r + 1j * x),
        bc=rows[:, BR_B].copy(),
        tap=tap,
        shift=np.deg2rad(rows[:, SHIFT]),
        rate=rows[:, RATE_A] / base,
        angmin=np.deg2rad(rows[:, ANGMIN]),
        angmax=np.deg2rad(rows[:, ANGMAX]),
    )


def _branch_matrices(
    branch: BranchTable, n_bus: int
) -> tuple[sp.csr_matrix, sp.csr_matrix, sp.csr_matrix, sp.csr_matrix]:
    """Two-port admittances stacked into Yf, Yt and the incidence matrices."""
    n_branch = len(branch.f)
    ys, tau = branch.ys, branch.tap
    ytt = ys + 0.5j * branch.bc
    yff = ytt / tau**2
    yft = -ys / (tau * np.exp(-1j * branch.shift))
    ytf = -ys / (tau * np.exp(1j * branch.shift))

    rows = np.r_[np.arange(n_branch), np.arange(n_branch)]
    cols = np.r_[branch.f, branch.t]
    Yf = sp.csr_matrix((np.r_[yff, yft], (rows, cols)), shape=(n_branch, n_bus))
    Yt = sp.csr_matrix((np.r_[ytf, ytt], (rows, cols)), shape=(n_branch, n_bus))
    ones = np.ones(n_branch)
    Cf = sp.csr_matrix((ones, (np.arange(n_branch), branch.f)), shape=(n_branch, n_bus))
    Ct = sp.csr_matrix((ones, (np.arange(n_branch), branch.t)), shape=(n_branch, n_bus))
    return Yf, Yt, Cf, Ct


def case_statistics(net: Network) -> CaseStats:
    """Dimensions of the polar OPF problem for a network."""
    n_lc = len(net.limited_branches)
    return CaseStats(
        name=net.name,
        n_b=net.n_bus,
        n_g=net.n_gen,
        n_l=net.n_branch,
        n_lc=n_lc,
        nvar=2 * net.n_bus + 2 * net.n_gen,
        n_eq=2 * net.n_bus,
        n_ineq=2 * n_lc,
    )
