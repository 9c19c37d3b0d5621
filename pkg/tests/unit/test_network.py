import logging

import numpy as np
import pytest

from gridopt.errors import DanglingGen, IsolatedBus, MultipleRefBus, NetworkError, NoRefBus, ZeroImpedanceBranch
from gridopt.network import build_network, case_statistics
from gridopt.types import BusType
from tests.builders import CaseBuilder as C


class TestAdmittance:
    """Test bus and branch admittance matrices."""

    def test_single_branch(self):
        """Test Ybus of one lossless x = 0.1 branch."""
        net = build_network(C.two_bus())
        expected = np.array([[-10j, 10j], [10j, -10j]])
        np.testing.assert_allclose(net.Ybus.toarray(), expected, atol=1e-12)

    def test_tap_ratio(self):
        """Test the two-port admittances of a branch with tap ratio 2."""
        net = build_network(C.two_bus(ratio=2.0))
        Yf, Yt = net.Yf.toarray(), net.Yt.toarray()
        np.testing.assert_allclose(Yf[0], [-2.5j, 5j], atol=1e-12)
        np.testing.assert_allclose(Yt[0], [5j, -10j], atol=1e-12)

    def test_phase_shift_breaks_symmetry(self):
        net = build_network(C.two_bus(angle=30.0))
        Y = net.Ybus.toarray()
        assert not np.isclose(Y[0, 1], Y[1, 0])

    def test_symmetric_without_shifters(self, net9):
        Y = net9.Ybus.toarray()
        np.testing.assert_allclose(Y, Y.T, atol=1e-12)

    def test_row_sums_vanish_without_shunts(self):
        """Test Ybus @ 1 = 0 when there is no charging, shunt or tap."""
        net = build_network(C.two_bus())
        np.testing.assert_allclose(net.Ybus @ np.ones(2), 0.0, atol=1e-12)

    def test_assembly_identity(self, net14):
        """Test Ybus = Cf'Yf + Ct'Yt + diag(Ysh)."""
        net = net14
        Ysh = np.diag(net.bus.Gs + 1j * net.bus.Bs)
        assembled = (net.Cf.T @ net.Yf + net.Ct.T @ net.Yt).toarray() + Ysh
        np.testing.assert_allclose(net.Ybus.toarray(), assembled, atol=1e-12)

    def test_per_unit_conversion(self, net9):
        assert net9.base_mva == 100.0
        assert net9.bus.Pd[4] == pytest.approx(0.9)
        assert net9.gen.Pmax[0] == pytest.approx(2.5)
        assert net9.branch.rate[2] == pytest.approx(1.5)


class TestBuildNetwork:
    """Test network validation."""

    def test_fixture(self, net9):
        assert net9.n_bus == 9
        assert net9.n_gen == 3
        assert net9.n_branch == 9
        assert net9.ref == 0
        assert net9.pv.tolist() == [1, 2]

    def test_generator_setpoint_fixes_voltage(self, net9):
        assert net9.bus.Vm0[0] == pytest.approx(1.04)

    def test_no_reference_bus(self):
        case = C.two_bus()
        case.bus_rows[0][1] = BusType.PV
        with pytest.raises(NoRefBus):
            build_network(case)

    def test_multiple_reference_buses(self):
        case = C.two_bus()
        case.bus_rows[1][1] = BusType.REF
        case.gen_rows.append(C.gen(2))
        case.gencost_rows.append(C.cost(1.0, 0.0))
        with pytest.raises(MultipleRefBus):
            build_network(case)

    def test_isolated_bus(self):
        case = C.two_bus()
        case.bus_rows[1][1] = BusType.ISOLATED
        with pytest.raises(IsolatedBus):
            build_network(case)

    def test_dangling_generator(self):
        case = C.two_bus()
        case.gen_rows.append(C.gen(7))
        case.gencost_rows.append(C.cost(1.0, 0.0))
        with pytest.raises(DanglingGen):
            build_network(case)

    def test_zero_impedance_branch(self):
        case = C.two_bus(x=0.0)
        with pytest.raises(ZeroImpedanceBranch):
            build_network(case)

    def test_branch_to_unknown_bus(self):
        case = C.two_bus()
        case.branch_rows.append(C.branch(1, 9))
        with pytest.raises(NetworkError):
            build_network(case)

    def test_out_of_service_elements_dropped(self, case9, caplog):
        """Test that status 0 generators and branches are left out with a warning."""
        case9.gen_rows[2][7] = 0
        case9.branch_rows[0][10] = 0
        with caplog.at_level(logging.WARNING, logger="gridopt.network"):
            net = build_network(case9)

        assert net.n_gen == 2
        assert net.n_branch == 8
        # Bus 3 lost its generator and becomes PQ
        assert net.bus.kind[2] == BusType.PQ
        assert "out-of-service" in caplog.text

    def test_reactive_cost_rows_ignored(self, case9):
        case9.gencost_rows += [C.cost(0.0, 0.0, 0.0)] * 3
        assert len(build_network(case9).gen.cost) == 3

    def test_short_gencost(self, case9):
        case9.gencost_rows.pop()
        with pytest.raises(NetworkError):
            build_network(case9)


class TestCaseStatistics:
    """Test problem dimension reporting."""

    def test_case9(self, net9):
        stats = case_statistics(net9)
        assert (stats.n_b, stats.n_g, stats.n_l, stats.n_lc) == (9, 3, 9, 9)
        assert stats.nvar == 24
        assert stats.n_eq == 18
        assert stats.n_ineq == 18

    def test_unlimited_branches_not_counted(self):
        stats = case_statistics(build_network(C.two_bus()))
        assert stats.n_lc == 0
        assert stats.n_ineq == 0
