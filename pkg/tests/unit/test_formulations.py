import numpy as np
import pytest

from gridopt.errors import UnsupportedCost, ZeroVoltageDomain
from gridopt.network import build_network
from gridopt.opf import build_nlp, flat_point, initial_guess, split_solution
from gridopt.power_flow import newton_pf
from gridopt.types import ALL_FORMULATIONS, BalanceKind, Formulation, StartMode, VoltageCoordinates
from tests.builders import CaseBuilder as C

POLAR_POWER = Formulation(VoltageCoordinates.POLAR, BalanceKind.POWER)
CART_POWER = Formulation(VoltageCoordinates.CARTESIAN, BalanceKind.POWER)

FD_STEP = 1e-6
FD_POINTS = 20


def _interior_point(prob, rng):
    """Random point strictly inside the finite box, angles near zero."""
    lo, hi = prob.x_min, prob.x_max
    x = np.empty(prob.n)
    finite = np.isfinite(lo) & np.isfinite(hi) & (hi > lo)
    t = rng.uniform(0.2, 0.8, prob.n)
    x[finite] = lo[finite] + t[finite] * (hi[finite] - lo[finite])
    x[~finite] = rng.uniform(-0.3, 0.3, int((~finite).sum()))
    pinned = np.isfinite(lo) & (lo == hi)
    x[pinned] = lo[pinned]
    if "Vre" in prob.var_layout:
        # Keep voltages near 1 pu so current balance stays well defined
        nb = prob.var_layout["Vre"].stop
        angle = rng.uniform(-0.3, 0.3, nb)
        mag = rng.uniform(0.95, 1.05, nb)
        x[:nb], x[nb : 2 * nb] = mag * np.cos(angle), mag * np.sin(angle)
    return x


def _fd_jacobian(fn, x):
    cols = [(fn(x + FD_STEP * e) - fn(x - FD_STEP * e)) / (2 * FD_STEP) for e in np.eye(len(x))]
    return np.column_stack(cols)


def _assert_close(actual, expected, rtol):
    scale = max(1.0, float(np.max(np.abs(expected))))
    np.testing.assert_allclose(actual, expected, rtol=rtol, atol=rtol * scale)


@pytest.fixture(params=ALL_FORMULATIONS, ids=lambda f: f.name)
def formulation(request):
    return request.param


@pytest.fixture(params=["net9", "net14"])
def fd_net(request):
    return request.getfixturevalue(request.param)


class TestDimensions:
    """Test problem sizes per formulation."""

    def test_polar(self, net9):
        prob = build_nlp(net9, POLAR_POWER)
        assert prob.n == 24
        assert prob.m_eq == 18
        assert prob.m_ineq == 18

    def test_cartesian(self, net9):
        prob = build_nlp(net9, CART_POWER)
        assert prob.n == 24
        # Balance rows plus the reference angle row
        assert prob.m_eq == 19
        # Flow limits plus both magnitude rows per bus
        assert prob.m_ineq == 18 + 18

    def test_polar_reference_angle_pinned(self, net9):
        prob = build_nlp(net9, POLAR_POWER)
        ref = net9.ref
        assert prob.x_min[ref] == prob.x_max[ref] == net9.bus.Va0[ref]
        assert np.all(np.isinf(np.delete(prob.x_min[:9], ref)))

    def test_cartesian_reference_half_plane(self, net9):
        prob = build_nlp(net9, CART_POWER)
        assert prob.x_min[net9.ref] == 0.0
        assert prob.x_max[net9.ref] == pytest.approx(1.1)

    def test_layout_names(self, net9, formulation):
        prob = build_nlp(net9, formulation)
        expected = ["Va", "Vm"] if formulation.voltage is VoltageCoordinates.POLAR else ["Vre", "Vim"]
        assert list(prob.var_layout) == [*expected, "Pg", "Qg"]
        assert prob.name == f"case9/{formulation.name}"


class TestFormulationNames:
    @pytest.mark.parametrize("name", ["polar-power", "polar-current", "cart-power", "cart-current"])
    def test_round_trip(self, name):
        assert Formulation.from_name(name).name == name

    def test_unknown(self):
        with pytest.raises(ValueError):
            Formulation.from_name("polar-flux")


class TestDerivatives:
    """Test analytic derivatives against central finite differences."""

    @pytest.mark.parametrize("seed", range(FD_POINTS))
    def test_gradient(self, fd_net, formulation, seed):
        prob = build_nlp(fd_net, formulation)
        x = _interior_point(prob, np.random.default_rng(seed))
        fd = _fd_jacobian(lambda z: np.array([prob.eval_f(z)]), x)[0]
        _assert_close(prob.eval_grad_f(x), fd, 1e-6)

    @pytest.mark.parametrize("seed", range(FD_POINTS))
    def test_constraint_jacobians(self, fd_net, formulation, seed):
        prob = build_nlp(fd_net, formulation)
        x = _interior_point(prob, np.random.default_rng(seed))
        _assert_close(prob.eval_Jg(x).toarray(), _fd_jacobian(prob.eval_g, x), 1e-6)
        _assert_close(prob.eval_Jh(x).toarray(), _fd_jacobian(prob.eval_h, x), 1e-6)

    @pytest.mark.parametrize("seed", range(FD_POINTS))
    def test_lagrangian_hessian(self, fd_net, formulation, seed):
        """Test the Hessian against differences of the Lagrangian gradient."""
        rng = np.random.default_rng(seed)
        prob = build_nlp(fd_net, formulation)
        x = _interior_point(prob, rng)
        lam_g = rng.standard_normal(prob.m_eq)
        lam_h = rng.uniform(0.1, 1.0, prob.m_ineq)
        w = 0.7

        def grad_lagrangian(z):
            return w * prob.eval_grad_f(z) + prob.eval_Jg(z).T @ lam_g + prob.eval_Jh(z).T @ lam_h

        H = prob.eval_H(x, w, lam_g, lam_h).toarray()
        np.testing.assert_allclose(H, H.T, atol=1e-9)
        _assert_close(H, _fd_jacobian(grad_lagrangian, x), 1e-5)


class TestEquivalence:
    """Test agreement between formulations."""

    def test_polar_and_cartesian_balance(self, net14, rng):
        """Test that both coordinate systems give the same power balance for one voltage state."""
        net = net14
        polar = build_nlp(net, POLAR_POWER)
        cart = build_nlp(net, CART_POWER)
        Va = rng.uniform(-0.3, 0.3, net.n_bus)
        Vm = rng.uniform(0.95, 1.05, net.n_bus)
        Pg = rng.uniform(0.0, 1.0, net.n_gen)
        Qg = rng.uniform(-0.5, 0.5, net.n_gen)

        g_polar = polar.eval_g(np.r_[Va, Vm, Pg, Qg])
        g_cart = cart.eval_g(np.r_[Vm * np.cos(Va), Vm * np.sin(Va), Pg, Qg])
        np.testing.assert_allclose(g_polar, g_cart[: 2 * net.n_bus], atol=1e-12)

    @pytest.mark.parametrize("fixture", ["net9", "net14"])
    def test_balance_vanishes_at_power_flow(self, fixture, formulation, request):
        """Test that every formulation is satisfied by a converged power flow state."""
        net = request.getfixturevalue(fixture)
        prob = build_nlp(net, formulation)
        sol = newton_pf(net)
        if formulation.voltage is VoltageCoordinates.POLAR:
            x = np.r_[sol.Va, sol.Vm, sol.Pg, sol.Qg]
        else:
            x = np.r_[sol.V.real, sol.V.imag, sol.Pg, sol.Qg]
        g = prob.eval_g(x)
        assert np.max(np.abs(g[: 2 * net.n_bus])) <= 1e-8

    def test_current_balance_undefined_at_zero_voltage(self, net9):
        prob = build_nlp(net9, Formulation(VoltageCoordinates.CARTESIAN, BalanceKind.CURRENT))
        with pytest.raises(ZeroVoltageDomain):
            prob.eval_g(np.zeros(prob.n))


class TestObjective:
    """Test generator cost handling."""

    def test_linear_cost_single_bus(self):
        """Test a single-bus case whose only feasible dispatch costs 2 $/MWh x 100 MW."""
        net = build_network(C.one_bus(Pd=100.0, cost=(2.0, 0.0)))
        prob = build_nlp(net, POLAR_POWER)
        x = np.zeros(prob.n)
        x[prob.var_layout["Vm"]] = 1.0
        x[prob.var_layout["Pg"]] = 1.0
        assert prob.eval_f(x) == pytest.approx(200.0)
        np.testing.assert_allclose(prob.eval_g(x), 0.0, atol=1e-12)

    def test_piecewise_linear_rejected(self):
        case = C.one_bus()
        case.gencost_rows = [[1, 0, 0, 2, 0, 0, 100, 200]]
        with pytest.raises(UnsupportedCost):
            build_nlp(build_network(case), POLAR_POWER)

    def test_quartic_rejected(self):
        with pytest.raises(UnsupportedCost):
            build_nlp(build_network(C.one_bus(cost=(1.0, 0.0, 0.0, 0.0, 0.0))), POLAR_POWER)

    def test_missing_gencost_means_zero_cost(self):
        case = C.one_bus()
        case.gencost_rows = []
        prob = build_nlp(build_network(case), POLAR_POWER)
        assert prob.eval_f(np.ones(prob.n)) == 0.0


class TestInitialGuess:
    """Test starting points."""

    def test_flat_rules(self):
        lo = np.array([0.94, 0.1, -np.inf, -np.inf])
        hi = np.array([1.06, np.inf, 3.0, np.inf])
        np.testing.assert_allclose(flat_point(lo, hi), [1.0, 1.1, 2.0, 0.0])

    def test_flat_polar(self):
        case = C.one_bus()
        case.gen_rows[0][8] = float("inf")
        case.gen_rows[0][9] = 10.0
        net = build_network(case)
        prob = build_nlp(net, POLAR_POWER)
        x = initial_guess(net, prob, StartMode.FLAT)
        assert x[prob.var_layout["Vm"]][0] == pytest.approx(1.0)
        assert x[prob.var_layout["Pg"]][0] == pytest.approx(1.1)

    def test_flat_cartesian_maps_polar_voltage(self, net9):
        prob = build_nlp(net9, CART_POWER)
        x = initial_guess(net9, prob, "flat")
        np.testing.assert_allclose(x[prob.var_layout["Vre"]], 1.0)
        np.testing.assert_allclose(x[prob.var_layout["Vim"]], 0.0)

    def test_case_data(self, net9):
        prob = build_nlp(net9, POLAR_POWER)
        x = initial_guess(net9, prob, StartMode.CASE_DATA)
        np.testing.assert_allclose(x[prob.var_layout["Pg"]], [0.723, 1.63, 0.85])
        assert x[prob.var_layout["Vm"]][0] == pytest.approx(1.04)

    def test_within_bounds(self, net14, formulation):
        prob = build_nlp(net14, formulation)
        for mode in StartMode:
            x = initial_guess(net14, prob, mode)
            assert np.all(x >= prob.x_min) and np.all(x <= prob.x_max)


class TestSplitSolution:
    """Test conversion of a solution vector into engineering units."""

    def test_units(self, net9, formulation):
        prob = build_nlp(net9, formulation)
        x = initial_guess(net9, prob, StartMode.CASE_DATA)
        parts = split_solution(prob, x, net9.base_mva)
        np.testing.assert_allclose(parts["Pg"], [72.3, 163.0, 85.0])
        np.testing.assert_allclose(parts["Vm"][:3], [1.04, 1.025, 1.025])
        np.testing.assert_allclose(parts["Va"], 0.0, atol=1e-12)
