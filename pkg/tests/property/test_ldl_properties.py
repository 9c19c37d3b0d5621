import numpy as np
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from gridopt.ipm import equilibrate
from gridopt.sparse.ldl import FactorOptions, SparseSym
from gridopt.sparse.ordering import analyze
from gridopt.types import Inertia


@st.composite
def symmetric_matrices(draw, max_n=12):
    n = draw(st.integers(min_value=1, max_value=max_n))
    seed = draw(st.integers(min_value=0, max_value=2**32 - 1))
    density = draw(st.sampled_from([0.1, 0.3, 0.6, 1.0]))
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n, n))
    A[rng.random((n, n)) > density] = 0.0
    A = 0.5 * (A + A.T)
    # Keep the spectrum away from zero so the eigenvalue signs are unambiguous
    eig, vec = np.linalg.eigh(A + np.diag(rng.standard_normal(n)))
    eig = np.where(np.abs(eig) < 0.1, np.copysign(0.1, eig), eig)
    return (vec * eig) @ vec.T


def _factored(A):
    m = SparseSym.from_matrix(A, FactorOptions(static_perturbation=False))
    m.analyze()
    m.factorize()
    return m


class TestLdlProperties:
    """Property-based tests for the sparse LDL^T factorization.

    Every generated matrix is nonsingular, so a BreakdownPivot fails the test.
    """

    @settings(max_examples=60, deadline=None)
    @given(A=symmetric_matrices())
    def test_inertia_matches_eigenvalues(self, A):
        eig = np.linalg.eigvalsh(A)
        assert _factored(A).inertia == Inertia(int(np.sum(eig > 0)), int(np.sum(eig < 0)), 0)

    @settings(max_examples=60, deadline=None)
    @given(A=symmetric_matrices())
    def test_reconstruction(self, A):
        perm, L, D = _factored(A).reconstruct()
        scale = max(1.0, float(np.max(np.abs(A).sum(axis=1))))
        np.testing.assert_allclose(L @ D @ L.T, A[np.ix_(perm, perm)], atol=1e-8 * scale)

    @settings(max_examples=60, deadline=None)
    @given(A=symmetric_matrices())
    def test_solve_residual(self, A):
        b = np.linspace(-1.0, 1.0, A.shape[0])
        x = _factored(A).solve(b)
        assert np.max(np.abs(A @ x - b)) <= 1e-8 * (1.0 + np.max(np.abs(A)) * np.max(np.abs(x)))

    @settings(max_examples=60, deadline=None)
    @given(A=symmetric_matrices(), exponents=st.lists(st.integers(min_value=-4, max_value=4), min_size=12, max_size=12))
    def test_equilibrated_inertia_survives_row_scaling(self, A, exponents):
        """Test the inertia of a badly scaled congruent copy after equilibration."""
        n = A.shape[0]
        d = 10.0 ** np.asarray(exponents[:n], dtype=float)
        B = sp.csr_matrix(d[:, None] * A * d[None, :])
        scaled, _ = equilibrate(B)
        eig = np.linalg.eigvalsh(A)
        assert _factored(scaled.toarray()).inertia == Inertia(int(np.sum(eig > 0)), int(np.sum(eig < 0)), 0)

    @settings(max_examples=60, deadline=None)
    @given(A=symmetric_matrices(max_n=20))
    def test_ordering_is_a_permutation(self, A):
        analysis = analyze(A)
        assert sorted(analysis.perm.tolist()) == list(range(A.shape[0]))
        assert analysis.covers(A)
