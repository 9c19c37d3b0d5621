"""Linear solver engines behind the interior-point Newton systems."""

from __future__ import annotations

import logging
from typing import Any

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ..errors import LinearSolverError, NotFactorized
from ..registry import linear_solver
from ..types import Inertia
from .ldl import FactorOptions, SparseSym
from .ordering import SymbolicAnalysis

_LOGGER = logging.getLogger(__name__)


@linear_solver("ldl")
class LdlEngine:
    """Internal sparse LDL^T with threshold 1x1/2x2 pivoting."""

    engine_name: str

    def __init__(self, options: FactorOptions | None = None) -> None:
        self.options = options or FactorOptions()
        self._matrix: SparseSym | None = None

    def analyze(self, pattern: sp.spmatrix | sp.sparray) -> SymbolicAnalysis:
        self._matrix = SparseSym.from_matrix(pattern, self.options)
        return self._matrix.analyze()

    def factorize(self, matrix: sp.spmatrix | sp.sparray) -> Inertia:
        if self._matrix is None:
            self.analyze(matrix)
        assert self._matrix is not None
        self._matrix.set_values(matrix)
        return self._matrix.factorize()

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        if self._matrix is None:
            raise NotFactorized("solve() called before factorize()")
        return self._matrix.solve(rhs)

    @property
    def factor_nnz(self) -> int:
        return 0 if self._matrix is None else self._matrix.factor_nnz


@linear_solver("dense")
class DenseEngine:
    """Dense Bunch-Kaufman LDL^T from LAPACK, for small systems and as a reference."""

    engine_name: str

    def __init__(self, options: FactorOptions | None = None) -> None:
        self.options = options or FactorOptions()
        self._factors: tuple[np.ndarray, np.ndarray, np.ndarray] | None = None
        self._A: np.ndarray | None = None

    def analyze(self, pattern: sp.spmatrix | sp.sparray) -> None:
        return None

    def factorize(self, matrix: sp.spmatrix | sp.sparray | np.ndarray) -> Inertia:
        A = matrix.toarray() if sp.issparse(matrix) else np.asarray(matrix, dtype=float)
        self._A = A
        lu, d, perm = sla.ldl(A, lower=True)
        self._factors = (lu, d, perm)
        eig = np.linalg.eigvalsh(d) if len(d) else np.zeros(0)
        scale = float(np.max(np.abs(np.diag(A)))) if len(A) else 0.0
        if scale == 0.0:
            scale = float(np.max(np.abs(A))) if A.size else 1.0
        tol = self.options.zero_pivot_tol * scale
        return Inertia(int(np.sum(eig > tol)), int(np.sum(eig < -tol)), int(np.sum(np.abs(eig) <= tol)))

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        if self._factors is None or self._A is None:
            raise NotFactorized("solve() called before factorize()")
        lu, d, perm = self._factors
        b = np.asarray(rhs, dtype=float)
        Lp = lu[perm]
        y = sla.solve_triangular(Lp, b[perm], lower=True, unit_diagonal=True)
        z = np.linalg.lstsq(d, y, rcond=None)[0]
        w = sla.solve_triangular(Lp.T, z, lower=False, unit_diagonal=True)
        x = np.empty_like(w)
        x[perm] = w
        # One step of iterative refinement
        r = b - self._A @ x
        if np.any(r):
            y = sla.solve_triangular(Lp, r[perm], lower=True, unit_diagonal=True)
            w = sla.solve_triangular(Lp.T, np.linalg.lstsq(d, y, rcond=None)[0], lower=False, unit_diagonal=True)
            x[perm] += w
        return x

    @property
    def factor_nnz(self) -> int:
        if self._factors is None:
            return 0
        n = len(self._factors[1])
        return n * (n + 1) // 2


@linear_solver("superlu")
class SuperLuEngine:
    """SuperLU in symmetric mode; inertia is read from U when pivots stayed on the diagonal.

    When SuperLU leaves the diagonal, the inertia comes from an internal
    LDL^T factorization of the same matrix.
    """

    engine_name: str

    def __init__(self, options: FactorOptions | None = None) -> None:
        self.options = options or FactorOptions()
        self._lu: Any = None
        self._fallback = LdlEngine(self.options)
        self._analyzed = False

    def analyze(self, pattern: sp.spmatrix | sp.sparray) -> None:
        self._analyzed = True

    def factorize(self, matrix: sp.spmatrix | sp.sparray) -> Inertia:
        A = sp.csc_matrix(matrix, dtype=float)
        try:
            self._lu = spla.splu(
                A,
                permc_spec="MMD_AT_PLUS_A",
                diag_pivot_thresh=self.options.pivot_threshold,
                options={"SymmetricMode": True},
            )
        except RuntimeError as err:
            # Exactly singular: report through the inertia of the LDL^T factor
            _LOGGER.debug("SuperLU failed (%s), using LDL^T", err)
            self._lu = None
            return self._fallback.factorize(A)

        if np.array_equal(self._lu.perm_r, self._lu.perm_c):
            u = self._lu.U.diagonal()
            scale = float(np.max(np.abs(A.diagonal()))) if A.shape[0] else 0.0
            tol = self.options.zero_pivot_tol * (scale or 1.0)
            return Inertia(int(np.sum(u > tol)), int(np.sum(u < -tol)), int(np.sum(np.abs(u) <= tol)))
        _LOGGER.debug("SuperLU left the diagonal, computing inertia with LDL^T")
        return self._fallback.factorize(A)

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        if self._lu is None:
            if self._fallback.factor_nnz:
                return self._fallback.solve(rhs)
            raise NotFactorized("solve() called before factorize()")
        x = self._lu.solve(np.asarray(rhs, dtype=float))
        if not np.all(np.isfinite(x)):
            raise LinearSolverError("SuperLU produced a non-finite solution")
        return x

    @property
    def factor_nnz(self) -> int:
        if self._lu is None:
            return self._fallback.factor_nnz
        return int(self._lu.L.nnz + self._lu.U.nnz)
