"""Sparse LDL^T factorization of symmetric indefinite matrices.

The elimination follows the order of a symbolic analysis. Each step takes
a 1x1 pivot when it passes the threshold test, otherwise a 2x2 pivot with
the largest off-diagonal entry of the candidate column. Candidates failing
both tests are delayed to the end of the order.
"""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from ..errors import BreakdownPivot, NotFactorized
from ..types import Inertia
from .ordering import SymbolicAnalysis, analyze

_LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True)
class FactorOptions:
    """Numerical settings of the LDL^T factorization.

    Attributes:
        pivot_threshold: Relative size a pivot must reach against its column (0 < u <= 1)
        zero_pivot_tol: Pivots below this multiple of max|diag(A)| count as zero
        static_perturbation: Replace pivots that fail every test instead of raising
        perturbation: Size of a static perturbation relative to max|diag(A)|
        ordering: "amd" or "natural"
    """

    pivot_threshold: float = 0.01
    zero_pivot_tol: float = 1e-14
    static_perturbation: bool = False
    perturbation: float = 1e-8
    ordering: str = "amd"

    def __post_init__(self) -> None:
        if not 0 < self.pivot_threshold <= 1:
            raise ValueError(f"pivot_threshold must lie in (0, 1], got {self.pivot_threshold}")
        if self.zero_pivot_tol < 0:
            raise ValueError(f"zero_pivot_tol must be nonnegative, got {self.zero_pivot_tol}")


@dataclass
class _Step:
    cols: tuple[int, ...]
    D: np.ndarray
    rows: np.ndarray
    L: np.ndarray


@dataclass
class LdlFactor:
    """Numeric factor ``A[perm][:, perm] = L D L^T`` stored column block by column block."""

    steps: list[_Step]
    inertia: Inertia
    delayed: int = 0
    two_by_two: int = 0

    @property
    def perm(self) -> np.ndarray:
        return np.array([c for step in self.steps for c in step.cols], dtype=int)

    @property
    def nnz(self) -> int:
        return sum(len(s.cols) + s.L.size for s in self.steps)


@dataclass
class SparseSym:
    """Symmetric matrix in compressed-column lower storage with its factorization.

    Attributes:
        dim: Matrix dimension
        columns: Lower triangle (CSC)
        symbolic: Ordering and elimination tree from :meth:`analyze`
        factor: Numeric factor from :meth:`factorize`
        options: Factorization settings
    """

    columns: sp.csc_matrix
    options: FactorOptions = field(default_factory=FactorOptions)
    symbolic: SymbolicAnalysis | None = None
    factor: LdlFactor | None = None

    @classmethod
    def from_matrix(cls, matrix: sp.spmatrix | np.ndarray, options: FactorOptions | None = None) -> SparseSym:
        A = sp.csc_matrix(matrix, dtype=float)
        if A.shape[0] != A.shape[1]:
            raise ValueError(f"Matrix must be square, got {A.shape}")
        return cls(columns=sp.tril(A, format="csc"), options=options or FactorOptions())

    @property
    def dim(self) -> int:
        return int(self.columns.shape[0])

    @property
    def values(self) -> np.ndarray:
        return self.columns.data

    @property
    def ordering(self) -> np.ndarray | None:
        return None if self.symbolic is None else self.symbolic.perm

    @property
    def inertia(self) -> Inertia | None:
        return None if self.factor is None else self.factor.inertia

    def full(self) -> sp.csr_matrix:
        L = self.columns
        return (L + sp.tril(L, k=-1, format="csc").T).tocsr()

    def analyze(self, pattern: sp.spmatrix | None = None) -> SymbolicAnalysis:
        self.symbolic = analyze(self.columns if pattern is None else pattern, self.options.ordering)
        return self.symbolic

    def set_values(self, matrix: sp.spmatrix | np.ndarray) -> None:
        """Replace the numeric values, re-analyzing if the structure grew."""
        A = sp.csc_matrix(matrix, dtype=float)
        if A.shape != self.columns.shape:
            raise ValueError(f"Expected a {self.dim}x{self.dim} matrix, got {A.shape}")
        self.columns = sp.tril(A, format="csc")
        self.factor = None
        if self.symbolic is not None and not self.symbolic.covers(self.columns):
            _LOGGER.warning("Matrix has entries outside the analyzed pattern, re-analyzing")
            self.symbolic = analyze(self.columns + self.symbolic.pattern, self.options.ordering)

    def factorize(self) -> Inertia:
        """Numeric LDL^T factorization.

        Returns:
            Inertia of D

        Raises:
            BreakdownPivot: Every remaining pivot candidate fails and static perturbation is off
        """
        if self.symbolic is None:
            self.analyze()
        assert self.symbolic is not None
        self.factor = _factorize(self.full(), self.symbolic.perm, self.options)
        return self.factor.inertia

    def solve(self, rhs: np.ndarray, refine: int = 1) -> np.ndarray:
        """Solve ``A x = rhs`` with the current factor and ``refine`` steps of iterative refinement.

        Raises:
            NotFactorized: No factorization is available
        """
        if self.factor is None:
            raise NotFactorized("solve() called before factorize()")
        b = np.asarray(rhs, dtype=float)
        if b.shape[0] != self.dim:
            raise ValueError(f"Right-hand side has length {b.shape[0]}, expected {self.dim}")
        x = _substitute(self.factor, b)
        A = self.full()
        for _ in range(refine):
            r = b - A @ x
            if not np.any(r):
                break
            x = x + _substitute(self.factor, r)
        return x

    def reconstruct(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Dense ``(perm, L, D)`` with ``A[perm][:, perm] == L @ D @ L.T``."""
        if self.factor is None:
            raise NotFactorized("reconstruct() called before factorize()")
        perm = self.factor.perm
        pos = np.empty(self.dim, dtype=int)
        pos[perm] = np.arange(self.dim)
        L = np.eye(self.dim)
        D = np.zeros((self.dim, self.dim))
        for step in self.factor.steps:
            cp = pos[list(step.cols)]
            D[np.ix_(cp, cp)] = step.D
            if step.rows.size:
                L[np.ix_(pos[step.rows], cp)] = step.L
        return perm, L, D

    @property
    def factor_nnz(self) -> int:
        return 0 if self.factor is None else self.factor.nnz


def factorize(m: SparseSym) -> Inertia:
    return m.factorize()


def solve(m: SparseSym, rhs: np.ndarray) -> np.ndarray:
    return m.solve(rhs)


def _factorize(A: sp.csr_matrix, order: np.ndarray, opts: FactorOptions) -> LdlFactor:
    n = A.shape[0]
    diag = A.diagonal().astype(float)
    scale = float(np.max(np.abs(diag))) if n else 0.0
    if scale == 0.0:
        scale = float(np.max(np.abs(A.data))) if A.nnz else 1.0
    zero_tol = opts.zero_pivot_tol * scale
    u = opts.pivot_threshold

    # Active submatrix as symmetric adjacency maps without the diagonal
    off: list[dict[int, float]] = [{} for _ in range(n)]
    coo = A.tocoo()
    for i, j, v in zip(coo.row.tolist(), coo.col.tolist(), coo.data.tolist()):
        if i != j and v != 0.0:
            off[i][j] = v

    queue = deque(int(k) for k in order)
    steps: list[_Step] = []
    n_pos = n_neg = n_zero = 0
    stalled = delayed = two_by_two = 0

    while queue:
        j = queue.popleft()
        row = off[j]
        ajj = diag[j]
        colmax = max(map(abs, row.values()), default=0.0)

        if abs(ajj) <= zero_tol and colmax <= zero_tol:
            for i in row:
                del off[i][j]
            off[j] = {}
            steps.append(_Step((j,), np.zeros((1, 1)), np.zeros(0, dtype=int), np.zeros((0, 1))))
            n_zero += 1
            stalled = 0
            continue

        if abs(ajj) > zero_tol and abs(ajj) >= u * colmax:
            steps.append(_pivot_1x1(off, diag, j))
            if ajj > 0:
                n_pos += 1
            else:
                n_neg += 1
            stalled = 0
            continue

        r = _partner(row)
        step = _pivot_2x2(off, diag, j, r, u, zero_tol)
        if step is not None:
            queue.remove(r)
            steps.append(step)
            det = float(np.linalg.det(step.D))
            if det < 0:
                n_pos += 1
                n_neg += 1
            elif step.D[0, 0] + step.D[1, 1] > 0:
                n_pos += 2
            else:
                n_neg += 2
            two_by_two += 1
            stalled = 0
            continue

        if stalled <= len(queue):
            # Retry once every other remaining candidate has had its turn
            queue.append(j)
            stalled += 1
            delayed += 1
            continue

        if not opts.static_perturbation:
            raise BreakdownPivot(f"No acceptable pivot among {len(queue) + 1} remaining columns (column {j})")
        sign = 1.0 if ajj >= 0 else -1.0
        diag[j] = sign * max(abs(ajj), opts.perturbation * scale, u * colmax)
        _LOGGER.debug("Static perturbation of pivot %d to %.3e", j, diag[j])
        steps.append(_pivot_1x1(off, diag, j))
        if sign > 0:
            n_pos += 1
        else:
            n_neg += 1
        stalled = 0

    if delayed:
        _LOGGER.debug("LDL: %d delayed pivot(s), %d 2x2 pivot(s)", delayed, two_by_two)
    return LdlFactor(steps=steps, inertia=Inertia(n_pos, n_neg, n_zero), delayed=delayed, two_by_two=two_by_two)


def _partner(row: dict[int, float]) -> int:
    """Index of the largest entry of a column, smallest index on ties."""
    best, best_val = -1, -1.0
    for i in sorted(row):
        v = abs(row[i])
        if v > best_val:
            best, best_val = i, v
    return best


def _pivot_1x1(off: list[dict[int, float]], diag: np.ndarray, j: int) -> _Step:
    row = off[j]
    rows = np.array(sorted(row), dtype=int)
    d = diag[j]
    b = np.array([row[i] for i in rows])
    for i in rows:
        del off[i][j]
    off[j] = {}
    _schur_update(off, diag, rows, b[:, None], np.array([[1.0 / d]]))
    return _Step((j,), np.array([[d]]), rows, (b / d)[:, None])


def _pivot_2x2(
    off: list[dict[int, float]], diag: np.ndarray, j: int, r: int, u: float, zero_tol: float
) -> _Step | None:
    if r < 0:
        return None
    row_j, row_r = off[j], off[r]
    ajr = row_j[r]
    D = np.array([[diag[j], ajr], [ajr, diag[r]]])
    det = D[0, 0] * D[1, 1] - ajr * ajr
    if abs(det) <= zero_tol * abs(ajr):
        return None

    rows = np.array(sorted((set(row_j) | set(row_r)) - {j, r}), dtype=int)
    B = np.array([[row_j.get(i, 0.0), row_r.get(i, 0.0)] for i in rows]).reshape(len(rows), 2)
    Dinv = np.array([[D[1, 1], -ajr], [-ajr, D[0, 0]]]) / det
    gamma = np.max(np.abs(B), axis=0) if len(rows) else np.zeros(2)
    growth = np.abs(Dinv) @ gamma
    if np.any(growth > 1.0 / u):
        return None

    for i in rows:
        off[i].pop(j, None)
        off[i].pop(r, None)
    off[j] = {}
    off[r] = {}
    _schur_update(off, diag, rows, B, Dinv)
    return _Step((j, r), D, rows, B @ Dinv)


def _schur_update(
    off: list[dict[int, float]], diag: np.ndarray, rows: np.ndarray, B: np.ndarray, Dinv: np.ndarray
) -> None:
    """Subtract ``B Dinv B^T`` from the active submatrix on ``rows``."""
    if not len(rows):
        return
    U = B @ Dinv @ B.T
    rl = rows.tolist()
    for a, i in enumerate(rl):
        diag[i] -= U[a, a]
        oi = off[i]
        for b in range(a + 1, len(rl)):
            k = rl[b]
            v = oi.get(k, 0.0) - U[a, b]
            oi[k] = v
            off[k][i] = v


def _substitute(factor: LdlFactor, b: np.ndarray) -> np.ndarray:
    """Forward, diagonal and backward substitution in original indexing."""
    y = b.astype(float, copy=True)
    steps = factor.steps
    for s in steps:
        if s.rows.size:
            y[s.rows] -= s.L @ y[list(s.cols)]
    for s in steps:
        cols = list(s.cols)
        if len(cols) == 1:
            d = s.D[0, 0]
            y[cols[0]] = y[cols[0]] / d if d != 0.0 else 0.0
        else:
            y[cols] = np.linalg.solve(s.D, y[cols])
    for s in reversed(steps):
        if s.rows.size:
            y[list(s.cols)] -= s.L.T @ y[s.rows]
    return y
