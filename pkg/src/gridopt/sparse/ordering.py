"""Fill-reducing ordering and symbolic analysis of symmetric sparsity patterns."""

from __future__ import annotations

import heapq
import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

_LOGGER = logging.getLogger(__name__)

ORDERINGS = ("amd", "natural")


@dataclass(frozen=True)
class SymbolicAnalysis:
    """Result of :func:`analyze`.

    Attributes:
        perm: Elimination order (perm[k] is the k-th eliminated index)
        parent: Elimination tree over positions (-1 marks a root)
        col_counts: Nonzeros per factor column, diagonal included
        pattern: Structure of the analyzed lower triangle (CSC, unit values)
    """

    perm: np.ndarray
    parent: np.ndarray
    col_counts: np.ndarray
    pattern: sp.csc_matrix

    @property
    def dim(self) -> int:
        return len(self.perm)

    @property
    def nnz(self) -> int:
        """Nonzeros of the factor L (diagonal included) without pivoting."""
        return int(self.col_counts.sum())

    def covers(self, matrix: sp.spmatrix) -> bool:
        """Whether every structural entry of ``matrix`` lies in the analyzed pattern."""
        lower = lower_structure(matrix)
        outside = lower - lower.multiply(self.pattern)
        outside.eliminate_zeros()
        return outside.nnz == 0


def lower_structure(matrix: sp.spmatrix | np.ndarray) -> sp.csc_matrix:
    """Lower-triangular structure of a symmetric matrix (or of its lower triangle), diagonal included."""
    A = sp.csc_matrix(matrix)
    S = sp.csc_matrix((np.ones(A.nnz), A.indices, A.indptr), shape=A.shape)
    S = S + S.T
    S = sp.tril(S, format="csc")
    n = A.shape[0]
    S = S + sp.identity(n, format="csc")
    S.data[:] = 1.0
    S.sort_indices()
    return S


def _adjacency(pattern: sp.csc_matrix) -> list[set[int]]:
    n = pattern.shape[0]
    adj: list[set[int]] = [set() for _ in range(n)]
    coo = pattern.tocoo()
    for i, j in zip(coo.row.tolist(), coo.col.tolist()):
        if i != j:
            adj[i].add(j)
            adj[j].add(i)
    return adj


def _eliminate(adj: list[set[int]], order: np.ndarray | None) -> tuple[np.ndarray, np.ndarray]:
    """Symbolic elimination on the explicit elimination graph.

    With ``order=None`` the next node is always one of minimum current
    degree (ties go to the smallest index). Returns the order and the
    structure size of every eliminated column.
    """
    n = len(adj)
    done = np.zeros(n, dtype=bool)
    perm = np.empty(n, dtype=int)
    counts = np.empty(n, dtype=int)
    heap = [(len(adj[i]), i) for i in range(n)] if order is None else []
    heapq.heapify(heap)

    for k in range(n):
        if order is None:
            while True:
                deg, p = heapq.heappop(heap)
                if not done[p] and deg == len(adj[p]):
                    break
        else:
            p = int(order[k])
        nbrs = adj[p]
        perm[k] = p
        counts[k] = len(nbrs) + 1
        done[p] = True
        for u in nbrs:
            row = adj[u]
            row.discard(p)
            row.update(v for v in nbrs if v != u)
            if order is None:
                # Stale heap entries are skipped on pop
                heapq.heappush(heap, (len(row), u))
        adj[p] = set()
    return perm, counts


def elimination_tree(pattern: sp.csc_matrix, perm: np.ndarray) -> np.ndarray:
    """Elimination tree of ``P A P^T`` by Liu's algorithm with path compression.

    Args:
        pattern: Lower-triangular (or full symmetric) structure of A
        perm: Elimination order

    Returns:
        parent[k] for position k, -1 for roots
    """
    n = len(perm)
    pinv = np.empty(n, dtype=int)
    pinv[perm] = np.arange(n)
    full = (pattern + pattern.T).tocsc()
    parent = np.full(n, -1, dtype=int)
    ancestor = np.full(n, -1, dtype=int)
    for k in range(n):
        col = perm[k]
        for idx in full.indices[full.indptr[col] : full.indptr[col + 1]]:
            i = int(pinv[idx])
            while i != -1 and i < k:
                nxt = int(ancestor[i])
                ancestor[i] = k
                if nxt == -1:
                    parent[i] = k
                i = nxt
    return parent


def analyze(pattern: sp.spmatrix | np.ndarray, ordering: str | np.ndarray = "amd") -> SymbolicAnalysis:
    """Compute a fill-reducing ordering, the elimination tree and factor column counts.

    Args:
        pattern: Symmetric matrix or its lower triangle; only the structure is used
        ordering: "amd" (minimum degree), "natural", or an explicit permutation

    Returns:
        SymbolicAnalysis, deterministic for a fixed input
    """
    lower = lower_structure(pattern)
    n = lower.shape[0]
    if lower.shape != (n, n):
        raise ValueError(f"Pattern must be square, got {lower.shape}")

    if isinstance(ordering, str):
        if ordering not in ORDERINGS:
            raise ValueError(f"Unknown ordering '{ordering}' (expected one of {', '.join(ORDERINGS)})")
        order = None if ordering == "amd" else np.arange(n)
    else:
        order = np.asarray(ordering, dtype=int)
        if sorted(order.tolist()) != list(range(n)):
            raise ValueError("Explicit ordering is not a permutation")

    perm, counts = _eliminate(_adjacency(lower), order)
    parent = elimination_tree(lower, perm)
    analysis = SymbolicAnalysis(perm=perm, parent=parent, col_counts=counts, pattern=lower)
    _LOGGER.debug("Analyzed pattern: dim %d, nnz(A_lower) %d, nnz(L) %d", n, lower.nnz, analysis.nnz)
    return analysis
