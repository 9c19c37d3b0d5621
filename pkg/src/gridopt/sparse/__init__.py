"""Sparse symmetric kernel: ordering, LDL^T factorization and registered solver engines."""

from .engines import DenseEngine, LdlEngine, SuperLuEngine
from .ldl import FactorOptions, LdlFactor, SparseSym, factorize, solve
from .ordering import SymbolicAnalysis, analyze, elimination_tree, lower_structure

__all__ = [
    "DenseEngine",
    "FactorOptions",
    "LdlEngine",
    "LdlFactor",
    "SparseSym",
    "SuperLuEngine",
    "SymbolicAnalysis",
    "analyze",
    "elimination_tree",
    "factorize",
    "lower_structure",
    "solve",
]
