"""Exception hierarchy.

Every error derives from ``ValueError`` so callers that only guard against
``ValueError`` keep working.
"""

from __future__ import annotations


class GridOptError(ValueError):
    """Base class for all gridopt errors."""


# Case files


class CaseFormatError(GridOptError):
    """A case file could not be parsed."""


class MalformedMatrix(CaseFormatError):
    """Unbalanced brackets or a ragged row inside a matrix literal."""


class MissingTable(CaseFormatError):
    """A required table (bus, gen or branch) is absent."""


class NumericParse(CaseFormatError):
    """A matrix or scalar token is not a number."""


# Network validation


class NetworkError(GridOptError):
    """Case data does not describe a valid network."""


class NoRefBus(NetworkError):
    pass


class MultipleRefBus(NetworkError):
    pass


class DanglingGen(NetworkError):
    """A generator references an unknown or isolated bus."""


class ZeroImpedanceBranch(NetworkError):
    pass


class IsolatedBus(NetworkError):
    pass


# Power flow


class PowerFlowError(GridOptError):
    pass


class Diverged(PowerFlowError):
    """Newton iteration limit reached with the mismatch above tolerance."""


class PfDiverged(Diverged):
    """Power flow seeding an OPF initial guess did not converge."""


class SingularJacobian(PowerFlowError):
    pass


# Formulations


class FormulationError(GridOptError):
    pass


class UnsupportedCost(FormulationError):
    """Piecewise-linear cost or polynomial degree above 3."""


class ZeroVoltageDomain(FormulationError):
    """Current balance evaluated where a bus voltage is exactly zero."""


class EvalFailure(GridOptError):
    """A problem callback raised or returned non-finite values."""


# Linear algebra


class LinearSolverError(GridOptError):
    pass


class BreakdownPivot(LinearSolverError):
    """No acceptable pivot remains and static perturbation is disabled."""


class NotFactorized(LinearSolverError):
    pass


class FactorizationBreakdown(GridOptError):
    """Inertia correction exhausted its regularization range."""


# Benchmarks


class BenchError(GridOptError):
    pass


class SuiteSpecError(BenchError):
    pass


class EmptyRecordSet(BenchError):
    pass


class UnknownMetric(BenchError):
    pass


class IoFailure(BenchError):
    pass
