from __future__ import annotations

from typing import TYPE_CHECKING, Any, Callable, TypeVar

if TYPE_CHECKING:
    from .types import Formulation

_T = TypeVar("_T", bound=type[Any])

# Global registries populated by decorators
_formulations: dict[Formulation, type[Any]] = {}
_linear_solvers: dict[str, type[Any]] = {}


def formulation_handler(form: Formulation) -> Callable[[_T], _T]:
    """
    Decorator to register the model class that evaluates one OPF formulation.

    Args:
        form: The Formulation this class implements
    """

    def decorator(cls: _T) -> _T:
        if form in _formulations:
            raise ValueError(f"Formulation {form} already registered by {_formulations[form].__name__}")
        _formulations[form] = cls
        return cls

    return decorator


def linear_solver(name: str) -> Callable[[_T], _T]:
    """
    Decorator to register a linear solver engine under a name.

    Args:
        name: Registry key used by SolveOptions.linear_solver and suite files
    """

    def decorator(cls: _T) -> _T:
        _linear_solvers[name] = cls
        cls.engine_name = name
        return cls

    return decorator


def get_formulation(form: Formulation) -> type[Any]:
    """Return the registered model class for a formulation."""
    # Import formulation modules to trigger decorator registration
    from . import formulations  # noqa: F401

    try:
        return _formulations[form]
    except KeyError:
        raise ValueError(f"No model registered for formulation: {form}") from None


def get_linear_solver(name: str) -> type[Any]:
    """Return the registered engine class for a name."""
    from . import sparse  # noqa: F401

    try:
        return _linear_solvers[name]
    except KeyError:
        known = ", ".join(sorted(_linear_solvers))
        raise ValueError(f"Unknown linear solver '{name}' (registered: {known})") from None


def get_all_linear_solvers() -> dict[str, type[Any]]:
    """Return all registered linear solver engines."""
    from . import sparse  # noqa: F401

    return dict(_linear_solvers)
