"""OPF formulation models.

Importing this package registers the four models with
:func:`gridopt.registry.formulation_handler`.
"""

from .base import OpfModel, polynomial_costs
from .cartesian import CartesianCurrentModel, CartesianModel, CartesianPowerModel
from .polar import PolarCurrentModel, PolarModel, PolarPowerModel

__all__ = [
    "CartesianCurrentModel",
    "CartesianModel",
    "CartesianPowerModel",
    "OpfModel",
    "PolarCurrentModel",
    "PolarModel",
    "PolarPowerModel",
    "polynomial_costs",
]
