from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp

Vector = np.ndarray
SparseMatrix = sp.csr_matrix


@dataclass(frozen=True)
class NlpProblem:
    """A smooth nonlinear program ``min f(x) s.t. g(x) = 0, h(x) <= 0, x_min <= x <= x_max``.

    Callbacks are pure functions of ``x`` (and multipliers for the
    Hessian). Jacobians are ``m x n`` sparse matrices and ``eval_H``
    returns the full symmetric Hessian of
    ``obj_weight * f + lam_g^T g + lam_h^T h``.

    Attributes:
        n: Number of variables
        m_eq: Number of equality constraints
        m_ineq: Number of inequality constraints
        x_min, x_max: Variable bounds (+/-inf when absent)
        var_layout: Named slices of x
    """

    n: int
    m_eq: int
    m_ineq: int
    x_min: Vector
    x_max: Vector
    eval_f: Callable[[Vector], float]
    eval_grad_f: Callable[[Vector], Vector]
    eval_g: Callable[[Vector], Vector]
    eval_h: Callable[[Vector], Vector]
    eval_Jg: Callable[[Vector], SparseMatrix]
    eval_Jh: Callable[[Vector], SparseMatrix]
    eval_H: Callable[[Vector, float, Vector, Vector], SparseMatrix]
    var_layout: dict[str, slice] = field(default_factory=dict)
    name: str = "nlp"

    def __post_init__(self) -> None:
        if self.x_min.shape != (self.n,) or self.x_max.shape != (self.n,):
            raise ValueError(f"Bounds must have shape ({self.n},)")
        if np.any(self.x_min > self.x_max):
            bad = int(np.flatnonzero(self.x_min > self.x_max)[0])
            raise ValueError(f"x_min > x_max at variable {bad} ({self.x_min[bad]} > {self.x_max[bad]})")
