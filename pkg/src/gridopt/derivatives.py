"""First and second derivatives of complex power and current expressions.

All expressions are differentiated in Cartesian voltage coordinates
``V = Vr + j*Vi`` first; polar derivatives follow from the chain rule of
``Vr = Vm*cos(Va)``, ``Vi = Vm*sin(Va)``. A complex injection of the form
``S = (C V) * conj(Y V)`` covers both nodal power (C = I, Y = Ybus) and
branch-end power (C = Cf, Y = Yf).
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp


def _diag(v: np.ndarray) -> sp.csr_matrix:
    return sp.diags(v, format="csr")


def injection(C: sp.spmatrix | None, Y: sp.spmatrix, V: np.ndarray) -> np.ndarray:
    """Complex power ``(C V) * conj(Y V)``; ``C=None`` means identity."""
    Vc = V if C is None else C @ V
    return Vc * np.conj(Y @ V)


def dS_dV_cartesian(C: sp.spmatrix | None, Y: sp.spmatrix, V: np.ndarray) -> tuple[sp.csr_matrix, sp.csr_matrix]:
    """Partial derivatives of ``(C V) * conj(Y V)`` with respect to Vr and Vi.

    Returns:
        ``(dS_dVr, dS_dVi)`` complex sparse matrices (rows: injections, columns: buses)
    """
    I = Y @ V
    if C is None:
        Vc = V
        Cm = sp.identity(len(V), format="csr")
    else:
        Vc = C @ V
        Cm = sp.csr_matrix(C)
    a = _diag(np.conj(I)) @ Cm
    b = _diag(Vc) @ sp.csr_matrix(Y).conj()
    return (a + b).tocsr(), (1j * (a - b)).tocsr()


def dS_dV_polar(
    C: sp.spmatrix | None, Y: sp.spmatrix, V: np.ndarray
) -> tuple[sp.csr_matrix, sp.csr_matrix]:
    """Partial derivatives of ``(C V) * conj(Y V)`` with respect to Va and Vm."""
    dVr, dVi = dS_dV_cartesian(C, Y, V)
    return cartesian_to_polar_jacobian(dVr, dVi, V)


def cartesian_to_polar_jacobian(
    d_dVr: sp.spmatrix, d_dVi: sp.spmatrix, V: np.ndarray
) -> tuple[sp.csr_matrix, sp.csr_matrix]:
    """Map Jacobian columns from (Vr, Vi) to (Va, Vm)."""
    Va = np.angle(V)
    d_dVa = d_dVr @ _diag(-V.imag) + d_dVi @ _diag(V.real)
    d_dVm = d_dVr @ _diag(np.cos(Va)) + d_dVi @ _diag(np.sin(Va))
    return sp.csr_matrix(d_dVa), sp.csr_matrix(d_dVm)


def weighted_injection_hessian(C: sp.spmatrix | None, Y: sp.spmatrix, w: np.ndarray) -> sp.csr_matrix:
    """Hessian of ``Re(sum_k w_k S_k)`` with ``S = (C V) * conj(Y V)`` in (Vr, Vi).

    The expression is the real quadratic form ``Re(V^T A conj(V))`` with
    ``A = C^T diag(w) conj(Y)``; its Hessian does not depend on V.

    Returns:
        Real symmetric sparse matrix of size 2n x 2n ordered [Vr; Vi]
    """
    Cm = sp.identity(Y.shape[0], format="csr") if C is None else sp.csr_matrix(C)
    A = (Cm.T @ _diag(w) @ sp.csr_matrix(Y).conj()).tocsr()
    B = sp.csr_matrix(A.real)
    Ci = sp.csr_matrix(A.imag)
    Hdiag = (B + B.T).tocsr()
    Hoff = (Ci - Ci.T).tocsr()
    return sp.bmat([[Hdiag, Hoff], [Hoff.T, Hdiag]], format="csr")


def voltage_map_curvature(grad: np.ndarray, Va: np.ndarray, Vm: np.ndarray) -> sp.csr_matrix:
    """Second-order term ``sum_k grad_k * d2[Vr; Vi]_k / d[Va; Vm]^2`` of the polar chain rule."""
    n = len(Va)
    cos, sin = np.cos(Va), np.sin(Va)
    gr, gi = grad[:n], grad[n:]
    d_aa = -Vm * cos * gr - Vm * sin * gi
    d_am = -sin * gr + cos * gi
    return sp.bmat([[_diag(d_aa), _diag(d_am)], [_diag(d_am), None]], format="csr")


def voltage_map_jacobian(Va: np.ndarray, Vm: np.ndarray) -> sp.csr_matrix:
    """Jacobian of [Vr; Vi] with respect to [Va; Vm]."""
    cos, sin = np.cos(Va), np.sin(Va)
    return sp.bmat([[_diag(-Vm * sin), _diag(cos)], [_diag(Vm * cos), _diag(sin)]], format="csr")
