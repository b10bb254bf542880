"""
Taylor-tensor convexification.

The quadratic part keeps the PSD half of the Hessian; every higher-order
homogeneous form is bounded from above by separable power terms built from its
diagonal entries and the absolute sums of its mixed coefficients.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

from ..errors import ArgumentError
from ..oracles import PolynomialOracle, ScalarOracle
from ..tensor_taylor import SymTensor, TaylorExpansion, multiplicity
from .approx import InnerConvexApprox, PowerTerm
from .strategy_base import ConvexifierStrategy

SYMMETRY_TOL = 1e-10
CLAMP_TOL = 1e-12


def split_hessian(H: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Split H into PSD and NSD parts that sum back to H."""
    H = np.asarray(H, dtype=float)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ArgumentError(f"Hessian must be square, got shape {H.shape}")
    scale = max(1.0, float(np.max(np.abs(H), initial=0.0)))
    if np.max(np.abs(H - H.T), initial=0.0) > SYMMETRY_TOL * scale:
        raise ArgumentError("Hessian is not symmetric")
    H = 0.5 * (H + H.T)
    if H.size == 0:
        return H.copy(), H.copy()
    eigvals, eigvecs = scipy.linalg.eigh(H)
    # Eigenvalues in [-CLAMP_TOL, 0) are rounding noise.
    positive = np.where(eigvals > 0.0, eigvals, 0.0)
    h_plus = (eigvecs * positive) @ eigvecs.T
    h_plus = 0.5 * (h_plus + h_plus.T)
    noise = (eigvals < 0.0) & (eigvals >= -CLAMP_TOL * scale)
    negative = np.where((eigvals < 0.0) & ~noise, eigvals, 0.0)
    h_minus = (eigvecs * negative) @ eigvecs.T
    h_minus = 0.5 * (h_minus + h_minus.T)
    return h_plus, h_minus


def tensor_cvx_coeffs(t: SymTensor) -> tuple[np.ndarray, np.ndarray]:
    """Per-variable diagonal entries and mixed-coefficient absolute sums."""
    if t.order < 3:
        raise ArgumentError(f"tensor order must be >= 3, got {t.order}")
    t_diag = np.zeros(t.dim)
    t_cvx = np.zeros(t.dim)
    for key, value in t.coeffs.items():
        variables = set(key)
        if len(variables) == 1:
            t_diag[key[0]] = value
            continue
        weight = abs(value) * multiplicity(key)
        for j in variables:
            t_cvx[j] += weight
    return t_diag, t_cvx


def taylor_convexify(exp: TaylorExpansion) -> InnerConvexApprox:
    h_plus, _ = split_hessian(exp.hess)
    terms = []
    for t in exp.tensors:
        t_diag, t_cvx = tensor_cvx_coeffs(t)
        terms.append(PowerTerm(t.order, t_diag, t_cvx))
    return InnerConvexApprox(
        exp.x_e,
        exp.f0,
        exp.grad,
        h_plus,
        tuple(terms),
        reg_order=exp.d_trunc + 1,
    )


class TaylorCvx(ConvexifierStrategy):
    """Convexify the Taylor series of an oracle truncated at ``order``."""

    variant = "taylor"

    def __init__(self, order: int = 3):
        if order < 2:
            raise ArgumentError(f"Taylor order must be >= 2, got {order}")
        self.order = order

    def convexify(self, oracle: ScalarOracle, v_e: np.ndarray) -> InnerConvexApprox:
        return taylor_convexify(oracle.expand(np.asarray(v_e, dtype=float), self.order))

    @property
    def reg_order(self) -> int:
        return self.order + 1

    def is_exact(self, oracle: ScalarOracle) -> bool:
        return isinstance(oracle, PolynomialOracle) and oracle.poly.degree <= self.order

    def describe(self) -> str:
        return f"taylor({self.order})"
