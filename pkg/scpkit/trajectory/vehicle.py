"""
Vehicle functions: thrust magnitude with smoothed quadratic drag, and the
keep-out zone polynomial with its d.c. split.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from loguru import logger

from ..config import VehicleParams
from ..convexify import DcLinearize
from ..errors import ArgumentError, DegeneratePointError
from ..oracles import PolynomialOracle, ScalarOracle
from ..tensor_taylor import Polynomial, SymTensor, TaylorExpansion

DEGENERATE_PERTURBATION = 1e-9


def _norm_derivatives(u: np.ndarray, eta: float):
    """Derivatives of sqrt(|u|^2 + eta^2) up to third order."""
    s = float(np.sqrt(u @ u + eta**2))
    eye = np.eye(u.size)
    d1 = u / s
    d2 = eye / s - np.outer(u, u) / s**3
    d3 = (
        -(
            np.einsum("ij,l->ijl", eye, u)
            + np.einsum("il,j->ijl", eye, u)
            + np.einsum("jl,i->ijl", eye, u)
        )
        / s**3
        + 3.0 * np.einsum("i,j,l->ijl", u, u, u) / s**5
    )
    return s, d1, d2, d3


def _drag_derivatives(v: np.ndarray, eta: float):
    """phi(v) = sigma(v) v and its first three derivatives (k, i, j, l)."""
    s, s1, s2, s3 = _norm_derivatives(v, eta)
    eye = np.eye(3)
    phi = s * v
    d1 = np.outer(v, s1) + s * eye
    d2 = (
        np.einsum("k,ij->kij", v, s2)
        + np.einsum("i,jk->kij", s1, eye)
        + np.einsum("j,ik->kij", s1, eye)
    )
    d3 = (
        np.einsum("k,ijl->kijl", v, s3)
        + np.einsum("ij,lk->kijl", s2, eye)
        + np.einsum("il,jk->kijl", s2, eye)
        + np.einsum("jl,ik->kijl", s2, eye)
    )
    return phi, d1, d2, d3


def thrust_force(v: np.ndarray, a: np.ndarray, params: VehicleParams) -> np.ndarray:
    """F = m a + k_d sigma(v) v."""
    v = np.asarray(v, dtype=float)
    sigma = np.sqrt(v @ v + params.eta**2)
    return params.m * np.asarray(a, dtype=float) + params.k_d * sigma * v


def thrust_local(
    v: np.ndarray, a: np.ndarray, params: VehicleParams, order: int = 3
) -> TaylorExpansion:
    """Analytic Taylor data of g(v, a) = ||F(v, a)|| in the 6 variables (v, a)."""
    if order not in (2, 3):
        raise ArgumentError(f"thrust expansion order must be 2 or 3, got {order}")
    v = np.asarray(v, dtype=float).reshape(3)
    a = np.asarray(a, dtype=float).reshape(3)
    phi, p1, p2, p3 = _drag_derivatives(v, params.eta)
    F = params.m * a + params.k_d * phi
    g = float(np.linalg.norm(F))
    if g <= params.eta:
        raise DegeneratePointError(f"thrust norm {g:.3e} at the non-smooth origin")
    _, n1, n2, n3 = _norm_derivatives(F, 0.0)

    # Derivatives of F with respect to z = (v, a); only the v block is curved.
    F1 = np.hstack([params.k_d * p1, params.m * np.eye(3)])
    F2 = np.zeros((3, 6, 6))
    F2[:, :3, :3] = params.k_d * p2
    F3 = np.zeros((3, 6, 6, 6))
    F3[:, :3, :3, :3] = params.k_d * p3

    grad = n1 @ F1
    hess = np.einsum("ab,ai,bj->ij", n2, F1, F1) + np.einsum("a,aij->ij", n1, F2)
    tensors: tuple[SymTensor, ...] = ()
    if order == 3:
        g3 = (
            np.einsum("abc,ai,bj,cl->ijl", n3, F1, F1, F1)
            + np.einsum("ab,ail,bj->ijl", n2, F2, F1)
            + np.einsum("ab,ai,bjl->ijl", n2, F1, F2)
            + np.einsum("ab,aij,bl->ijl", n2, F2, F1)
            + np.einsum("a,aijl->ijl", n1, F3)
        )
        tensors = (SymTensor.from_dense(g3 / 6.0),)
    return TaylorExpansion(
        np.concatenate([v, a]), g, grad, hess, tensors, d_trunc=order
    )


class ThrustOracle(ScalarOracle):
    """||m a + k_d sigma(v) v|| over local variables z = (v, a)."""

    def __init__(self, params: VehicleParams):
        super().__init__(6)
        self.params = params

    def value(self, z: np.ndarray) -> float:
        z = np.asarray(z, dtype=float)
        return float(np.linalg.norm(thrust_force(z[:3], z[3:], self.params)))

    def expand(self, z: np.ndarray, order: int) -> TaylorExpansion:
        z = np.asarray(z, dtype=float)
        try:
            return thrust_local(z[:3], z[3:], self.params, order)
        except DegeneratePointError:
            logger.warning(f"Degenerate thrust point {z}; perturbing acceleration")
        step = DEGENERATE_PERTURBATION
        while True:
            shifted = z.copy()
            shifted[3] += step
            try:
                expansion = thrust_local(shifted[:3], shifted[3:], self.params, order)
                break
            except DegeneratePointError:
                # The shift must clear the eta guard.
                step *= 10.0
        return TaylorExpansion(
            z,
            expansion.f0,
            expansion.grad,
            expansion.hess,
            expansion.tensors,
            d_trunc=expansion.d_trunc,
        )

    def gradient(self, z: np.ndarray) -> np.ndarray:
        return self.expand(z, 2).grad

    def hessian(self, z: np.ndarray) -> np.ndarray:
        return self.expand(z, 2).hess


@dataclass(frozen=True)
class KeepoutSplit:
    """Keep-out function h(r) = c(r) + q(r) with c concave and q indefinite.

    ``convex`` is -c, the convex function whose tangent plane replaces c.
    """

    b: float
    concave: Polynomial
    convex: Polynomial
    q: Polynomial

    @property
    def full(self) -> Polynomial:
        return self.concave + self.q

    def value(self, r: np.ndarray) -> float:
        return self.full.value(r)

    def q_expansion(self, r_e: np.ndarray) -> TaylorExpansion:
        return self.q.expand(r_e, 4)

    def oracle(self) -> PolynomialOracle:
        return PolynomialOracle(self.full)

    def strategy(self) -> DcLinearize:
        return DcLinearize(
            c2=PolynomialOracle(self.convex),
            remainder=PolynomialOracle(self.q),
            remainder_order=4,
        )


def keepout_split(params: VehicleParams) -> KeepoutSplit:
    b4 = params.b**4
    # c(r) = -(r1^2 + r2^2)^2 - r3^4 + b^4
    concave = Polynomial.from_list(
        3,
        [
            (-1.0, (4, 0, 0)),
            (-2.0, (2, 2, 0)),
            (-1.0, (0, 4, 0)),
            (-1.0, (0, 0, 4)),
            (b4, (0, 0, 0)),
        ],
    )
    # q(r) = 10 r3 (r1^2 r2 - r2^2 r1)
    q = Polynomial.from_list(3, [(10.0, (2, 1, 1)), (-10.0, (1, 2, 1))])
    return KeepoutSplit(params.b, concave, -concave, q)
