"""
Linearization and Lipschitz-regularized linearization.
"""

import numpy as np

from ..errors import ArgumentError
from ..oracles import ScalarOracle
from .approx import InnerConvexApprox
from .strategy_base import ConvexifierStrategy


def lipschitz_regularize(
    f: ScalarOracle, x_e: np.ndarray, K: float
) -> InnerConvexApprox:
    """f(x_e) + dx.grad f(x_e) + K * ||dx||**2.

    Overestimates f only when K dominates half the curvature of f; callers check
    that with ``verify_overestimation`` or rely on M adaptation.
    """
    if K < 0.0:
        raise ArgumentError(f"K must be >= 0, got {K}")
    x_e = np.asarray(x_e, dtype=float).reshape(-1)
    n = x_e.size
    return InnerConvexApprox(
        x_e,
        f.value(x_e),
        f.gradient(x_e),
        2.0 * K * np.eye(n),
        reg_order=2,
    )


class Linearize(ConvexifierStrategy):
    """First-order expansion. Not inner-convex for curved functions."""

    variant = "linearize"

    def convexify(self, oracle: ScalarOracle, v_e: np.ndarray) -> InnerConvexApprox:
        return lipschitz_regularize(oracle, v_e, 0.0)

    @property
    def reg_order(self) -> int:
        return 2


class LipschitzReg(ConvexifierStrategy):
    """Linearization plus the quadratic K * ||dx||**2."""

    variant = "lipschitz"

    def __init__(self, K: float = 1.0):
        if K < 0.0:
            raise ArgumentError(f"K must be >= 0, got {K}")
        self.K = float(K)

    def convexify(self, oracle: ScalarOracle, v_e: np.ndarray) -> InnerConvexApprox:
        return lipschitz_regularize(oracle, v_e, self.K)

    @property
    def reg_order(self) -> int:
        return 2

    def describe(self) -> str:
        return f"lipschitz(K={self.K:g})"
