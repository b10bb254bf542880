"""
Base class for convexification strategies.
"""

from abc import ABC, abstractmethod

import numpy as np

from ..oracles import ScalarOracle
from .approx import InnerConvexApprox


class ConvexifierStrategy(ABC):
    """Abstract base class for inner-convex approximation builders."""

    variant: str = "base"

    @abstractmethod
    def convexify(self, oracle: ScalarOracle, v_e: np.ndarray) -> InnerConvexApprox:
        """
        Build the approximation of ``oracle`` expanded at ``v_e``.

        Args:
            oracle: Function to approximate, in its own (factor) variables
            v_e: Expansion point

        Returns:
            Convex overestimator with matching value and gradient at v_e
        """

    @property
    def reg_order(self) -> int:
        """Power of the truncation regularizer this strategy pairs with."""
        return 3

    def is_exact(self, oracle: ScalarOracle) -> bool:
        """True when the approximation is guaranteed to overestimate ``oracle``."""
        return False

    def describe(self) -> str:
        return self.variant
