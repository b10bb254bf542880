"""
Difference-of-convex linearization.

For f = c1 - c2 with both parts convex, keeping c1 and replacing c2 by its
tangent plane at x_e gives a convex overestimator of f.
"""

from __future__ import annotations

import numpy as np

from ..errors import ArgumentError
from ..oracles import ScalarOracle
from .approx import InnerConvexApprox
from .strategy_base import ConvexifierStrategy
from .taylor import TaylorCvx


def dc_linearize(
    c1: ScalarOracle | None, c2: ScalarOracle | None, x_e: np.ndarray
) -> InnerConvexApprox:
    """c1(x) - c2(x_e) - (x - x_e).grad c2(x_e); either part may be None."""
    x_e = np.asarray(x_e, dtype=float).reshape(-1)
    n = x_e.size
    for part in (c1, c2):
        if part is not None and part.dim != n:
            raise ArgumentError(f"d.c. part has dim {part.dim}, expected {n}")
    f0 = 0.0
    grad = np.zeros(n)
    kept: tuple[ScalarOracle, ...] = ()
    kept_offset = 0.0
    kept_grad = np.zeros(n)
    if c1 is not None:
        kept_offset = c1.value(x_e)
        kept_grad = np.asarray(c1.gradient(x_e), dtype=float)
        f0 += kept_offset
        grad += kept_grad
        kept = (c1,)
    if c2 is not None:
        f0 -= c2.value(x_e)
        grad -= np.asarray(c2.gradient(x_e), dtype=float)
    return InnerConvexApprox(
        x_e,
        f0,
        grad,
        np.zeros((n, n)),
        kept_convex=kept,
        kept_offset=kept_offset,
        kept_grad=kept_grad,
    )


class DcLinearize(ConvexifierStrategy):
    """d.c. linearization plus an optional Taylor-convexified remainder.

    The approximated function is ``c1 - c2 + remainder`` with c1 and c2 convex.
    """

    variant = "dc"

    def __init__(
        self,
        c1: ScalarOracle | None = None,
        c2: ScalarOracle | None = None,
        remainder: ScalarOracle | None = None,
        remainder_order: int = 4,
    ):
        self.c1 = c1
        self.c2 = c2
        self.remainder = remainder
        self._taylor = TaylorCvx(remainder_order)

    def convexify(self, oracle: ScalarOracle, v_e: np.ndarray) -> InnerConvexApprox:
        v_e = np.asarray(v_e, dtype=float)
        approx = dc_linearize(self.c1, self.c2, v_e)
        if self.remainder is not None:
            approx = approx + self._taylor.convexify(self.remainder, v_e)
        return approx

    @property
    def reg_order(self) -> int:
        return self._taylor.reg_order

    def is_exact(self, oracle: ScalarOracle) -> bool:
        if self.remainder is None:
            return True
        return self._taylor.is_exact(self.remainder)

    def describe(self) -> str:
        parts = [
            name
            for name, part in (
                ("c1", self.c1),
                ("c2", self.c2),
                ("remainder", self.remainder),
            )
            if part is not None
        ]
        suffix = f", {self._taylor.describe()}" if self.remainder is not None else ""
        return f"dc({'+'.join(parts)}{suffix})"
