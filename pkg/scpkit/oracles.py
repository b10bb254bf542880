"""
Scalar function oracles in factor space.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from collections.abc import Callable

import numpy as np

from .errors import ArgumentError, OracleError
from .tensor_taylor import Polynomial, TaylorExpansion, fd_expand


class ScalarOracle(ABC):
    """Abstract base class for functions R^dim -> R.

    Subclasses provide at least ``value``. Derivatives and Taylor data fall back
    to central finite differences; analytic oracles override them.
    """

    def __init__(self, dim: int):
        if dim < 1:
            raise ArgumentError(f"oracle dimension must be >= 1, got {dim}")
        self.dim = dim

    @abstractmethod
    def value(self, v: np.ndarray) -> float:
        """Evaluate the function at v."""

    def gradient(self, v: np.ndarray) -> np.ndarray:
        return self.expand(v, 2).grad

    def hessian(self, v: np.ndarray) -> np.ndarray:
        return self.expand(v, 2).hess

    def expand(self, v: np.ndarray, order: int) -> TaylorExpansion:
        """Taylor data at v truncated at ``order``."""
        return fd_expand(self.checked_value, v, order)

    def checked_value(self, v: np.ndarray) -> float:
        value = float(self.value(v))
        if not math.isfinite(value):
            raise OracleError(f"{type(self).__name__} returned {value} at {v}")
        return value

    def describe(self) -> str:
        return f"{type(self).__name__}(dim={self.dim})"


class CallableOracle(ScalarOracle):
    """Oracle backed by plain Python callables."""

    def __init__(
        self,
        fun: Callable[[np.ndarray], float],
        dim: int,
        grad: Callable[[np.ndarray], np.ndarray] | None = None,
        hess: Callable[[np.ndarray], np.ndarray] | None = None,
    ):
        super().__init__(dim)
        self._fun = fun
        self._grad = grad
        self._hess = hess

    def value(self, v: np.ndarray) -> float:
        return float(self._fun(np.asarray(v, dtype=float)))

    def gradient(self, v: np.ndarray) -> np.ndarray:
        if self._grad is not None:
            return np.asarray(self._grad(np.asarray(v, dtype=float)), dtype=float)
        return super().gradient(v)

    def hessian(self, v: np.ndarray) -> np.ndarray:
        if self._hess is not None:
            return np.asarray(self._hess(np.asarray(v, dtype=float)), dtype=float)
        return super().hessian(v)

    def expand(self, v: np.ndarray, order: int) -> TaylorExpansion:
        expansion = fd_expand(self.checked_value, v, order)
        if self._grad is None and self._hess is None:
            return expansion
        return TaylorExpansion(
            expansion.x_e,
            expansion.f0,
            self.gradient(v) if self._grad is not None else expansion.grad,
            self.hessian(v) if self._hess is not None else expansion.hess,
            expansion.tensors,
            d_trunc=expansion.d_trunc,
        )


class PolynomialOracle(ScalarOracle):
    """Exact oracle for a sparse polynomial; its series terminates at the degree."""

    def __init__(self, poly: Polynomial):
        super().__init__(poly.dim)
        self.poly = poly

    def value(self, v: np.ndarray) -> float:
        return self.poly.value(v)

    def gradient(self, v: np.ndarray) -> np.ndarray:
        return self.poly.gradient(v)

    def hessian(self, v: np.ndarray) -> np.ndarray:
        return self.poly.hessian(v)

    def expand(self, v: np.ndarray, order: int) -> TaylorExpansion:
        return self.poly.expand(v, order)

    def describe(self) -> str:
        return f"Polynomial(dim={self.dim}, degree={self.poly.degree})"
