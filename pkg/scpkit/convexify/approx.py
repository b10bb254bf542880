"""
Inner-convex approximations: convex overestimators that match value and
gradient of the approximated function at the expansion point.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Iterable
from dataclasses import dataclass, field, replace

import numpy as np

from ..errors import ArgumentError
from ..oracles import ScalarOracle

PSD_TOL = 1e-10


@dataclass(frozen=True)
class PowerTerm:
    """Separable convexified terms of one Taylor order k >= 3.

    Contributes sum_i pos(t_diag_i * dx_i**k) + t_cvx_i * |dx_i|**k.
    """

    order: int
    t_diag: np.ndarray
    t_cvx: np.ndarray

    def __post_init__(self):
        if self.order < 3:
            raise ArgumentError(f"power term order must be >= 3, got {self.order}")
        t_cvx = np.asarray(self.t_cvx, dtype=float)
        if np.any(t_cvx < 0.0):
            raise ArgumentError("T_cvx coefficients must be nonnegative")
        object.__setattr__(self, "t_diag", np.asarray(self.t_diag, dtype=float))
        object.__setattr__(self, "t_cvx", t_cvx)

    def evaluate(
        self, dx: np.ndarray, derivatives: bool = True
    ) -> tuple[float, np.ndarray | None, np.ndarray | None]:
        k = self.order
        adx = np.abs(dx)
        signed = self.t_diag * dx**k
        active = signed > 0.0
        value = float(np.sum(signed[active]) + self.t_cvx @ adx**k)
        if not derivatives:
            return value, None, None
        # pos-part'(0) = 0; |t|^k is C^2 for k >= 3.
        d1 = np.where(active, self.t_diag * k * dx ** (k - 1), 0.0)
        d1 += self.t_cvx * k * np.sign(dx) * adx ** (k - 1)
        d2 = np.where(active, self.t_diag * k * (k - 1) * dx ** (k - 2), 0.0)
        d2 += self.t_cvx * k * (k - 1) * adx ** (k - 2)
        return value, d1, d2

    def scaled(self, w: float) -> PowerTerm:
        return PowerTerm(self.order, w * self.t_diag, w * self.t_cvx)


class _ScaledOracle(ScalarOracle):
    def __init__(self, base: ScalarOracle, weight: float):
        super().__init__(base.dim)
        self.base = base
        self.weight = weight

    def value(self, v):
        return self.weight * self.base.value(v)

    def gradient(self, v):
        return self.weight * self.base.gradient(v)

    def hessian(self, v):
        return self.weight * self.base.hessian(v)


@dataclass(frozen=True)
class InnerConvexApprox:
    """Convex overestimator f_cvx^(x_e) of a function around x_e.

    value(x) = f0 + dx.grad + dx.H+.dx / 2 + sum of power terms
               + kept convex handles + M / p! * ||dx||**p,   dx = x - x_e
    """

    x_e: np.ndarray
    f0: float
    grad: np.ndarray
    hess_psd: np.ndarray
    power_terms: tuple[PowerTerm, ...] = ()
    kept_convex: tuple[ScalarOracle, ...] = ()
    reg_M: float = 0.0
    reg_order: int = 3
    # Value/gradient of the kept handles at x_e, already folded into f0/grad.
    kept_offset: float = 0.0
    kept_grad: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        x_e = np.array(self.x_e, dtype=float).reshape(-1)
        n = x_e.size
        hess = np.array(self.hess_psd, dtype=float).reshape(n, n)
        hess = 0.5 * (hess + hess.T)
        scale = max(1.0, float(np.abs(hess).max())) if n else 1.0
        if n and np.linalg.eigvalsh(hess)[0] < -PSD_TOL * scale:
            raise ArgumentError("hess_psd is not positive semi-definite")
        if self.reg_M < 0.0:
            raise ArgumentError(f"regularizer M must be >= 0, got {self.reg_M}")
        for term in self.power_terms:
            if term.t_diag.shape != (n,) or term.t_cvx.shape != (n,):
                raise ArgumentError("power term dimension does not match x_e")
        for handle in self.kept_convex:
            if handle.dim != n:
                raise ArgumentError("kept convex handle dimension does not match x_e")
        object.__setattr__(self, "x_e", x_e)
        object.__setattr__(self, "grad", np.array(self.grad, dtype=float).reshape(n))
        object.__setattr__(self, "hess_psd", hess)
        object.__setattr__(self, "f0", float(self.f0))
        if self.kept_grad is None:
            object.__setattr__(self, "kept_grad", np.zeros(n))

    @property
    def dim(self) -> int:
        return self.x_e.size

    def evaluate(self, x: np.ndarray) -> tuple[float, np.ndarray, np.ndarray]:
        """Value, gradient and Hessian at x."""
        value, grad, hess = self._evaluate(np.asarray(x, dtype=float), True)
        assert grad is not None and hess is not None
        return value, grad, hess

    def value(self, x: np.ndarray) -> float:
        return self._evaluate(np.asarray(x, dtype=float), False)[0]

    def __call__(self, x: np.ndarray) -> float:
        return self.value(x)

    def _evaluate(self, x: np.ndarray, derivatives: bool):
        dx = x - self.x_e
        hdx = self.hess_psd @ dx
        value = self.f0 + dx @ self.grad + 0.5 * dx @ hdx
        grad = hess = None
        if derivatives:
            grad = self.grad + hdx
            hess = self.hess_psd.copy()
        for term in self.power_terms:
            v, d1, d2 = term.evaluate(dx, derivatives)
            value += v
            if derivatives:
                grad += d1
                hess[np.diag_indices_from(hess)] += d2
        if self.kept_convex:
            # f0/grad already hold the handles' value and gradient at x_e.
            value += sum(h.value(x) for h in self.kept_convex) - self.kept_offset
            value -= dx @ self.kept_grad
            if derivatives:
                grad += sum(h.gradient(x) for h in self.kept_convex) - self.kept_grad
                hess += sum(h.hessian(x) for h in self.kept_convex)
        if self.reg_M > 0.0:
            rv, rg, rh = _regularizer(dx, self.reg_M, self.reg_order, derivatives)
            value += rv
            if derivatives:
                grad += rg
                hess += rh
        return float(value), grad, hess

    def shifted(self, c: float) -> InnerConvexApprox:
        return replace(self, f0=self.f0 + c)

    def scaled(self, w: float) -> InnerConvexApprox:
        if w < 0.0:
            raise ArgumentError(f"scaling weight must be >= 0, got {w}")
        return replace(
            self,
            f0=w * self.f0,
            grad=w * self.grad,
            hess_psd=w * self.hess_psd,
            power_terms=tuple(t.scaled(w) for t in self.power_terms),
            kept_convex=tuple(_ScaledOracle(h, w) for h in self.kept_convex),
            kept_offset=w * self.kept_offset,
            kept_grad=w * self.kept_grad,
            reg_M=w * self.reg_M,
        )

    def __add__(self, other: InnerConvexApprox) -> InnerConvexApprox:
        if other.dim != self.dim or not np.allclose(other.x_e, self.x_e):
            raise ArgumentError("approximations must share the expansion point")
        if self.reg_M > 0.0 and other.reg_M > 0.0 and self.reg_order != other.reg_order:
            raise ArgumentError("cannot add regularizers of different orders")
        if self.reg_M > 0.0:
            reg_order = self.reg_order
        elif other.reg_M > 0.0:
            reg_order = other.reg_order
        else:
            reg_order = max(self.reg_order, other.reg_order)
        return InnerConvexApprox(
            self.x_e,
            self.f0 + other.f0,
            self.grad + other.grad,
            self.hess_psd + other.hess_psd,
            self.power_terms + other.power_terms,
            self.kept_convex + other.kept_convex,
            self.reg_M + other.reg_M,
            reg_order,
            self.kept_offset + other.kept_offset,
            self.kept_grad + other.kept_grad,
        )


def _regularizer(dx: np.ndarray, M: float, p: int, derivatives: bool):
    """M / p! * ||dx||**p and its derivatives."""
    c = M / math.factorial(p)
    r = float(np.linalg.norm(dx))
    value = c * r**p
    if not derivatives:
        return value, None, None
    n = dx.size
    if r == 0.0:
        hess = np.eye(n) * (c * 2.0 if p == 2 else 0.0)
        return value, np.zeros(n), hess
    grad = c * p * r ** (p - 2) * dx
    outer = (p - 2) * r ** (p - 4) * np.outer(dx, dx)
    hess = c * p * (r ** (p - 2) * np.eye(n) + outer)
    return value, grad, hess


def add_regularizer(a: InnerConvexApprox, M: float) -> InnerConvexApprox:
    """Set the truncation regularizer M / reg_order! * ||dx||**reg_order."""
    if M < 0.0:
        raise ArgumentError(f"regularizer M must be >= 0, got {M}")
    return replace(a, reg_M=float(M))


def evaluate(
    a: InnerConvexApprox, x: np.ndarray
) -> tuple[float, np.ndarray, np.ndarray]:
    return a.evaluate(x)


@dataclass(frozen=True)
class OverestimationReport:
    samples: int
    violations: int
    worst_gap: float

    @property
    def ok(self) -> bool:
        return self.violations == 0


def verify_overestimation(
    a: InnerConvexApprox,
    f: ScalarOracle | Callable[[np.ndarray], float],
    points: Iterable[np.ndarray],
    tol: float = 1e-10,
    rtol: float = 1e-10,
) -> OverestimationReport:
    """Count points where a(x) < f(x) - tol; worst_gap is the largest shortfall."""
    fun = f.value if isinstance(f, ScalarOracle) else f
    samples = violations = 0
    worst = 0.0
    for x in points:
        samples += 1
        fx = float(fun(np.asarray(x, dtype=float)))
        shortfall = fx - a.value(x)
        if shortfall > tol + rtol * abs(fx):
            violations += 1
            worst = max(worst, shortfall)
    return OverestimationReport(samples, violations, worst)
