"""
Non-convex problems with linear equality constraints and their convexification.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from ..convexify import ConvexifierStrategy, TaylorCvx, add_regularizer
from ..errors import ArgumentError
from ..oracles import ScalarOracle
from ..solver import AffineMap, ConvexFunction, ConvexSubproblem, ConvexTerm


@dataclass(frozen=True)
class FunctionSpec:
    """weight * g(A x + b) + offset with g given by an oracle in factor space."""

    name: str
    oracle: ScalarOracle
    map: AffineMap
    strategy: ConvexifierStrategy = field(default_factory=TaylorCvx)
    weight: float = 1.0
    offset: float = 0.0

    def __post_init__(self):
        if self.map.out_dim != self.oracle.dim:
            raise ArgumentError(
                f"{self.name}: map output {self.map.out_dim} does not match "
                f"oracle dimension {self.oracle.dim}"
            )
        if self.weight <= 0.0:
            raise ArgumentError(f"{self.name}: weight must be > 0, got {self.weight}")

    def local(self, x: np.ndarray) -> np.ndarray:
        return self.map.apply(np.asarray(x, dtype=float))

    def value(self, x: np.ndarray) -> float:
        return self.weight * self.oracle.value(self.local(x)) + self.offset

    def gradient(self, x: np.ndarray) -> np.ndarray:
        return self.weight * (self.map.A.T @ self.oracle.gradient(self.local(x)))

    def convexify(self, x: np.ndarray, M: float = 0.0) -> ConvexTerm:
        """Inner-convex approximation at x, with regularizer M, as a convex term."""
        approx = self.strategy.convexify(self.oracle, self.local(x))
        if M > 0.0:
            approx = add_regularizer(approx, M)
        if self.offset:
            approx = approx.shifted(self.offset / self.weight)
        return ConvexTerm(approx, self.map, self.weight)


@dataclass(frozen=True)
class NonConvexProblem:
    """min sum(cost) s.t. ineqs[i](x) <= 0, eq_A x = eq_b.

    ``relax_default`` names the inequalities the penalty phase relaxes.
    """

    n: int
    cost: tuple[FunctionSpec, ...]
    ineqs: tuple[FunctionSpec, ...] = ()
    eq_A: np.ndarray | None = None
    eq_b: np.ndarray | None = None
    relax_default: tuple[int, ...] = ()
    name: str = "problem"

    def __post_init__(self):
        if self.n < 1:
            raise ArgumentError(f"problem needs n >= 1, got {self.n}")
        eq_A = np.zeros((0, self.n)) if self.eq_A is None else self.eq_A
        eq_A = np.asarray(eq_A, dtype=float).reshape(-1, self.n)
        eq_b = np.zeros(eq_A.shape[0]) if self.eq_b is None else self.eq_b
        eq_b = np.asarray(eq_b, dtype=float).reshape(-1)
        if eq_b.size != eq_A.shape[0]:
            raise ArgumentError("eq_b length does not match eq_A rows")
        for spec in (*self.cost, *self.ineqs):
            if spec.map.in_dim != self.n:
                raise ArgumentError(
                    f"{spec.name}: map takes {spec.map.in_dim} inputs, need {self.n}"
                )
        if any(i < 0 or i >= len(self.ineqs) for i in self.relax_default):
            raise ArgumentError(f"invalid relax_default {self.relax_default}")
        object.__setattr__(self, "cost", tuple(self.cost))
        object.__setattr__(self, "ineqs", tuple(self.ineqs))
        object.__setattr__(self, "eq_A", eq_A)
        object.__setattr__(self, "eq_b", eq_b)

    @property
    def specs(self) -> tuple[FunctionSpec, ...]:
        """Cost terms followed by inequalities; M vectors follow this order."""
        return self.cost + self.ineqs

    def cost_value(self, x: np.ndarray) -> float:
        return float(sum(spec.value(x) for spec in self.cost))

    def cost_gradient(self, x: np.ndarray) -> np.ndarray:
        return sum((spec.gradient(x) for spec in self.cost), np.zeros(self.n))

    def constraint_values(self, x: np.ndarray) -> np.ndarray:
        return np.array([spec.value(x) for spec in self.ineqs])

    def constraint_gradients(self, x: np.ndarray) -> np.ndarray:
        if not self.ineqs:
            return np.zeros((0, self.n))
        return np.vstack([spec.gradient(x) for spec in self.ineqs])

    def eq_residual(self, x: np.ndarray) -> np.ndarray:
        return self.eq_A @ np.asarray(x, dtype=float) - self.eq_b


def check_admissible(
    p: NonConvexProblem, x: np.ndarray, tol: float = 1e-6
) -> tuple[bool, float]:
    """(admissible, max violation) over inequalities and equality residuals."""
    values = list(p.constraint_values(x))
    if p.eq_A.shape[0]:
        values.append(float(np.max(np.abs(p.eq_residual(x)))))
    worst = float(max(values)) if values else 0.0
    return worst <= tol, worst


def convexify_all(
    p: NonConvexProblem, x_prev: np.ndarray, M: Sequence[float]
) -> list[ConvexTerm]:
    """One convex term per spec, in ``p.specs`` order."""
    if len(M) != len(p.specs):
        raise ArgumentError(f"need {len(p.specs)} M values, got {len(M)}")
    return [spec.convexify(x_prev, m) for spec, m in zip(p.specs, M, strict=True)]


def assemble_subproblem(
    p: NonConvexProblem, terms: Sequence[ConvexTerm]
) -> ConvexSubproblem:
    n_cost = len(p.cost)
    cost = ConvexFunction(p.n, tuple(terms[:n_cost]))
    ineqs = tuple(ConvexFunction(p.n, (term,)) for term in terms[n_cost:])
    return ConvexSubproblem(
        p.n,
        cost,
        ineqs,
        p.eq_A,
        p.eq_b,
        labels=tuple(spec.name for spec in p.ineqs),
    )


def build_subproblem(
    p: NonConvexProblem, x_prev: np.ndarray, M: Sequence[float] | None = None
) -> ConvexSubproblem:
    """Convexify every function at x_prev and copy the equalities verbatim."""
    x_prev = np.asarray(x_prev, dtype=float)
    if not np.all(np.isfinite(x_prev)):
        raise ArgumentError("expansion point is not finite")
    M = [0.0] * len(p.specs) if M is None else M
    return assemble_subproblem(p, convexify_all(p, x_prev, M))
