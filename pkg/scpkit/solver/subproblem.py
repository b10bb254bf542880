"""
Convex subproblem containers.

A subproblem minimizes a ConvexFunction subject to ConvexFunction(x) <= 0
inequalities and affine equalities eq_A x = eq_b. Each ConvexFunction is a sum
of weighted inner-convex approximations composed with affine maps, plus a
linear part and a constant.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field, replace

import numpy as np

from ..convexify.approx import InnerConvexApprox
from ..errors import ArgumentError


@dataclass(frozen=True)
class AffineMap:
    """v = A x + b."""

    A: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        b = np.asarray(self.b, dtype=float).reshape(-1)
        if A.shape[0] != b.size:
            raise ArgumentError(f"map rows {A.shape[0]} do not match offset {b.size}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)

    @classmethod
    def identity(cls, n: int) -> AffineMap:
        return cls(np.eye(n), np.zeros(n))

    @property
    def in_dim(self) -> int:
        return self.A.shape[1]

    @property
    def out_dim(self) -> int:
        return self.A.shape[0]

    def apply(self, x: np.ndarray) -> np.ndarray:
        return self.A @ x + self.b

    def pad(self, extra: int) -> AffineMap:
        """Append ``extra`` input columns that the map ignores."""
        if extra == 0:
            return self
        return AffineMap(np.hstack([self.A, np.zeros((self.out_dim, extra))]), self.b)


@dataclass(frozen=True)
class ConvexTerm:
    approx: InnerConvexApprox
    map: AffineMap
    weight: float = 1.0

    def __post_init__(self):
        if self.map.out_dim != self.approx.dim:
            raise ArgumentError(
                f"map output {self.map.out_dim} does not match approximation "
                f"dimension {self.approx.dim}"
            )
        if self.weight < 0.0:
            raise ArgumentError(f"term weight must be >= 0, got {self.weight}")


@dataclass(frozen=True)
class ConvexFunction:
    """sum_j w_j a_j(A_j x + b_j) + linear.x + constant."""

    n: int
    terms: tuple[ConvexTerm, ...] = ()
    linear: np.ndarray | None = None
    constant: float = 0.0

    def __post_init__(self):
        for term in self.terms:
            if term.map.in_dim != self.n:
                raise ArgumentError(
                    f"term map takes {term.map.in_dim} inputs, function has {self.n}"
                )
        linear = np.zeros(self.n) if self.linear is None else self.linear
        linear = np.asarray(linear, dtype=float).reshape(-1)
        if linear.size != self.n:
            raise ArgumentError(f"linear part has {linear.size} entries, need {self.n}")
        object.__setattr__(self, "linear", linear)
        object.__setattr__(self, "terms", tuple(self.terms))

    def value(self, x: np.ndarray) -> float:
        total = self.constant + float(self.linear @ x)
        for term in self.terms:
            total += term.weight * term.approx.value(term.map.apply(x))
        return total

    def evaluate(
        self, x: np.ndarray, hessian: bool = True
    ) -> tuple[float, np.ndarray, np.ndarray | None]:
        """Value, gradient and (optionally) Hessian by the affine chain rule."""
        value = self.constant + float(self.linear @ x)
        grad = self.linear.copy()
        hess = np.zeros((self.n, self.n)) if hessian else None
        for term in self.terms:
            A = term.map.A
            v, g, h = term.approx.evaluate(term.map.apply(x))
            value += term.weight * v
            grad += term.weight * (A.T @ g)
            if hess is not None:
                hess += term.weight * (A.T @ h @ A)
        return value, grad, hess

    def pad(self, extra: int) -> ConvexFunction:
        return ConvexFunction(
            self.n + extra,
            tuple(replace(t, map=t.map.pad(extra)) for t in self.terms),
            np.concatenate([self.linear, np.zeros(extra)]),
            self.constant,
        )

    def __add__(self, other: ConvexFunction) -> ConvexFunction:
        if other.n != self.n:
            raise ArgumentError("function dimensions differ")
        return ConvexFunction(
            self.n,
            self.terms + other.terms,
            self.linear + other.linear,
            self.constant + other.constant,
        )

    @classmethod
    def affine(cls, linear: np.ndarray, constant: float = 0.0) -> ConvexFunction:
        linear = np.asarray(linear, dtype=float).reshape(-1)
        return cls(linear.size, (), linear, constant)


@dataclass(frozen=True)
class ConvexSubproblem:
    """Convex program P_cvx over x in R^n.

    When ``n_slack`` > 0 the last ``n_slack`` variables are slacks: slack j
    relaxes inequality ``relaxed[j]`` and the last ``n_slack`` inequalities
    are the slack sign constraints -s_j <= 0.
    """

    n: int
    cost: ConvexFunction
    ineqs: tuple[ConvexFunction, ...] = ()
    eq_A: np.ndarray | None = None
    eq_b: np.ndarray | None = None
    n_slack: int = 0
    relaxed: tuple[int, ...] = ()
    kappa: float = 0.0
    labels: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self):
        if self.n < 1:
            raise ArgumentError(f"subproblem needs n >= 1, got {self.n}")
        eq_A = np.zeros((0, self.n)) if self.eq_A is None else self.eq_A
        eq_A = np.atleast_2d(np.asarray(eq_A, dtype=float))
        if eq_A.size == 0:
            eq_A = np.zeros((0, self.n))
        eq_b = np.zeros(eq_A.shape[0]) if self.eq_b is None else self.eq_b
        eq_b = np.asarray(eq_b, dtype=float).reshape(-1)
        if eq_A.shape[1] != self.n or eq_b.size != eq_A.shape[0]:
            raise ArgumentError(
                f"equalities have shape {eq_A.shape} / {eq_b.shape} for n={self.n}"
            )
        for fn in (self.cost, *self.ineqs):
            if fn.n != self.n:
                raise ArgumentError(
                    f"function dimension {fn.n} does not match {self.n}"
                )
        object.__setattr__(self, "eq_A", eq_A)
        object.__setattr__(self, "eq_b", eq_b)
        object.__setattr__(self, "ineqs", tuple(self.ineqs))

    @property
    def n_ineq(self) -> int:
        return len(self.ineqs)

    @property
    def n_eq(self) -> int:
        return self.eq_A.shape[0]

    def constraint_values(self, x: np.ndarray) -> np.ndarray:
        return np.array([c.value(x) for c in self.ineqs])


def relax_with_slacks(
    p: ConvexSubproblem,
    indices: Sequence[int],
    kappa: float,
    drop_cost: bool = False,
) -> ConvexSubproblem:
    """Relax f_i(x) <= 0 to f_i(x) <= s_i, s_i >= 0, and add kappa * sum(s).

    Slacks are appended after x in the order of ``indices``; their sign
    constraints are appended after the original inequalities. With
    ``drop_cost`` the original cost is replaced by the slack penalty alone.
    """
    indices = tuple(int(i) for i in indices)
    if not indices:
        return p
    if kappa <= 0.0:
        raise ArgumentError(f"penalty weight must be > 0, got {kappa}")
    if len(set(indices)) != len(indices) or any(
        i < 0 or i >= p.n_ineq for i in indices
    ):
        raise ArgumentError(f"invalid relaxation indices {indices}")
    extra = len(indices)
    n = p.n + extra
    slack_of = {i: j for j, i in enumerate(indices)}
    ineqs = []
    for i, c in enumerate(p.ineqs):
        padded = c.pad(extra)
        if i in slack_of:
            shift = np.zeros(n)
            shift[p.n + slack_of[i]] = -1.0
            padded = padded + ConvexFunction.affine(shift)
        ineqs.append(padded)
    for j in range(extra):
        sign = np.zeros(n)
        sign[p.n + j] = -1.0
        ineqs.append(ConvexFunction.affine(sign))
    penalty = np.zeros(n)
    penalty[p.n :] = kappa
    cost = ConvexFunction.affine(penalty)
    if not drop_cost:
        cost = p.cost.pad(extra) + cost
    labels = p.labels + tuple(f"slack[{i}]" for i in indices) if p.labels else ()
    return ConvexSubproblem(
        n,
        cost,
        tuple(ineqs),
        np.hstack([p.eq_A, np.zeros((p.n_eq, extra))]),
        p.eq_b,
        n_slack=extra,
        relaxed=indices,
        kappa=kappa,
        labels=labels,
    )
