"""
Multi-index arithmetic, supersymmetric tensors and Taylor expansion containers.

Index tuples are 0-based. A ``SymTensor`` stores one coefficient per canonical
(sorted) index tuple; the homogeneous form it represents sums that coefficient
over every permutation of the tuple, so ``x1**2 * x2`` expanded at the origin
stores ``(0, 0, 1) -> 1/3``.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from collections.abc import Callable, Iterable, Mapping
from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np

from .errors import ArgumentError, OracleError

IndexTuple = tuple[int, ...]

HESS_SYMMETRY_RTOL = 1e-12


@dataclass(frozen=True)
class MultiIndex:
    """Exponent vector alpha = (alpha_1 .. alpha_n)."""

    entries: tuple[int, ...]

    def __post_init__(self):
        if any(a < 0 for a in self.entries):
            raise ArgumentError(f"multi-index entries must be natural: {self.entries}")

    @property
    def order(self) -> int:
        return sum(self.entries)

    @property
    def factorial(self) -> int:
        return math.prod(math.factorial(a) for a in self.entries)

    def power(self, x: np.ndarray) -> float:
        """x**alpha."""
        return float(np.prod(np.asarray(x, dtype=float) ** np.asarray(self.entries)))

    def index_tuple(self) -> IndexTuple:
        """Canonical index tuple with variable j repeated alpha_j times."""
        return tuple(j for j, a in enumerate(self.entries) for _ in range(a))

    @classmethod
    def from_index_tuple(cls, idx: Iterable[int], dim: int) -> MultiIndex:
        counts = Counter(idx)
        return cls(tuple(counts.get(j, 0) for j in range(dim)))


def canonical(idx: Iterable[int]) -> IndexTuple:
    return tuple(sorted(idx))


def multiplicity(idx: IndexTuple) -> int:
    """Number of distinct permutations of an index tuple."""
    counts = Counter(idx)
    return math.factorial(len(idx)) // math.prod(
        math.factorial(c) for c in counts.values()
    )


@dataclass(frozen=True)
class SymTensor:
    """Supersymmetric coefficient tensor of one Taylor order."""

    dim: int
    order: int
    coeffs: Mapping[IndexTuple, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.order < 2:
            raise ArgumentError(f"tensor order must be >= 2, got {self.order}")
        clean: dict[IndexTuple, float] = {}
        for idx, value in self.coeffs.items():
            key = canonical(idx)
            self._check_index(key)
            if value != 0.0:
                clean[key] = clean.get(key, 0.0) + float(value)
        object.__setattr__(self, "coeffs", clean)

    def _check_index(self, idx: IndexTuple):
        if len(idx) != self.order:
            raise ArgumentError(
                f"index tuple {idx} has length {len(idx)}, expected {self.order}"
            )
        if any(j < 0 or j >= self.dim for j in idx):
            raise ArgumentError(f"index tuple {idx} out of range for dim {self.dim}")

    def get(self, idx: Iterable[int]) -> float:
        key = canonical(idx)
        self._check_index(key)
        return self.coeffs.get(key, 0.0)

    @cached_property
    def _packed(self) -> tuple[np.ndarray, np.ndarray]:
        if not self.coeffs:
            return np.zeros((0, self.order), dtype=int), np.zeros(0)
        keys = list(self.coeffs)
        idx = np.array(keys, dtype=int)
        weights = np.array([self.coeffs[k] * multiplicity(k) for k in keys])
        return idx, weights

    def apply(self, dx: np.ndarray) -> float:
        """Homogeneous form sum_{j1..jd} T_{j1..jd} dx_j1 ... dx_jd."""
        dx = np.asarray(dx, dtype=float)
        if dx.shape != (self.dim,):
            raise ArgumentError(
                f"dx has shape {dx.shape}, tensor expects ({self.dim},)"
            )
        idx, weights = self._packed
        if weights.size == 0:
            return 0.0
        return float(weights @ np.prod(dx[idx], axis=1))

    def is_zero(self) -> bool:
        return not self.coeffs

    def scaled(self, w: float) -> SymTensor:
        scaled = {k: w * v for k, v in self.coeffs.items()}
        return SymTensor(self.dim, self.order, scaled)

    def to_dense(self) -> np.ndarray:
        dense = np.zeros((self.dim,) * self.order)
        for key, value in self.coeffs.items():
            for perm in set(itertools.permutations(key)):
                dense[perm] = value
        return dense

    @classmethod
    def from_dense(cls, dense: np.ndarray) -> SymTensor:
        """Symmetrize a dense n x ... x n array (mean over permutations)."""
        dense = np.asarray(dense, dtype=float)
        order = dense.ndim
        dim = dense.shape[0]
        coeffs = {}
        for key in itertools.combinations_with_replacement(range(dim), order):
            perms = set(itertools.permutations(key))
            value = sum(dense[p] for p in perms) / len(perms)
            if value != 0.0:
                coeffs[key] = value
        return cls(dim, order, coeffs)

    @classmethod
    def from_monomials(
        cls, dim: int, order: int, monomials: Mapping[IndexTuple, float]
    ) -> SymTensor:
        """Build from monomial coefficients keyed by canonical index tuple.

        ``monomials[key]`` is the coefficient of the monomial dx^key in the
        homogeneous form; it is spread evenly over the key's permutations.
        """
        return cls(
            dim,
            order,
            {
                canonical(k): c / multiplicity(canonical(k))
                for k, c in monomials.items()
            },
        )


def tensor_get(t: SymTensor, idx: Iterable[int]) -> float:
    return t.get(idx)


def tensor_apply(t: SymTensor, dx: np.ndarray) -> float:
    return t.apply(dx)


@dataclass(frozen=True)
class TaylorExpansion:
    """Value, derivatives and higher-order tensors of a function at x_e."""

    x_e: np.ndarray
    f0: float
    grad: np.ndarray
    hess: np.ndarray
    tensors: tuple[SymTensor, ...] = ()
    d_trunc: int = 2
    exact: bool = False

    def __post_init__(self):
        x_e = np.array(self.x_e, dtype=float).reshape(-1)
        n = x_e.size
        grad = np.array(self.grad, dtype=float).reshape(n)
        hess = np.array(self.hess, dtype=float).reshape(n, n)
        if self.d_trunc < 2:
            raise ArgumentError(f"d_trunc must be >= 2, got {self.d_trunc}")
        scale = max(1.0, float(np.max(np.abs(hess)))) if hess.size else 1.0
        if np.max(np.abs(hess - hess.T), initial=0.0) > HESS_SYMMETRY_RTOL * scale:
            raise ArgumentError("Hessian is not symmetric")
        orders = [t.order for t in self.tensors]
        if len(set(orders)) != len(orders):
            raise ArgumentError(f"duplicate tensor orders {orders}")
        for t in self.tensors:
            if t.order < 3 or t.order > self.d_trunc:
                raise ArgumentError(
                    f"tensor order {t.order} outside 3..{self.d_trunc}"
                )
            if t.dim != n:
                raise ArgumentError(f"tensor dim {t.dim} does not match {n}")
        object.__setattr__(self, "x_e", x_e)
        object.__setattr__(self, "grad", grad)
        object.__setattr__(self, "hess", 0.5 * (hess + hess.T))
        object.__setattr__(
            self, "tensors", tuple(sorted(self.tensors, key=lambda t: t.order))
        )
        object.__setattr__(self, "f0", float(self.f0))

    @property
    def dim(self) -> int:
        return self.x_e.size

    def tensor(self, order: int) -> SymTensor | None:
        return next((t for t in self.tensors if t.order == order), None)

    def evaluate(self, x: np.ndarray) -> float:
        """Value of the truncated series at x."""
        dx = np.asarray(x, dtype=float) - self.x_e
        value = self.f0 + dx @ self.grad + 0.5 * dx @ self.hess @ dx
        return float(value + sum(t.apply(dx) for t in self.tensors))

    def scaled(self, w: float) -> TaylorExpansion:
        return replace(
            self,
            f0=w * self.f0,
            grad=w * self.grad,
            hess=w * self.hess,
            tensors=tuple(t.scaled(w) for t in self.tensors),
        )

    def shifted(self, c: float) -> TaylorExpansion:
        return replace(self, f0=self.f0 + c)

    def truncated(self, order: int) -> TaylorExpansion:
        """Drop tensors above ``order``."""
        if order >= self.d_trunc:
            return self
        return replace(
            self,
            tensors=tuple(t for t in self.tensors if t.order <= order),
            d_trunc=order,
            exact=False,
        )


# Central-difference stencils for the m-th derivative, second-order accurate.
_STENCILS: dict[int, tuple[tuple[int, float], ...]] = {
    1: ((-1, -0.5), (1, 0.5)),
    2: ((-1, 1.0), (0, -2.0), (1, 1.0)),
    3: ((-2, -0.5), (-1, 1.0), (1, -1.0), (2, 0.5)),
    4: ((-2, 1.0), (-1, -4.0), (0, 6.0), (1, -4.0), (2, 1.0)),
}

FD_MAX_ORDER = 4


def fd_steps(x_e: np.ndarray, order: int, h: float | None = None) -> np.ndarray:
    """Per-axis steps: 1e-3 (orders <= 2) or 1e-2 (orders 3-4) times (1 + |x_e|)."""
    base = h if h is not None else (1e-3 if order <= 2 else 1e-2)
    return base * (1.0 + np.abs(x_e))


def fd_expand(
    f: Callable[[np.ndarray], float],
    x_e: np.ndarray,
    d: int,
    h: float | None = None,
) -> TaylorExpansion:
    """Central finite-difference Taylor expansion up to order ``d`` (2..4).

    Each canonical index tuple is differentiated once with a tensor product of
    one-dimensional stencils, so the result is symmetric by construction.
    """
    x_e = np.asarray(x_e, dtype=float).reshape(-1)
    n = x_e.size
    if not 2 <= d <= FD_MAX_ORDER:
        raise ArgumentError(f"fd_expand supports orders 2..{FD_MAX_ORDER}, got {d}")

    cache: dict[tuple[int, ...], float] = {}

    def sample(offsets: tuple[int, ...], steps: np.ndarray) -> float:
        key = offsets + tuple(steps.round(15))
        if key not in cache:
            value = float(f(x_e + np.asarray(offsets) * steps))
            if not math.isfinite(value):
                raise OracleError(f"non-finite oracle value near {x_e}")
            cache[key] = value
        return cache[key]

    def derivative(idx: IndexTuple) -> float:
        steps = fd_steps(x_e, len(idx), h)
        counts = Counter(idx)
        axes = list(counts)
        stencils = [_STENCILS[counts[j]] for j in axes]
        total = 0.0
        for combo in itertools.product(*stencils):
            weight = math.prod(w for _, w in combo)
            if weight == 0.0:
                continue
            offsets = [0] * n
            for j, (off, _) in zip(axes, combo, strict=True):
                offsets[j] = off
            total += weight * sample(tuple(offsets), steps)
        return total / math.prod(steps[j] ** counts[j] for j in axes)

    f0 = sample((0,) * n, fd_steps(x_e, 1, h))
    grad = np.array([derivative((j,)) for j in range(n)])
    hess = np.zeros((n, n))
    for j, k in itertools.combinations_with_replacement(range(n), 2):
        hess[j, k] = hess[k, j] = derivative((j, k))
    tensors = []
    for order in range(3, d + 1):
        coeffs = {
            key: derivative(key) / math.factorial(order)
            for key in itertools.combinations_with_replacement(range(n), order)
        }
        tensors.append(SymTensor(n, order, coeffs))
    return TaylorExpansion(x_e, f0, grad, hess, tuple(tensors), d_trunc=d)


@dataclass(frozen=True)
class Polynomial:
    """Sparse multivariate polynomial sum_alpha a_alpha x^alpha.

    ``terms`` maps exponent tuples (length ``dim``) to coefficients.
    """

    dim: int
    terms: Mapping[tuple[int, ...], float] = field(default_factory=dict)

    def __post_init__(self):
        clean: dict[tuple[int, ...], float] = {}
        for alpha, coeff in self.terms.items():
            alpha = tuple(int(a) for a in alpha)
            if len(alpha) != self.dim or any(a < 0 for a in alpha):
                raise ArgumentError(f"bad exponent {alpha} for dim {self.dim}")
            if coeff != 0.0:
                clean[alpha] = clean.get(alpha, 0.0) + float(coeff)
        object.__setattr__(self, "terms", clean)

    @property
    def degree(self) -> int:
        return max((sum(a) for a in self.terms), default=0)

    @classmethod
    def from_list(cls, dim: int, terms: Iterable[tuple[float, Iterable[int]]]):
        """Build from ``[(coeff, exponents), ...]`` (the JSON problem format)."""
        out: dict[tuple[int, ...], float] = {}
        for coeff, alpha in terms:
            key = tuple(int(a) for a in alpha)
            out[key] = out.get(key, 0.0) + float(coeff)
        return cls(dim, out)

    def __add__(self, other: Polynomial) -> Polynomial:
        if other.dim != self.dim:
            raise ArgumentError("polynomial dimensions differ")
        merged = dict(self.terms)
        for alpha, coeff in other.terms.items():
            merged[alpha] = merged.get(alpha, 0.0) + coeff
        return Polynomial(self.dim, merged)

    def __neg__(self) -> Polynomial:
        return self.scaled(-1.0)

    def __sub__(self, other: Polynomial) -> Polynomial:
        return self + (-other)

    def scaled(self, w: float) -> Polynomial:
        return Polynomial(self.dim, {a: w * c for a, c in self.terms.items()})

    def value(self, x: np.ndarray) -> float:
        x = np.asarray(x, dtype=float)
        total = sum(c * np.prod(x ** np.asarray(a)) for a, c in self.terms.items())
        return float(total)

    def shifted_coefficients(
        self, x_e: np.ndarray, max_order: int
    ) -> dict[tuple[int, ...], float]:
        """Coefficients c_beta of dx^beta in p(x_e + dx), for |beta| <= max_order."""
        x_e = np.asarray(x_e, dtype=float)
        out: dict[tuple[int, ...], float] = {}
        for alpha, coeff in self.terms.items():
            for beta in itertools.product(*(range(a + 1) for a in alpha)):
                if sum(beta) > max_order:
                    continue
                factor = coeff
                for a, b, xe in zip(alpha, beta, x_e, strict=True):
                    factor *= math.comb(a, b) * xe ** (a - b)
                out[beta] = out.get(beta, 0.0) + factor
        return out

    def expand(self, x_e: np.ndarray, d: int | None = None) -> TaylorExpansion:
        """Exact Taylor expansion, truncated at ``d`` (default: the degree)."""
        x_e = np.asarray(x_e, dtype=float).reshape(self.dim)
        d = max(2, self.degree if d is None else d)
        coeffs = self.shifted_coefficients(x_e, d)
        n = self.dim
        grad = np.zeros(n)
        hess = np.zeros((n, n))
        monomials: dict[int, dict[IndexTuple, float]] = {}
        for beta, c in coeffs.items():
            order = sum(beta)
            if order == 1:
                grad[beta.index(1)] += c
            elif order == 2:
                j, k = MultiIndex(beta).index_tuple()
                if j == k:
                    hess[j, j] += 2.0 * c
                else:
                    hess[j, k] += c
                    hess[k, j] += c
            elif order >= 3:
                key = MultiIndex(beta).index_tuple()
                monomials.setdefault(order, {})[key] = c
        tensors = tuple(
            SymTensor.from_monomials(n, order, monos)
            for order, monos in sorted(monomials.items())
        )
        return TaylorExpansion(
            x_e,
            coeffs.get((0,) * n, 0.0),
            grad,
            hess,
            tensors,
            d_trunc=d,
            exact=self.degree <= d,
        )

    def gradient(self, x: np.ndarray) -> np.ndarray:
        return self.expand(x, 2).grad

    def hessian(self, x: np.ndarray) -> np.ndarray:
        return self.expand(x, 2).hess
