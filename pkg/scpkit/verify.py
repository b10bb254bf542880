"""
Independent checks: sampling certification of inner-convex approximations,
brute-force grid minima, KKT residuals with true gradients, and the suites run
by ``scpkit verify``.
"""

from __future__ import annotations

import contextlib
import itertools
import math
from collections.abc import Callable, Iterator, Sequence
from dataclasses import dataclass, field
from typing import Any
from unittest import mock

import numpy as np
from loguru import logger

from .config import BoundaryConditions, VehicleParams
from .convexify import (
    InnerConvexApprox,
    PowerTerm,
    TaylorCvx,
    dc_linearize,
    split_hessian,
    taylor_convexify,
    verify_overestimation,
)
from .convexify import taylor as taylor_module
from .errors import ArgumentError
from .oracles import PolynomialOracle, ScalarOracle
from .scp import NonConvexProblem
from .solver import (
    AffineMap,
    ConvexFunction,
    ConvexSubproblem,
    ConvexTerm,
    KktResiduals,
    SolverStatus,
    kkt_residual,
    relax_with_slacks,
    solve,
)
from .tensor_taylor import Polynomial, SymTensor, TaylorExpansion, fd_expand
from .trajectory import (
    ThrustOracle,
    build_transcription,
    keepout_split,
    thrust_force,
)

CONDITIONS = ("overestimation", "value_match", "gradient_match", "convexity", "psd")

OVERESTIMATION_TOL = 1e-10
VALUE_TOL = 1e-10
GRADIENT_TOL = 1e-8
CONVEXITY_TOL = 1e-10
PSD_TOL = 1e-8
MAX_GRID_POINTS = 10**7


@dataclass
class ConditionReport:
    samples: int = 0
    violations: int = 0
    worst_gap: float = 0.0

    def add(self, gap: float, violated: bool):
        self.samples += 1
        if violated:
            self.violations += 1
            self.worst_gap = max(self.worst_gap, gap)


@dataclass
class CertReport:
    """Sampling certificate for the overestimation and convexity conditions."""

    conditions: dict[str, ConditionReport] = field(
        default_factory=lambda: {name: ConditionReport() for name in CONDITIONS}
    )

    @property
    def samples(self) -> int:
        return sum(c.samples for c in self.conditions.values())

    @property
    def violations(self) -> int:
        return sum(c.violations for c in self.conditions.values())

    @property
    def worst_gap(self) -> float:
        return max((c.worst_gap for c in self.conditions.values()), default=0.0)

    def passed(self, require_overestimation: bool = True) -> bool:
        names = CONDITIONS if require_overestimation else CONDITIONS[1:]
        return all(self.conditions[n].violations == 0 for n in names)

    def to_dict(self) -> dict[str, Any]:
        return {
            "samples": self.samples,
            "violations": self.violations,
            "worst_gap": self.worst_gap,
            "conditions": {
                name: {
                    "samples": c.samples,
                    "violations": c.violations,
                    "worst_gap": c.worst_gap,
                }
                for name, c in self.conditions.items()
            },
        }


def _fd_gradient(fun: Callable[[np.ndarray], float], x: np.ndarray) -> np.ndarray:
    h = np.cbrt(np.finfo(float).eps) * (1.0 + np.abs(x))
    grad = np.zeros(x.size)
    for j in range(x.size):
        e = np.zeros(x.size)
        e[j] = h[j]
        grad[j] = (fun(x + e) - fun(x - e)) / (2.0 * h[j])
    return grad


def _as_callable(f: ScalarOracle | Callable[[np.ndarray], float]):
    return f.value if isinstance(f, ScalarOracle) else f


def certify_inner_convex(
    f: ScalarOracle | Callable[[np.ndarray], float],
    approx: InnerConvexApprox,
    box: tuple[Sequence[float], Sequence[float]],
    n_samples: int = 10_000,
    seed: int = 0,
    n_hessian: int = 100,
) -> CertReport:
    """
    Sample the overestimation, value/gradient match and convexity conditions.

    Args:
        f: Approximated function
        approx: Candidate inner-convex approximation
        box: (lower, upper) corners of the sampling domain
        n_samples: Points for overestimation and pairs for the midpoint test
        seed: Generator seed; the report is deterministic per seed
        n_hessian: Points at which the reported Hessian is checked for PSD

    Returns:
        Per-condition sample and violation counts
    """
    lo = np.asarray(box[0], dtype=float)
    hi = np.asarray(box[1], dtype=float)
    if lo.shape != (approx.dim,) or hi.shape != lo.shape or np.any(hi < lo):
        raise ArgumentError("box must be two corners matching the approximation")
    if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
        raise ArgumentError("box must be bounded")
    fun = _as_callable(f)
    rng = np.random.default_rng(seed)
    report = CertReport()
    cond = report.conditions

    points = rng.uniform(lo, hi, size=(n_samples, approx.dim))
    for x in points:
        fx = float(fun(x))
        shortfall = fx - approx.value(x)
        limit = OVERESTIMATION_TOL * (1.0 + abs(fx))
        cond["overestimation"].add(shortfall, shortfall > limit)

    x_e = approx.x_e
    f_e = float(fun(x_e))
    scale = 1.0 + abs(f_e)
    gap = abs(approx.value(x_e) - f_e)
    cond["value_match"].add(gap, gap > VALUE_TOL * scale)
    grad_gap = float(
        np.linalg.norm(_fd_gradient(approx.value, x_e) - _fd_gradient(fun, x_e))
    )
    cond["gradient_match"].add(grad_gap, grad_gap > GRADIENT_TOL * scale)

    x1 = rng.uniform(lo, hi, size=(n_samples, approx.dim))
    x2 = rng.uniform(lo, hi, size=(n_samples, approx.dim))
    taus = rng.uniform(0.0, 1.0, size=n_samples)
    for a, b, tau in zip(x1, x2, taus, strict=True):
        fa, fb = approx.value(a), approx.value(b)
        chord = tau * fa + (1.0 - tau) * fb
        excess = approx.value(tau * a + (1.0 - tau) * b) - chord
        limit = CONVEXITY_TOL * (1.0 + abs(fa) + abs(fb))
        cond["convexity"].add(excess, excess > limit)

    for x in rng.uniform(lo, hi, size=(n_hessian, approx.dim)):
        _, _, hess = approx.evaluate(x)
        min_eig = float(np.linalg.eigvalsh(hess)[0])
        limit = PSD_TOL * max(1.0, float(np.abs(hess).max()))
        cond["psd"].add(-min_eig, min_eig < -limit)
    return report


@dataclass(frozen=True)
class BruteForceResult:
    x_best: np.ndarray | None
    f_best: float
    feasible: int
    total: int

    @property
    def empty(self) -> bool:
        return self.feasible == 0


def brute_force_min(
    f: ScalarOracle | Callable[[np.ndarray], float],
    constraints: Sequence[ScalarOracle | Callable[[np.ndarray], float]],
    box: tuple[Sequence[float], Sequence[float]],
    resolution: int | Sequence[int] = 101,
) -> BruteForceResult:
    """Minimum of f over the grid points satisfying every constraint <= 0."""
    lo = np.atleast_1d(np.asarray(box[0], dtype=float))
    hi = np.atleast_1d(np.asarray(box[1], dtype=float))
    n = lo.size
    if n > 3:
        raise ArgumentError(f"brute force supports dimension <= 3, got {n}")
    counts = [int(resolution)] * n if np.isscalar(resolution) else list(resolution)
    if len(counts) != n or min(counts) < 1:
        raise ArgumentError(f"bad grid resolution {resolution}")
    total = math.prod(counts)
    if total > MAX_GRID_POINTS:
        raise ArgumentError(f"grid of {total} points exceeds {MAX_GRID_POINTS}")
    axes = [np.linspace(a, b, k) for a, b, k in zip(lo, hi, counts, strict=True)]
    fun = _as_callable(f)
    cons = [_as_callable(c) for c in constraints]
    best_x, best_f, feasible = None, math.inf, 0
    for point in itertools.product(*axes):
        x = np.array(point)
        if any(c(x) > 0.0 for c in cons):
            continue
        feasible += 1
        fx = float(fun(x))
        if fx < best_f:
            best_x, best_f = x, fx
    return BruteForceResult(best_x, best_f, feasible, total)


def kkt_check_original(
    p: NonConvexProblem, x: np.ndarray, nu: np.ndarray, mu: np.ndarray
) -> KktResiduals:
    """KKT residuals of the original problem using the true gradients."""
    x = np.asarray(x, dtype=float)
    nu = np.asarray(nu, dtype=float).reshape(-1)
    mu = np.asarray(mu, dtype=float).reshape(-1)
    if nu.size != len(p.ineqs) or mu.size != p.eq_A.shape[0]:
        raise ArgumentError(
            f"expected {len(p.ineqs)} inequality and {p.eq_A.shape[0]} equality duals"
        )
    values = p.constraint_values(x)
    grad = p.cost_gradient(x)
    if nu.size:
        grad = grad + p.constraint_gradients(x).T @ nu
    grad = grad + p.eq_A.T @ mu
    return KktResiduals(
        stationarity=float(np.max(np.abs(grad))),
        primal_eq=float(np.max(np.abs(p.eq_residual(x)), initial=0.0)),
        primal_ineq=max(0.0, float(values.max())) if values.size else 0.0,
        complementarity=float(np.max(np.abs(nu * values), initial=0.0)),
        dual_feasibility=max(0.0, -float(nu.min())) if nu.size else 0.0,
    )


# Suites for the command line.


@dataclass(frozen=True)
class SuiteCheck:
    suite: str
    name: str
    passed: bool
    detail: str = ""


def random_polynomial(
    rng: np.random.Generator, dim: int, degree: int, n_terms: int = 6
) -> Polynomial:
    terms = []
    for _ in range(n_terms):
        order = int(rng.integers(1, degree + 1))
        exps = [0] * dim
        for j in rng.integers(0, dim, size=order):
            exps[j] += 1
        terms.append((float(rng.uniform(-1.0, 1.0)), exps))
    return Polynomial.from_list(dim, terms)


def random_symtensor(rng: np.random.Generator, dim: int, order: int) -> SymTensor:
    coeffs = {
        key: float(rng.uniform(-1.0, 1.0))
        for key in itertools.combinations_with_replacement(range(dim), order)
        if rng.uniform() < 0.7
    }
    return SymTensor(dim, order, coeffs)


def tensor_overestimation_violations(
    t: SymTensor, rng: np.random.Generator, n_samples: int, radius: float = 2.0
) -> int:
    """Samples where the convexified form falls below the homogeneous form."""
    zero = np.zeros(t.dim)
    exp = TaylorExpansion(
        zero, 0.0, zero, np.zeros((t.dim, t.dim)), (t,), d_trunc=t.order
    )
    approx = taylor_convexify(exp)
    report = verify_overestimation(
        approx,
        t.apply,
        rng.uniform(-radius, radius, size=(n_samples, t.dim)),
        tol=OVERESTIMATION_TOL,
    )
    return report.violations


@contextlib.contextmanager
def corrupted_tcvx() -> Iterator[None]:
    """Zero every T_cvx coefficient; the convexify suite must then fail."""
    original = taylor_module.tensor_cvx_coeffs

    def broken(t):
        t_diag, t_cvx = original(t)
        return t_diag, 0.0 * t_cvx

    with mock.patch.object(taylor_module, "tensor_cvx_coeffs", broken):
        yield


def _convexify_suite(seed: int, n_samples: int) -> list[SuiteCheck]:
    rng = np.random.default_rng(seed)
    checks = []
    violations = sum(
        tensor_overestimation_violations(
            random_symtensor(rng, int(rng.integers(1, 4)), int(rng.integers(3, 5))),
            rng,
            n_samples,
        )
        for _ in range(20)
    )
    checks.append(
        SuiteCheck(
            "convexify", "tensor_overestimation", violations == 0, f"{violations}"
        )
    )

    failed = 0
    for _ in range(10):
        dim = int(rng.integers(1, 4))
        poly = random_polynomial(rng, dim, 4)
        oracle = PolynomialOracle(poly)
        x_e = rng.uniform(-1.0, 1.0, size=dim)
        approx = TaylorCvx(max(2, poly.degree)).convexify(oracle, x_e)
        report = certify_inner_convex(
            oracle, approx, (x_e - 2.0, x_e + 2.0), n_samples // 10, seed
        )
        failed += not report.passed()
    checks.append(
        SuiteCheck("convexify", "random_polynomials", failed == 0, f"{failed}")
    )

    H = rng.standard_normal((4, 4))
    H = H + H.T
    h_plus, h_minus = split_hessian(H)
    ok = np.allclose(h_plus + h_minus, H, atol=1e-10) and (
        np.linalg.eigvalsh(h_plus)[0] >= -1e-10
    )
    checks.append(SuiteCheck("convexify", "split_hessian", bool(ok)))

    quad = Polynomial.from_list(2, [(1.0, (2, 0)), (0.5, (0, 2)), (0.3, (1, 1))])
    c = PolynomialOracle(quad)
    x_e = np.array([0.3, -0.7])
    a = dc_linearize(c, c, x_e)
    probe = np.array([1.1, 0.4])
    expected = quad.value(probe) - quad.value(x_e) - (probe - x_e) @ quad.gradient(x_e)
    checks.append(
        SuiteCheck(
            "convexify", "dc_linearize", abs(a.value(probe) - expected) <= 1e-12
        )
    )
    return checks


def _solver_suite(seed: int) -> list[SuiteCheck]:
    del seed
    checks = []
    ident = AffineMap.identity(1)
    zero1 = np.zeros(1)

    def approx(f0, g, h, terms=()):
        return InnerConvexApprox(zero1, f0, np.array([g]), np.array([[h]]), terms)

    square = ConvexFunction(1, (ConvexTerm(approx(0.0, 0.0, 2.0), ident),))
    p = ConvexSubproblem(1, square, (), np.array([[1.0]]), np.array([3.0]))
    r = solve(p)
    ok = r.ok and abs(r.x_star[0] - 3.0) < 1e-6 and abs(r.mu_star[0] + 6.0) < 1e-6
    checks.append(SuiteCheck("solver", "equality_dual", ok, f"mu={r.mu_star}"))

    lower = ConvexFunction.affine(np.array([-1.0]), 1.0)
    p = ConvexSubproblem(1, ConvexFunction.affine(np.array([1.0])), (lower,))
    r = solve(p)
    ok = r.ok and abs(r.x_star[0] - 1.0) < 1e-6 and abs(r.nu_star[0] - 1.0) < 1e-6
    checks.append(SuiteCheck("solver", "inequality_dual", ok, f"nu={r.nu_star}"))

    kkt = kkt_residual(p, r.x_star, r.nu_star, r.mu_star)
    checks.append(
        SuiteCheck("solver", "kkt_self_consistency", kkt.max() <= 1e-8, f"{kkt.max()}")
    )

    # Exact penalty: min (x - 2)^2 s.t. x <= 1 has nu* = 2.
    shifted = ConvexFunction(1, (ConvexTerm(approx(4.0, -4.0, 2.0), ident),))
    upper = ConvexFunction.affine(np.array([1.0]), -1.0)
    base = ConvexSubproblem(1, shifted, (upper,))
    strong = solve(relax_with_slacks(base, [0], 5.0))
    weak = solve(relax_with_slacks(base, [0], 1.0))
    ok = (
        strong.ok
        and abs(strong.x_star[0] - 1.0) < 1e-6
        and abs(strong.x_star[1]) < 1e-6
        and weak.ok
        and weak.x_star[1] > 1e-3
    )
    checks.append(SuiteCheck("solver", "exact_penalty", ok))

    cube = InnerConvexApprox(
        zero1, 0.0, np.array([1.0]), np.zeros((1, 1)), (PowerTerm(3, [0.0], [1.0]),)
    )
    r = solve(ConvexSubproblem(1, ConvexFunction(1, (ConvexTerm(cube, ident),))))
    ok = r.status is SolverStatus.OPTIMAL and abs(r.x_star[0] + 1 / math.sqrt(3)) < 1e-6
    checks.append(SuiteCheck("solver", "cubic_minimum", ok, f"x={r.x_star}"))
    return checks


def _thrust_point(rng: np.random.Generator, params, min_thrust: float = 0.2):
    """Random (v, a) whose thrust stays clear of the non-smooth F = 0."""
    while True:
        z = rng.uniform(-1.0, 1.0, size=6)
        if np.linalg.norm(thrust_force(z[:3], z[3:], params)) >= min_thrust:
            return z


def _trajectory_suite(seed: int, n_samples: int) -> list[SuiteCheck]:
    rng = np.random.default_rng(seed)
    params = VehicleParams()
    checks = []

    bc = BoundaryConditions()
    trans = build_transcription(params, bc)
    c0, c1 = rng.standard_normal(3), rng.standard_normal(3)
    knots = np.concatenate([c0 + c1 * t for t in trans.times[:-1]])
    # The final segment holds the last knot, so integrate that profile exactly.
    t_last = trans.times[-2]
    a_last = c0 + c1 * t_last
    r0, v0 = np.array(bc.r0), np.array(bc.rdot0)
    v_mid = v0 + c0 * t_last + c1 * t_last**2 / 2.0
    r_mid = r0 + v0 * t_last + c0 * t_last**2 / 2.0 + c1 * t_last**3 / 6.0
    v_end = v_mid + a_last * trans.dt
    r_end = r_mid + v_mid * trans.dt + a_last * trans.dt**2 / 2.0
    pos, vel, _ = trans.states(knots)
    err = max(np.abs(pos[-1] - r_end).max(), np.abs(vel[-1] - v_end).max())
    checks.append(SuiteCheck("trajectory", "transcription", err <= 1e-10, f"{err:.2e}"))

    thrust = ThrustOracle(params)
    worst = 0.0
    for _ in range(5):
        z = _thrust_point(rng, params)
        exact = thrust.expand(z, 3)
        fd = fd_expand(thrust.value, z, 3)
        scale = 1.0 + np.abs(exact.hess).max()
        worst = max(worst, float(np.abs(exact.hess - fd.hess).max() / scale))
    checks.append(SuiteCheck("trajectory", "thrust_derivatives", worst <= 1e-4))

    koz = keepout_split(params)
    strategy = koz.strategy()
    oracle = koz.oracle()
    failed = 0
    for _ in range(5):
        r_e = rng.uniform(-5.0, 5.0, size=3)
        approx = strategy.convexify(oracle, r_e)
        report = certify_inner_convex(
            oracle, approx, (r_e - 2.0, r_e + 2.0), n_samples // 10, seed
        )
        failed += not report.passed()
    checks.append(SuiteCheck("trajectory", "keepout_certificate", failed == 0))

    failed = 0
    cvx = TaylorCvx(3)
    for _ in range(5):
        z = _thrust_point(rng, params)
        approx = cvx.convexify(thrust, z)
        report = certify_inner_convex(
            thrust, approx, (z - 0.5, z + 0.5), n_samples // 10, seed
        )
        failed += not report.passed(require_overestimation=False)
    checks.append(SuiteCheck("trajectory", "thrust_certificate", failed == 0))
    return checks


SUITES = ("convexify", "solver", "trajectory")


def run_suites(
    selector: str = "all",
    seed: int = 0,
    n_samples: int = 2_000,
    corrupt_tcvx: bool = False,
) -> list[SuiteCheck]:
    """Run the named suite, or all of them."""
    if selector != "all" and selector not in SUITES:
        raise ArgumentError(
            f"unknown suite '{selector}', expected one of {SUITES + ('all',)}"
        )
    names = SUITES if selector == "all" else (selector,)
    stack = contextlib.ExitStack()
    if corrupt_tcvx:
        logger.warning("Running with corrupted T_cvx coefficients")
        stack.enter_context(corrupted_tcvx())
    checks: list[SuiteCheck] = []
    with stack:
        for name in names:
            if name == "convexify":
                checks += _convexify_suite(seed, n_samples)
            elif name == "solver":
                checks += _solver_suite(seed)
            else:
                checks += _trajectory_suite(seed, n_samples)
    return checks

