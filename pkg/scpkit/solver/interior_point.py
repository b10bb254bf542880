"""
Infeasible-start primal-dual interior-point method for ConvexSubproblem.

Inequalities c(x) <= 0 get slacks w > 0 with c(x) + w = 0. Each iteration
solves the Newton system of the perturbed KKT conditions reduced to (dx, dy),
picks the centering parameter from an affine predictor step, and backtracks
on the KKT residual norm under a fraction-to-boundary rule.
"""

from __future__ import annotations

import enum
import warnings
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from loguru import logger

from ..config import SolverConfig
from ..errors import ArgumentError
from .subproblem import ConvexFunction, ConvexSubproblem


class SolverStatus(str, enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    MAX_ITERATIONS = "MaxIterations"
    UNBOUNDED = "Unbounded"


@dataclass(frozen=True)
class KktResiduals:
    """Max-norms of the KKT condition residuals."""

    stationarity: float
    primal_eq: float
    primal_ineq: float
    complementarity: float
    dual_feasibility: float = 0.0

    def max(self) -> float:
        return max(
            self.stationarity,
            self.primal_eq,
            self.primal_ineq,
            self.complementarity,
            self.dual_feasibility,
        )

    def as_dict(self) -> dict[str, float]:
        return {
            "stationarity": self.stationarity,
            "primal_eq": self.primal_eq,
            "primal_ineq": self.primal_ineq,
            "complementarity": self.complementarity,
            "dual_feasibility": self.dual_feasibility,
        }


@dataclass(frozen=True)
class SolverResult:
    status: SolverStatus
    x_star: np.ndarray
    nu_star: np.ndarray
    mu_star: np.ndarray
    kkt_residuals: KktResiduals
    iterations: int = 0
    cost: float = float("nan")
    # Optimal max violation of the phase I problem, when it ran.
    phase1_value: float | None = None

    @property
    def ok(self) -> bool:
        return self.status is SolverStatus.OPTIMAL


def _max_abs(v: np.ndarray) -> float:
    return float(np.max(np.abs(v))) if v.size else 0.0


def kkt_residual(
    p: ConvexSubproblem, x: np.ndarray, nu: np.ndarray, mu: np.ndarray
) -> KktResiduals:
    """KKT residuals of the subproblem at (x, nu, mu)."""
    x = np.asarray(x, dtype=float)
    nu = np.asarray(nu, dtype=float).reshape(-1)
    mu = np.asarray(mu, dtype=float).reshape(-1)
    if x.size != p.n or nu.size != p.n_ineq or mu.size != p.n_eq:
        raise ArgumentError(
            f"expected x[{p.n}], nu[{p.n_ineq}], mu[{p.n_eq}]; "
            f"got x[{x.size}], nu[{nu.size}], mu[{mu.size}]"
        )
    _, grad, _ = p.cost.evaluate(x, hessian=False)
    values = np.zeros(p.n_ineq)
    for i, c in enumerate(p.ineqs):
        v, g, _ = c.evaluate(x, hessian=False)
        values[i] = v
        grad = grad + nu[i] * g
    grad = grad + p.eq_A.T @ mu
    return KktResiduals(
        stationarity=_max_abs(grad),
        primal_eq=_max_abs(p.eq_A @ x - p.eq_b),
        primal_ineq=max(0.0, float(values.max())) if values.size else 0.0,
        complementarity=_max_abs(nu * values),
        dual_feasibility=max(0.0, -float(nu.min())) if nu.size else 0.0,
    )


@dataclass
class _Presolved:
    keep: np.ndarray
    E: np.ndarray
    e: np.ndarray
    consistent: bool


def _presolve(p: ConvexSubproblem, tol: float) -> _Presolved:
    """Drop linearly dependent equality rows via pivoted QR of eq_A^T."""
    if p.n_eq == 0:
        return _Presolved(np.zeros(0, dtype=int), p.eq_A, p.eq_b, True)
    _, R, piv = scipy.linalg.qr(p.eq_A.T, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    rank = int(np.sum(diag > tol * max(1.0, float(diag[0])))) if diag.size else 0
    keep = np.sort(piv[:rank])
    drop = np.setdiff1d(np.arange(p.n_eq), keep)
    E, e = p.eq_A[keep], p.eq_b[keep]
    consistent = True
    if drop.size:
        if rank:
            combo = scipy.linalg.lstsq(E.T, p.eq_A[drop].T)[0].T
            implied = combo @ e
        else:
            implied = np.zeros(drop.size)
        mismatch = np.abs(p.eq_b[drop] - implied)
        consistent = bool(np.all(mismatch <= 1e-8 * (1.0 + np.abs(p.eq_b[drop]))))
        logger.debug(f"Presolve removed {drop.size} dependent equality rows")
    return _Presolved(keep, E, e, consistent)


class _NumericalFailure(Exception):
    """Newton system could not be formed or solved."""


@dataclass
class _Point:
    f: float
    g: np.ndarray
    c: np.ndarray
    J: np.ndarray
    lagr_hess: np.ndarray | None

    def finite(self) -> bool:
        return bool(
            np.isfinite(self.f)
            and np.all(np.isfinite(self.g))
            and np.all(np.isfinite(self.c))
            and np.all(np.isfinite(self.J))
            and (self.lagr_hess is None or np.all(np.isfinite(self.lagr_hess)))
        )


class _Newton:
    """Residuals, Newton systems and directions for one subproblem."""

    def __init__(
        self, p: ConvexSubproblem, E: np.ndarray, e: np.ndarray, cfg: SolverConfig
    ):
        self.p = p
        self.E = E
        self.e = e
        self.cfg = cfg

    def point(self, x: np.ndarray, lam: np.ndarray, hessian: bool) -> _Point:
        f, g, H = self.p.cost.evaluate(x, hessian)
        c = np.zeros(self.p.n_ineq)
        J = np.zeros((self.p.n_ineq, self.p.n))
        for i, fn in enumerate(self.p.ineqs):
            c[i], J[i], h = fn.evaluate(x, hessian)
            if H is not None and h is not None:
                H = H + lam[i] * h
        return _Point(f, g, c, J, H)

    def residuals(self, pt: _Point, x, w, lam, y, target: float):
        return (
            pt.g + pt.J.T @ lam + self.E.T @ y,
            pt.c + w,
            self.E @ x - self.e,
            w * lam - target,
        )

    @staticmethod
    def norm(res) -> float:
        return float(np.sqrt(sum(float(r @ r) for r in res)))

    def factor(
        self, pt: _Point, w: np.ndarray, lam: np.ndarray
    ) -> Callable[[np.ndarray], np.ndarray]:
        n, q = self.p.n, self.E.shape[0]
        delta = self.cfg.regularization
        K = np.zeros((n + q, n + q))
        K[:n, :n] = pt.lagr_hess + pt.J.T @ ((lam / w)[:, None] * pt.J)
        K[:n, :n] += delta * np.eye(n)
        K[:n, n:] = self.E.T
        K[n:, :n] = self.E
        K[n:, n:] = -delta * np.eye(q)
        if not np.all(np.isfinite(K)):
            raise _NumericalFailure("non-finite KKT matrix")
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
                lu, piv = scipy.linalg.lu_factor(K, check_finite=False)
            if np.all(np.isfinite(lu)) and np.min(np.abs(np.diag(lu))) > 0.0:
                return lambda rhs: scipy.linalg.lu_solve(
                    (lu, piv), rhs, check_finite=False
                )
        except (np.linalg.LinAlgError, ValueError):
            pass
        logger.debug("Singular KKT matrix, falling back to least squares")
        return lambda rhs: scipy.linalg.lstsq(K, rhs)[0]

    def direction(self, solve_kkt, pt: _Point, w, lam, res):
        r_dual, r_ineq, r_eq, r_cent = res
        n = self.p.n
        rhs_x = -r_dual + pt.J.T @ ((r_cent - lam * r_ineq) / w)
        rhs = np.concatenate([rhs_x, -r_eq])
        if not np.all(np.isfinite(rhs)):
            raise _NumericalFailure("non-finite Newton right-hand side")
        try:
            sol = solve_kkt(rhs)
        except (np.linalg.LinAlgError, ValueError) as e:
            raise _NumericalFailure(str(e)) from e
        if not np.all(np.isfinite(sol)):
            raise _NumericalFailure("non-finite Newton direction")
        dx, dy = sol[:n], sol[n:]
        dw = -r_ineq - pt.J @ dx
        dlam = (-r_cent + lam * r_ineq + lam * (pt.J @ dx)) / w
        return dx, dw, dlam, dy

    def converged(self, pt: _Point, x, lam, y) -> bool:
        worst = max(
            _max_abs(pt.g + pt.J.T @ lam + self.E.T @ y),
            _max_abs(self.E @ x - self.e),
            max(0.0, float(pt.c.max())) if pt.c.size else 0.0,
            _max_abs(lam * pt.c),
        )
        return worst <= self.cfg.kkt_tol

    def unbounded_ray(self, x: np.ndarray, dx: np.ndarray, pt: _Point) -> bool:
        """Huge Newton step along which the cost drops and constraints hold."""
        step = float(np.linalg.norm(dx))
        if step < 1e-2 * self.cfg.unbounded_norm * (1.0 + float(np.linalg.norm(x))):
            return False
        if float(pt.g @ dx) >= 0.0 or _max_abs(self.E @ dx) > self.cfg.kkt_tol * step:
            return False
        far = x + dx
        if self.p.n_ineq and float(self.p.constraint_values(far).max()) > 0.0:
            return False
        return self.p.cost.value(far) < pt.f - 1.0


def _boundary_step(v: np.ndarray, dv: np.ndarray, tau: float) -> float:
    neg = dv < 0.0
    if not np.any(neg):
        return 1.0
    return float(min(1.0, tau * np.min(-v[neg] / dv[neg])))


def _centering_target(
    cfg: SolverConfig, res, w, lam, dw, dlam, gap: float, recenter: bool
) -> float:
    """Complementarity target sigma * gap from the affine predictor step.

    The target never drops below mu_floor * kkt_tol, and sigma stays at
    sigma_max while the feasibility residuals exceed the gap.
    """
    floor = cfg.mu_floor * cfg.kkt_tol
    if recenter:
        return max(gap, floor)
    a_aff = min(_boundary_step(w, dw, 1.0), _boundary_step(lam, dlam, 1.0))
    gap_aff = float((w + a_aff * dw) @ (lam + a_aff * dlam)) / w.size
    sigma = (gap_aff / gap) ** 3 if gap > 0.0 else 0.0
    sigma = min(cfg.sigma_max, max(cfg.sigma_min, sigma))
    infeasibility = max(_max_abs(r) for r in res[:3])
    if infeasibility > gap:
        sigma = cfg.sigma_max
    return max(sigma * gap, floor)


def _run(p: ConvexSubproblem, cfg: SolverConfig, x0: np.ndarray, E, e):
    """Core iteration. Returns (status, x, lam, y, iterations)."""
    newton = _Newton(p, E, e, cfg)
    m = p.n_ineq
    # w and lam never get closer to zero than this.
    floor = 1e-4 * cfg.mu_floor * cfg.kkt_tol
    x = x0.copy()
    c0 = p.constraint_values(x) if m else np.zeros(0)
    w = np.maximum(-c0, cfg.slack_floor)
    lam = np.ones(m)
    y = np.zeros(E.shape[0])
    stalls = 0
    recenter = False
    for it in range(1, cfg.max_iterations + 1):
        pt = newton.point(x, lam, hessian=True)
        if not pt.finite():
            logger.debug(f"Non-finite function data at iteration {it}")
            return SolverStatus.MAX_ITERATIONS, x, lam, y, it
        if newton.converged(pt, x, lam, y):
            return SolverStatus.OPTIMAL, x, lam, y, it - 1
        gap = float(w @ lam) / m if m else 0.0
        try:
            solve_kkt = newton.factor(pt, w, lam)
            res = newton.residuals(pt, x, w, lam, y, 0.0)
            dx, dw, dlam, dy = newton.direction(solve_kkt, pt, w, lam, res)
            target = 0.0
            if m:
                target = _centering_target(cfg, res, w, lam, dw, dlam, gap, recenter)
                res = newton.residuals(pt, x, w, lam, y, target)
                dx, dw, dlam, dy = newton.direction(solve_kkt, pt, w, lam, res)
        except _NumericalFailure as failure:
            logger.debug(f"Interior point stopped at iteration {it}: {failure}")
            return SolverStatus.MAX_ITERATIONS, x, lam, y, it

        if newton.unbounded_ray(x, dx, pt):
            logger.debug(f"Cost unbounded along a feasible ray at iteration {it}")
            return SolverStatus.UNBOUNDED, x, lam, y, it

        alpha = 1.0
        if m:
            tau = cfg.fraction_to_boundary
            alpha = min(_boundary_step(w, dw, tau), _boundary_step(lam, dlam, tau))
        base = newton.norm(res)
        best_alpha, best_norm = 0.0, base
        accepted = False
        while alpha >= cfg.min_step:
            xt, wt = x + alpha * dx, w + alpha * dw
            lt, yt = lam + alpha * dlam, y + alpha * dy
            trial_pt = newton.point(xt, lt, False)
            trial = newton.residuals(trial_pt, xt, wt, lt, yt, target)
            norm = newton.norm(trial)
            if np.isfinite(norm):
                if norm <= (1.0 - cfg.armijo * alpha) * base:
                    accepted = True
                    break
                if norm < best_norm:
                    best_alpha, best_norm = alpha, norm
            alpha *= cfg.backtrack
        if accepted:
            stalls = 0
            recenter = False
        else:
            stalls += 1
            if stalls >= cfg.max_stalls:
                logger.debug(f"Interior point stalled at iteration {it}")
                return SolverStatus.MAX_ITERATIONS, x, lam, y, it
            # No sufficient decrease: take the best trial, then recenter.
            alpha = best_alpha
            recenter = m > 0
        x = x + alpha * dx
        w = np.maximum(w + alpha * dw, floor)
        lam = np.maximum(lam + alpha * dlam, floor)
        y = y + alpha * dy
        logger.trace(
            f"ipm it={it} f={pt.f:.6e} |r|={base:.3e} gap={gap:.3e} alpha={alpha:.2e}"
        )
    pt = newton.point(x, lam, hessian=False)
    status = (
        SolverStatus.OPTIMAL
        if pt.finite() and newton.converged(pt, x, lam, y)
        else SolverStatus.MAX_ITERATIONS
    )
    return status, x, lam, y, cfg.max_iterations


def _phase_one(p: ConvexSubproblem, x0: np.ndarray, E, e, cfg: SolverConfig):
    """min t s.t. c_i(x) <= t, t >= -1, E x = e. Returns (status, t*)."""
    n = p.n + 1
    t_col = np.zeros(n)
    t_col[-1] = -1.0
    ineqs = [c.pad(1) + ConvexFunction.affine(t_col) for c in p.ineqs]
    ineqs.append(ConvexFunction.affine(t_col, -1.0))
    aux = ConvexSubproblem(
        n,
        ConvexFunction.affine(-t_col),
        tuple(ineqs),
        np.hstack([E, np.zeros((E.shape[0], 1))]),
        e,
    )
    t0 = float(p.constraint_values(x0).max()) + 1.0
    status, z, _, _, _ = _run(aux, cfg, np.append(x0, t0), aux.eq_A, aux.eq_b)
    return status, float(z[-1])


def solve(
    p: ConvexSubproblem,
    cfg: SolverConfig | None = None,
    warm_start: np.ndarray | None = None,
) -> SolverResult:
    """Solve the subproblem; duals are reported in declaration order."""
    cfg = cfg or SolverConfig()
    if warm_start is None:
        x0 = np.zeros(p.n)
    else:
        x0 = np.asarray(warm_start, dtype=float).reshape(-1)
        if x0.size != p.n:
            raise ArgumentError(f"warm start has {x0.size} entries, need {p.n}")
        if not np.all(np.isfinite(x0)):
            raise ArgumentError("warm start is not finite")

    pre = _presolve(p, cfg.presolve_tol)
    if not pre.consistent:
        logger.debug("Equality constraints are inconsistent")
        nu, mu = np.zeros(p.n_ineq), np.zeros(p.n_eq)
        return SolverResult(
            SolverStatus.INFEASIBLE, x0, nu, mu, kkt_residual(p, x0, nu, mu)
        )

    status, x, lam, y, iterations = _run(p, cfg, x0, pre.E, pre.e)
    mu = np.zeros(p.n_eq)
    mu[pre.keep] = y
    phase1 = None
    if status is SolverStatus.MAX_ITERATIONS and p.n_ineq:
        p1_status, phase1 = _phase_one(p, x0, pre.E, pre.e, cfg)
        if p1_status is SolverStatus.OPTIMAL and phase1 > cfg.kkt_tol:
            logger.debug(f"Phase I certificate: minimal max violation {phase1:.3e}")
            status = SolverStatus.INFEASIBLE
    residuals = kkt_residual(p, x, lam, mu)
    logger.debug(
        f"IPM {status.value} after {iterations} iterations, "
        f"max KKT residual {residuals.max():.2e}"
    )
    return SolverResult(
        status, x, lam, mu, residuals, iterations, p.cost.value(x), phase1
    )
