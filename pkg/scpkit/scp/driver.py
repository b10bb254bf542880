"""
SCP driver: penalty bootstrap, main descent loop and regularizer adaptation.
"""

from __future__ import annotations

import time
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from loguru import logger

from ..config import ScpConfig
from ..errors import ArgumentError
from ..solver import (
    ConvexTerm,
    SolverResult,
    SolverStatus,
    relax_with_slacks,
    solve,
)
from .problem import (
    FunctionSpec,
    NonConvexProblem,
    assemble_subproblem,
    check_admissible,
    convexify_all,
)
from .trace import IterationRecord, Phase, ScpStatus, ScpTrace


@dataclass(frozen=True)
class MDecision:
    keep: bool
    M_new: float


def adapt_M(
    spec: FunctionSpec,
    term: ConvexTerm,
    x_candidate: np.ndarray,
    M_old: float,
    cfg: ScpConfig,
) -> MDecision:
    """Keep M if the approximation still overestimates at the candidate."""
    v = spec.local(x_candidate)
    f = spec.oracle.value(v)
    a = term.approx.value(v) - spec.offset / spec.weight
    if a >= f - cfg.feas_tol * (1.0 + abs(f)):
        return MDecision(True, M_old)
    return MDecision(False, max(cfg.M_growth * M_old, cfg.M_unit))


def _gaps(p: NonConvexProblem, terms: Sequence[ConvexTerm], x: np.ndarray):
    """min f_cvx(x) - f(x) over cost terms and over constraints."""
    diffs = [
        term.weight * term.approx.value(term.map.apply(x)) - spec.value(x)
        for spec, term in zip(p.specs, terms, strict=True)
    ]
    n_cost = len(p.cost)
    gap_cost = min(diffs[:n_cost], default=float("nan"))
    gap_cons = min(diffs[n_cost:], default=float("nan"))
    return float(gap_cost), float(gap_cons)


class ScpDriver:
    """Runs one SCP solve on a problem; holds the trace and current M values."""

    def __init__(self, p: NonConvexProblem, cfg: ScpConfig | None = None):
        self.p = p
        self.cfg = cfg or ScpConfig()
        self.M = np.full(len(p.specs), self.cfg.M0)
        self.trace = ScpTrace()

    def _solve_with_M(self, x: np.ndarray):
        """Solve P_cvx at x, growing M and re-solving until it overestimates.

        Constraints whose true value exceeds feas_tol at the candidate also
        get their M grown. Returns (result, sub, terms, resolves, verified);
        verified is False when the growth cap stopped the loop first.
        """
        p, cfg = self.p, self.cfg
        n_cost = len(p.cost)
        resolves = 0
        while True:
            terms = convexify_all(p, x, self.M)
            sub = assemble_subproblem(p, terms)
            result = solve(sub, cfg.solver, warm_start=x)
            if not result.ok:
                return result, sub, terms, resolves, True
            grown = False
            for j, (spec, term) in enumerate(zip(p.specs, terms, strict=True)):
                decision = adapt_M(spec, term, result.x_star, self.M[j], cfg)
                if decision.keep and j >= n_cost:
                    if spec.value(result.x_star) > cfg.feas_tol:
                        decision = MDecision(
                            False, max(cfg.M_growth * self.M[j], cfg.M_unit)
                        )
                if not decision.keep:
                    logger.debug(f"{spec.name}: M {self.M[j]:g} -> {decision.M_new:g}")
                    self.M[j] = decision.M_new
                    grown = True
            if not grown:
                return result, sub, terms, resolves, True
            if resolves >= cfg.max_M_retries:
                logger.warning(f"M growth cap reached after {resolves} re-solves")
                return result, sub, terms, resolves, False
            resolves += 1

    def _total_violation(self, x: np.ndarray) -> float:
        values = self.p.constraint_values(x)
        return float(np.maximum(values, 0.0).sum()) if values.size else 0.0

    def _penalty_solve(self, sub, x, relax, kappa, augmented):
        relaxed = relax_with_slacks(sub, relax, kappa, drop_cost=not augmented)
        slack0 = np.maximum(self.p.constraint_values(x)[list(relax)], 0.0) + 1e-3
        warm = np.concatenate([x, slack0])
        return relaxed, solve(relaxed, self.cfg.solver, warm_start=warm)

    def _penalty_step_usable(self, result: SolverResult, x, x_new) -> bool:
        """Optimal steps always; capped solves only when finite and improving."""
        if result.status is SolverStatus.OPTIMAL:
            return True
        if result.status is not SolverStatus.MAX_ITERATIONS:
            return False
        if not np.all(np.isfinite(x_new)):
            return False
        return self._total_violation(x_new) < self._total_violation(x)

    def penalty_phase(
        self, x0: np.ndarray, relax_set: Sequence[int]
    ) -> tuple[np.ndarray, bool]:
        """Minimize the relaxed constraints' slacks until x is admissible.

        When the subproblem fails with the given set, every inequality
        violated at x joins the set for the rest of the phase.
        """
        p, cfg = self.p, self.cfg
        relax = tuple(sorted(set(relax_set)))
        if not relax:
            raise ArgumentError("penalty phase needs a non-empty relaxation set")
        x = np.asarray(x0, dtype=float)
        if check_admissible(p, x, cfg.feas_tol)[0]:
            return x, True
        augmented = cfg.penalty_objective == "augmented"
        kappa = cfg.penalty_kappa if augmented else 1.0
        zero_M = np.zeros(len(p.specs))
        logger.info(f"Penalty phase: relaxing {len(relax)} constraints")
        for k in range(1, cfg.penalty_max_iters + 1):
            start = time.perf_counter()
            terms = convexify_all(p, x, zero_M)
            sub = assemble_subproblem(p, terms)
            relaxed, result = self._penalty_solve(sub, x, relax, kappa, augmented)
            resolves = 0
            failed = not self._penalty_step_usable(result, x, result.x_star[: p.n])
            if failed and result.status is not SolverStatus.UNBOUNDED:
                violated = np.flatnonzero(p.constraint_values(x) > cfg.feas_tol)
                widened = tuple(sorted(set(relax) | {int(i) for i in violated}))
                if widened != relax:
                    logger.info(
                        f"Penalty subproblem {k} ended {result.status.value}; relaxing "
                        f"{len(widened) - len(relax)} more violated constraints"
                    )
                    relax = widened
                    relaxed, result = self._penalty_solve(
                        sub, x, relax, kappa, augmented
                    )
                    resolves = 1
            x_new = result.x_star[: p.n]
            if not self._penalty_step_usable(result, x, x_new):
                logger.warning(f"Penalty subproblem {k} ended {result.status.value}")
                self._record(
                    Phase.PENALTY, k, x, x, relaxed, terms, result, start, resolves
                )
                return x, False
            if result.status is not SolverStatus.OPTIMAL:
                logger.debug(f"Penalty subproblem {k} capped but improving; accepted")
            self._record(
                Phase.PENALTY, k, x, x_new, relaxed, terms, result, start, resolves
            )
            x = x_new
            admissible, worst = check_admissible(p, x, cfg.feas_tol)
            if admissible:
                logger.info(f"Admissible after {k} penalty iterations")
                return x, True
            logger.debug(f"Penalty iteration {k}: max violation {worst:.3e}")
        return x, False

    def _record(self, phase, k, x_prev, x_new, sub, terms, result, start, resolves=0):
        gap_cost, gap_cons = _gaps(self.p, terms, x_new)
        z = result.x_star
        self.trace.append(
            IterationRecord(
                k=k,
                phase=phase,
                f0_true=self.p.cost_value(x_new),
                f0_cvx=sub.cost.value(z),
                max_violation=check_admissible(self.p, x_new, self.cfg.feas_tol)[1],
                step_norm=float(np.linalg.norm(x_new - x_prev)),
                solver_status=result.status.value,
                wall_ms=(time.perf_counter() - start) * 1e3,
                M=tuple(float(m) for m in self.M),
                gap_cost=gap_cost,
                gap_constraints=gap_cons,
                resolves=resolves,
                solver_iterations=result.iterations,
            )
        )

    def run(
        self, x0: np.ndarray, relax_set: Sequence[int] | None = None
    ) -> tuple[np.ndarray, ScpTrace]:
        p, cfg, trace = self.p, self.cfg, self.trace
        x = np.asarray(x0, dtype=float).reshape(-1)
        if x.size != p.n or not np.all(np.isfinite(x)):
            raise ArgumentError(f"x0 must be a finite vector of length {p.n}")

        if not check_admissible(p, x, cfg.feas_tol)[0]:
            if relax_set is None:
                relax_set = (
                    tuple(range(len(p.ineqs))) if cfg.relax_all else p.relax_default
                )
            if not relax_set:
                logger.warning("x0 is not admissible and nothing may be relaxed")
                return self._finish(ScpStatus.PENALTY_FAILED, x)
            x, admissible = self.penalty_phase(x, relax_set)
            if not admissible:
                logger.warning("Penalty phase did not reach an admissible point")
                return self._finish(ScpStatus.PENALTY_FAILED, x)

        f_prev = p.cost_value(x)
        for k in range(1, cfg.max_iters + 1):
            start = time.perf_counter()
            result, sub, terms, resolves, verified = self._solve_with_M(x)
            if not result.ok:
                logger.error(
                    f"Main subproblem {k} ended {result.status.value} at an "
                    "admissible expansion point"
                )
                self._record(Phase.MAIN, k, x, x, sub, terms, result, start, resolves)
                return self._finish(ScpStatus.SUBPROBLEM_INFEASIBLE, x, result)
            x_new = result.x_star
            self._record(Phase.MAIN, k, x, x_new, sub, terms, result, start, resolves)
            record = trace.records[-1]
            f_new = record.f0_true
            if not verified or record.max_violation > cfg.feas_tol:
                logger.warning(
                    f"Iterate {k} rejected: model not verified or constraints "
                    f"violated by {record.max_violation:.3e}"
                )
                return self._finish(ScpStatus.NOT_CONVERGED, x)
            if f_new > f_prev + cfg.descent_tol * (1.0 + abs(f_prev)):
                logger.warning(f"Cost increased at iteration {k}: {f_prev} -> {f_new}")
            logger.debug(
                f"SCP k={k} f0={f_new:.10g} step={record.step_norm:.3e} "
                f"viol={record.max_violation:.2e}"
            )
            x = x_new
            threshold = max(cfg.eps_rel * abs(f_new), cfg.eps_abs)
            if abs(f_prev - f_new) <= threshold or record.step_norm <= cfg.step_tol:
                logger.info(f"Converged after {k} iterations, cost {f_new:.8g}")
                return self._finish(ScpStatus.CONVERGED, x, result)
            f_prev = f_new
        logger.info(f"Stopped at the iteration cap ({cfg.max_iters})")
        return self._finish(ScpStatus.MAX_ITERATIONS, x)

    def _finish(
        self, status: ScpStatus, x: np.ndarray, result: SolverResult | None = None
    ) -> tuple[np.ndarray, ScpTrace]:
        self.trace.status = status
        self.trace.x_final = x
        self.trace.cost_final = self.p.cost_value(x)
        if result is not None and result.status is SolverStatus.OPTIMAL:
            self.trace.nu = result.nu_star
            self.trace.mu = result.mu_star
            self.trace.kkt = result.kkt_residuals
        return x, self.trace


def scp_solve(
    p: NonConvexProblem,
    x0: np.ndarray,
    cfg: ScpConfig | None = None,
    relax_set: Sequence[int] | None = None,
) -> tuple[np.ndarray, ScpTrace]:
    """Run penalty bootstrap (when x0 is inadmissible) and the main SCP loop."""
    return ScpDriver(p, cfg).run(x0, relax_set)


def penalty_phase(
    p: NonConvexProblem,
    x0: np.ndarray,
    cfg: ScpConfig | None = None,
    relax_set: Sequence[int] | None = None,
) -> tuple[np.ndarray, bool, ScpTrace]:
    driver = ScpDriver(p, cfg)
    x, ok = driver.penalty_phase(
        x0, p.relax_default if relax_set is None else relax_set
    )
    return x, ok, driver.trace
