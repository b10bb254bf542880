"""
Monte Carlo study over random boundary conditions.

Each case draws its own generator from SeedSequence(seed).spawn(n), so results
do not depend on worker count or completion order.
"""

from __future__ import annotations

import math
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from loguru import logger

from ..config import BoundaryConditions, ScpConfig, VehicleParams, worker_limit
from ..errors import ScpkitError
from ..scp import ScpStatus
from .benchmark import run_case

REFERENCE_PENALTY_SUCCESS = 0.981


def _unit(rng: np.random.Generator) -> np.ndarray:
    while True:
        v = rng.standard_normal(3)
        norm = float(np.linalg.norm(v))
        if norm > 1e-12:
            return v / norm


def sample_case(
    rng: np.random.Generator, r0_norm: float = 6.0, rdot_norm: float = 1.0
) -> BoundaryConditions:
    """Random directions scaled to the given norms, with rf = -r0."""
    r0 = r0_norm * _unit(rng)
    rdot0 = rdot_norm * _unit(rng)
    rdotf = rdot_norm * _unit(rng)
    return BoundaryConditions(
        r0=tuple(r0), rdot0=tuple(rdot0), rf=tuple(-r0), rdotf=tuple(rdotf)
    )


@dataclass
class CaseOutcome:
    index: int
    bc: BoundaryConditions
    status: str
    penalty_needed: bool
    penalty_ok: bool
    penalty_iterations: int
    iterations: int
    convex_solves: int
    final_cost: float | None
    trace_rows: list[dict[str, Any]] = field(default_factory=list, repr=False)
    error: str | None = None

    def summary(self) -> dict[str, Any]:
        return {
            "index": self.index,
            "bc": self.bc.model_dump(mode="json"),
            "status": self.status,
            "penalty_needed": self.penalty_needed,
            "penalty_ok": self.penalty_ok,
            "penalty_iterations": self.penalty_iterations,
            "iterations": self.iterations,
            "convex_solves": self.convex_solves,
            "final_cost": self.final_cost,
            "error": self.error,
        }


def _run_one(
    index: int, bc: BoundaryConditions, params: VehicleParams, cfg: ScpConfig
) -> CaseOutcome:
    log = logger.bind(case=index)
    try:
        result = run_case(params, bc, cfg)
    except ScpkitError as e:
        log.warning(f"Case {index} failed: {e}")
        return CaseOutcome(
            index, bc, "Error", False, False, 0, 0, 0, None, error=str(e)
        )
    except Exception as e:
        # One broken case must not take down the pool.
        log.exception(f"Case {index} raised {type(e).__name__}")
        return CaseOutcome(
            index,
            bc,
            "Error",
            False,
            False,
            0,
            0,
            0,
            None,
            error=f"{type(e).__name__}: {e}",
        )
    trace = result.trace
    status = trace.status or ScpStatus.MAX_ITERATIONS
    penalty_needed = trace.penalty_iterations > 0
    penalty_ok = status is not ScpStatus.PENALTY_FAILED
    cost = trace.final_cost
    log.debug(f"Case {index}: {status.value}, {trace.convex_solves} convex solves")
    rows = []
    for r in trace.records:
        row = r.row()
        row.pop("wall_ms")
        rows.append(row)
    return CaseOutcome(
        index,
        bc,
        status.value,
        penalty_needed,
        penalty_ok,
        trace.penalty_iterations,
        trace.iterations,
        trace.convex_solves,
        None if math.isnan(cost) else cost,
        rows,
    )


def _run_one_packed(args) -> CaseOutcome:
    return _run_one(*args)


@dataclass
class MonteCarloSummary:
    seed: int
    outcomes: list[CaseOutcome]

    @property
    def n_cases(self) -> int:
        return len(self.outcomes)

    @property
    def penalty_success_rate(self) -> float:
        return sum(o.penalty_ok for o in self.outcomes) / max(self.n_cases, 1)

    @property
    def convergence_rate(self) -> float:
        """Converged fraction among cases that reached an admissible point."""
        admissible = [o for o in self.outcomes if o.penalty_ok and o.error is None]
        if not admissible:
            return 0.0
        return sum(o.status == ScpStatus.CONVERGED.value for o in admissible) / len(
            admissible
        )

    def convergence_cdf(self) -> list[tuple[int, float]]:
        """Fraction of all cases converged within k convex solves."""
        solves = sorted(
            o.convex_solves
            for o in self.outcomes
            if o.status == ScpStatus.CONVERGED.value
        )
        return [
            (k, sum(s <= k for s in solves) / self.n_cases)
            for k in sorted(set(solves))
        ]

    def to_dict(self) -> dict[str, Any]:
        statuses = Counter(o.status for o in self.outcomes)
        solves = Counter(o.convex_solves for o in self.outcomes)
        iterations = Counter(o.iterations for o in self.outcomes)
        return {
            "version": 1,
            "seed": self.seed,
            "n_cases": self.n_cases,
            "penalty_success_rate": self.penalty_success_rate,
            "reference_penalty_success_rate": REFERENCE_PENALTY_SUCCESS,
            "convergence_rate": self.convergence_rate,
            "status_counts": dict(sorted(statuses.items())),
            "convex_solves_histogram": {
                str(k): v for k, v in sorted(solves.items())
            },
            "iteration_histogram": {str(k): v for k, v in sorted(iterations.items())},
            "convergence_cdf": [list(p) for p in self.convergence_cdf()],
            "costs": [o.final_cost for o in self.outcomes],
            "cases": [o.summary() for o in self.outcomes],
        }


def monte_carlo(
    params: VehicleParams,
    n_cases: int,
    seed: int,
    cfg: ScpConfig | None = None,
    workers: int | None = None,
    bcs: list[BoundaryConditions] | None = None,
    r0_norm: float = 6.0,
    rdot_norm: float = 1.0,
) -> MonteCarloSummary:
    """
    Run ``n_cases`` random cases.

    Args:
        params: Vehicle parameters shared by every case
        n_cases: Number of cases (>= 1)
        seed: Master seed; case i uses the i-th spawned stream
        cfg: SCP settings
        workers: Process count; capped by SCPKIT_THREADS; 1 runs in-process
        bcs: Boundary conditions to use for the first cases instead of samples

    Returns:
        Per-case outcomes ordered by case index
    """
    if n_cases < 1:
        raise ScpkitError(f"n_cases must be >= 1, got {n_cases}")
    cfg = cfg or ScpConfig()
    streams = np.random.SeedSequence(seed).spawn(n_cases)
    cases = []
    for i, stream in enumerate(streams):
        if bcs is not None and i < len(bcs):
            bc = bcs[i]
        else:
            bc = sample_case(np.random.default_rng(stream), r0_norm, rdot_norm)
        cases.append((i, bc, params, cfg))

    n_workers = min(worker_limit(workers), n_cases)
    logger.info(f"Monte Carlo: {n_cases} cases on {n_workers} worker(s), seed {seed}")
    if n_workers <= 1:
        outcomes = [_run_one_packed(c) for c in cases]
    else:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            outcomes = list(pool.map(_run_one_packed, cases))
    outcomes.sort(key=lambda o: o.index)
    summary = MonteCarloSummary(seed, outcomes)
    logger.info(
        f"Penalty success {summary.penalty_success_rate:.1%}, "
        f"convergence {summary.convergence_rate:.1%}"
    )
    return summary
