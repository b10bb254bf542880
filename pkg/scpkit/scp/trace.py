"""
Per-iteration SCP records, export and convergence-rate fitting.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

from ..solver import KktResiduals

TRACE_COLUMNS = [
    "k",
    "phase",
    "f0_true",
    "f0_cvx",
    "max_violation",
    "step_norm",
    "solver_status",
    "wall_ms",
]
DIAGNOSTIC_COLUMNS = [
    "k",
    "phase",
    "gap_cost",
    "gap_constraints",
    "M_max",
    "resolves",
    "solver_iterations",
]
SUMMARY_VERSION = 1


class Phase(str, enum.Enum):
    PENALTY = "Penalty"
    MAIN = "Main"


class ScpStatus(str, enum.Enum):
    CONVERGED = "Converged"
    PENALTY_FAILED = "PenaltyFailed"
    SUBPROBLEM_INFEASIBLE = "SubproblemInfeasible"
    MAX_ITERATIONS = "MaxIterations"
    NOT_CONVERGED = "NotConverged"


@dataclass(frozen=True)
class IterationRecord:
    k: int
    phase: Phase
    f0_true: float
    f0_cvx: float
    max_violation: float
    step_norm: float
    solver_status: str
    wall_ms: float
    M: tuple[float, ...] = ()
    # min over terms of f_cvx(x_k) - f(x_k); nan when not measured.
    gap_cost: float = math.nan
    gap_constraints: float = math.nan
    resolves: int = 0
    solver_iterations: int = 0

    def row(self) -> dict[str, Any]:
        return {
            "k": self.k,
            "phase": self.phase.value,
            "f0_true": self.f0_true,
            "f0_cvx": self.f0_cvx,
            "max_violation": self.max_violation,
            "step_norm": self.step_norm,
            "solver_status": self.solver_status,
            "wall_ms": self.wall_ms,
            "gap_cost": self.gap_cost,
            "gap_constraints": self.gap_constraints,
            "M_max": max(self.M, default=0.0),
            "resolves": self.resolves,
            "solver_iterations": self.solver_iterations,
        }


@dataclass
class ScpTrace:
    records: list[IterationRecord] = field(default_factory=list)
    status: ScpStatus | None = None
    x_final: np.ndarray | None = None
    # True cost at x_final; set when the run finishes.
    cost_final: float | None = None
    nu: np.ndarray | None = None
    mu: np.ndarray | None = None
    kkt: KktResiduals | None = None

    def append(self, record: IterationRecord):
        self.records.append(record)

    def phase_records(self, phase: Phase) -> list[IterationRecord]:
        return [r for r in self.records if r.phase is phase]

    @property
    def iterations(self) -> int:
        return len(self.phase_records(Phase.MAIN))

    @property
    def penalty_iterations(self) -> int:
        return len(self.phase_records(Phase.PENALTY))

    @property
    def convex_solves(self) -> int:
        """Subproblem solves including M-driven re-solves."""
        return sum(1 + r.resolves for r in self.records)

    @property
    def final_cost(self) -> float:
        if self.cost_final is not None:
            return self.cost_final
        return self.records[-1].f0_true if self.records else math.nan

    def to_frame(self, columns: list[str] | None = None) -> pd.DataFrame:
        rows = [r.row() for r in self.records]
        return pd.DataFrame(rows, columns=columns or TRACE_COLUMNS)

    def to_csv(self, path: str | Path, diagnostics: bool = False):
        columns = DIAGNOSTIC_COLUMNS if diagnostics else TRACE_COLUMNS
        self.to_frame(columns).to_csv(path, index=False, float_format="%.17g")

    def summary(self) -> dict[str, Any]:
        """Run summary; excludes wall-clock data so equal runs compare equal."""
        return {
            "version": SUMMARY_VERSION,
            "status": self.status.value if self.status else None,
            "iterations": self.iterations,
            "penalty_iterations": self.penalty_iterations,
            "final_cost": None if math.isnan(self.final_cost) else self.final_cost,
            "kkt_residual": self.kkt.as_dict() if self.kkt else None,
            "convex_solves": self.convex_solves,
        }

    def write_summary(self, path: str | Path):
        with open(path, "w") as f:
            json.dump(self.summary(), f, indent=2, sort_keys=True)


@dataclass(frozen=True)
class ConvergenceFit:
    ok: bool
    exponent: float = math.nan
    rate_constant: float = math.nan
    gammas: tuple[float, ...] = ()
    steps_used: int = 0
    reason: str = ""


def convergence_order(
    trace: ScpTrace | list[float],
    tail: int = 4,
    floor: float = 0.0,
) -> ConvergenceFit:
    """
    Fit log s_{k+1} = p log s_k + log C over the last ``tail`` Main-phase steps.

    Args:
        trace: Trace, or a plain list of step norms
        tail: Number of trailing steps to fit
        floor: Steps at or below this norm are ignored (round-off level)

    Returns:
        Fitted exponent p, rate constant C and per-step s_{k+1} / s_k**2
    """
    if isinstance(trace, ScpTrace):
        steps = [r.step_norm for r in trace.phase_records(Phase.MAIN)]
    else:
        steps = list(trace)
    steps = [s for s in steps if s > floor and math.isfinite(s)]
    if len(steps) < max(tail, 3):
        return ConvergenceFit(
            ok=False, steps_used=len(steps), reason="insufficient data"
        )
    s = np.log(np.asarray(steps[-tail:]))
    exponent, intercept = np.polyfit(s[:-1], s[1:], 1)
    gammas = tuple(b / a**2 for a, b in zip(steps[:-1], steps[1:], strict=True))
    return ConvergenceFit(
        ok=True,
        exponent=float(exponent),
        rate_constant=float(np.exp(intercept)),
        gammas=gammas,
        steps_used=tail,
    )
