"""
Minimum-thrust trajectory benchmark assembled as a class-P problem.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd
from loguru import logger

from ..config import BoundaryConditions, ScpConfig, VehicleParams
from ..convexify import TaylorCvx
from ..scp import FunctionSpec, NonConvexProblem, ScpTrace, scp_solve
from .transcription import Transcription, build_transcription, initial_guess
from .vehicle import KeepoutSplit, ThrustOracle, keepout_split, thrust_force

NODE_COLUMNS = [
    "t",
    "r1",
    "r2",
    "r3",
    "v1",
    "v2",
    "v3",
    "a1",
    "a2",
    "a3",
    "thrust",
    "keepout",
]


def cost_weights(N: int, dt: float) -> np.ndarray:
    """Trapezoid weights over the linear segments plus the held last segment."""
    w = np.full(N - 1, dt)
    w[0] = dt / 2.0
    w[-1] = dt / 2.0 + dt
    return w


@dataclass(frozen=True)
class Benchmark:
    problem: NonConvexProblem
    transcription: Transcription
    keepout: KeepoutSplit

    @property
    def thrust_indices(self) -> tuple[int, ...]:
        return tuple(range(self.transcription.N - 1))

    @property
    def keepout_indices(self) -> tuple[int, ...]:
        start = self.transcription.N - 1
        return tuple(range(start, start + self.transcription.N))

    def nodes_table(self, x: np.ndarray) -> pd.DataFrame:
        trans = self.transcription
        pos, vel, acc = trans.states(x)
        thrust = [
            float(np.linalg.norm(thrust_force(v, a, trans.params)))
            for v, a in zip(vel, acc, strict=True)
        ]
        keepout = [self.keepout.value(r) for r in pos]
        data = np.column_stack([trans.times, pos, vel, acc, thrust, keepout])
        return pd.DataFrame(data, columns=NODE_COLUMNS)

    def write_nodes(self, x: np.ndarray, path: str | Path):
        self.nodes_table(x).to_csv(path, index=False, float_format="%.17g")


def build_problem(params: VehicleParams, bc: BoundaryConditions) -> Benchmark:
    """Cost, thrust bounds at the N-1 knots, keep-out at the N nodes."""
    trans = build_transcription(params, bc)
    thrust = ThrustOracle(params)
    koz = keepout_split(params)
    weights = cost_weights(params.N, trans.dt)
    cost = tuple(
        FunctionSpec(
            f"cost[{j}]", thrust, trans.thrust_map(j), TaylorCvx(3), weight=weights[j]
        )
        for j in range(params.N - 1)
    )
    thrust_bounds = tuple(
        FunctionSpec(
            f"thrust[{j}]",
            thrust,
            trans.thrust_map(j),
            TaylorCvx(3),
            offset=-params.F_max,
        )
        for j in range(params.N - 1)
    )
    koz_oracle = koz.oracle()
    keepouts = tuple(
        FunctionSpec(f"keepout[{i}]", koz_oracle, trans.position_map(i), koz.strategy())
        for i in range(params.N)
    )
    problem = NonConvexProblem(
        trans.n,
        cost,
        thrust_bounds + keepouts,
        trans.eq_A,
        trans.eq_b,
        relax_default=tuple(range(params.N - 1)),
        name="trajectory",
    )
    return Benchmark(problem, trans, koz)


@dataclass
class CaseResult:
    benchmark: Benchmark
    x0: np.ndarray
    x: np.ndarray
    trace: ScpTrace


def run_case(
    params: VehicleParams,
    bc: BoundaryConditions,
    cfg: ScpConfig | None = None,
    x0: np.ndarray | None = None,
) -> CaseResult:
    """Bang-bang guess, penalty bootstrap when needed, then the main SCP loop."""
    bench = build_problem(params, bc)
    x0 = initial_guess(params, bc) if x0 is None else np.asarray(x0, dtype=float)
    x, trace = scp_solve(bench.problem, x0, cfg)
    logger.info(
        f"Case finished {trace.status.value if trace.status else '?'}: "
        f"{trace.penalty_iterations} penalty + {trace.iterations} main iterations, "
        f"{trace.convex_solves} convex solves"
    )
    return CaseResult(bench, x0, x, trace)
