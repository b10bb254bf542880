"""
Drag-affected point-mass trajectory benchmark.
"""

from .benchmark import Benchmark, CaseResult, build_problem, cost_weights, run_case
from .montecarlo import CaseOutcome, MonteCarloSummary, monte_carlo, sample_case
from .transcription import (
    Transcription,
    bang_bang_levels,
    build_transcription,
    initial_guess,
)
from .vehicle import (
    KeepoutSplit,
    ThrustOracle,
    keepout_split,
    thrust_force,
    thrust_local,
)

__all__ = [
    "Benchmark",
    "CaseOutcome",
    "CaseResult",
    "KeepoutSplit",
    "MonteCarloSummary",
    "ThrustOracle",
    "Transcription",
    "bang_bang_levels",
    "build_problem",
    "build_transcription",
    "cost_weights",
    "initial_guess",
    "keepout_split",
    "monte_carlo",
    "run_case",
    "sample_case",
    "thrust_force",
    "thrust_local",
]
