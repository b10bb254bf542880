"""
Sequential convex programming on class-P problems.
"""

from .driver import MDecision, ScpDriver, adapt_M, penalty_phase, scp_solve
from .loader import problem_from_dict
from .problem import (
    FunctionSpec,
    NonConvexProblem,
    assemble_subproblem,
    build_subproblem,
    check_admissible,
    convexify_all,
)
from .trace import (
    ConvergenceFit,
    IterationRecord,
    Phase,
    ScpStatus,
    ScpTrace,
    convergence_order,
)

__all__ = [
    "ConvergenceFit",
    "FunctionSpec",
    "IterationRecord",
    "MDecision",
    "NonConvexProblem",
    "Phase",
    "ScpDriver",
    "ScpStatus",
    "ScpTrace",
    "adapt_M",
    "assemble_subproblem",
    "build_subproblem",
    "check_admissible",
    "convergence_order",
    "convexify_all",
    "penalty_phase",
    "problem_from_dict",
    "scp_solve",
]
