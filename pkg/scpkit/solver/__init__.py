"""
Convex subproblem representation and interior-point solver.
"""

from .interior_point import (
    KktResiduals,
    SolverResult,
    SolverStatus,
    kkt_residual,
    solve,
)
from .subproblem import (
    AffineMap,
    ConvexFunction,
    ConvexSubproblem,
    ConvexTerm,
    relax_with_slacks,
)

__all__ = [
    "AffineMap",
    "ConvexFunction",
    "ConvexSubproblem",
    "ConvexTerm",
    "KktResiduals",
    "SolverResult",
    "SolverStatus",
    "kkt_residual",
    "relax_with_slacks",
    "solve",
]
