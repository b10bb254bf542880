"""
Inner-convex approximations of non-convex functions.

Provides Taylor-tensor convexification, d.c. linearization and Lipschitz
regularization, all producing InnerConvexApprox objects.
"""

from .approx import (
    InnerConvexApprox,
    OverestimationReport,
    PowerTerm,
    add_regularizer,
    evaluate,
    verify_overestimation,
)
from .dc import DcLinearize, dc_linearize
from .lipschitz import Linearize, LipschitzReg, lipschitz_regularize
from .manager import available_strategies, build_strategy
from .strategy_base import ConvexifierStrategy
from .taylor import TaylorCvx, split_hessian, taylor_convexify, tensor_cvx_coeffs

__all__ = [
    "InnerConvexApprox",
    "OverestimationReport",
    "PowerTerm",
    "add_regularizer",
    "evaluate",
    "verify_overestimation",
    "ConvexifierStrategy",
    "Linearize",
    "LipschitzReg",
    "lipschitz_regularize",
    "TaylorCvx",
    "split_hessian",
    "taylor_convexify",
    "tensor_cvx_coeffs",
    "DcLinearize",
    "dc_linearize",
    "build_strategy",
    "available_strategies",
]
