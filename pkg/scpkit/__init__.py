"""scpkit exports its main entry points lazily."""

from typing import Any

__all__ = [
    "Config",
    "NonConvexProblem",
    "ScpConfig",
    "TaylorCvx",
    "build_problem",
    "scp_solve",
    "solve",
]


def __getattr__(name: str) -> Any:
    if name in ("Config", "ScpConfig"):
        from . import config

        return getattr(config, name)

    if name in ("NonConvexProblem", "scp_solve"):
        from . import scp

        return getattr(scp, name)

    if name == "TaylorCvx":
        from .convexify import TaylorCvx

        return TaylorCvx

    if name == "solve":
        from .solver import solve

        return solve

    if name == "build_problem":
        from .trajectory import build_problem

        return build_problem

    raise AttributeError(f"module 'scpkit' has no attribute {name!r}")
