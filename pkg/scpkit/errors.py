"""
Exception hierarchy.

Numerical outcomes (infeasible subproblems, failed penalty phases) are reported
through status values, not exceptions.
"""


class ScpkitError(Exception):
    """Base class for scpkit errors."""


class ArgumentError(ScpkitError, ValueError):
    """Raised when an operation's pre-condition is violated."""


class ConfigError(ArgumentError):
    """Raised when a case file or override cannot be turned into settings."""


class OracleError(ScpkitError):
    """Raised when a function oracle returns non-finite data."""


class DegeneratePointError(OracleError):
    """Raised at the non-smooth origin of a norm; callers perturb and retry."""
