"""
Configuration: typed settings models and the JSON case-file layer.
"""

import copy
import json
import math
import os
from pathlib import Path
from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator

from .errors import ConfigError

ENV_THREADS = "SCPKIT_THREADS"
ENV_LOG_LEVEL = "SCPKIT_LOG_LEVEL"


class SolverConfig(BaseModel):
    """Interior-point settings."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    kkt_tol: float = Field(1e-8, gt=0)
    max_iterations: int = Field(200, ge=1)
    regularization: float = Field(1e-9, ge=0)
    fraction_to_boundary: float = Field(0.99, gt=0, lt=1)
    sigma_min: float = Field(1e-4, ge=0, lt=1)
    sigma_max: float = Field(0.5, gt=0, lt=1)
    # Complementarity target floor, as a fraction of kkt_tol.
    mu_floor: float = Field(0.1, gt=0, lt=1)
    armijo: float = Field(1e-2, gt=0, lt=1)
    backtrack: float = Field(0.5, gt=0, lt=1)
    min_step: float = Field(1e-12, gt=0)
    max_stalls: int = Field(5, ge=1)
    slack_floor: float = Field(1e-2, gt=0)
    presolve_tol: float = Field(1e-10, gt=0)
    unbounded_norm: float = Field(1e10, gt=0)


class ScpConfig(BaseModel):
    """SCP driver settings; eps_rel * |f0| is the stopping threshold."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    eps_rel: float = Field(0.01, gt=0)
    eps_abs: float = Field(0.0, ge=0)
    step_tol: float = Field(0.0, ge=0)
    max_iters: int = Field(50, ge=1)
    M0: float = Field(0.0, ge=0)
    M_growth: float = Field(10.0, gt=1)
    M_unit: float = Field(1.0, gt=0)
    max_M_retries: int = Field(8, ge=0)
    penalty_kappa: float = Field(100.0, gt=0)
    penalty_max_iters: int = Field(20, ge=1)
    penalty_objective: Literal["slack", "augmented"] = "slack"
    relax_all: bool = False
    feas_tol: float = Field(1e-6, gt=0)
    descent_tol: float = Field(1e-8, ge=0)
    solver: SolverConfig = Field(default_factory=SolverConfig)


class VehicleParams(BaseModel):
    """Non-dimensional vehicle and discretization parameters."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    m: float = Field(1.0, gt=0)
    t_f: float = Field(15.0, gt=0)
    k_d: float = Field(0.25, gt=0)
    F_max: float = Field(1.5, gt=0)
    b: float = Field(3.5, gt=0)
    N: int = Field(25, ge=3)
    eta: float = Field(1e-9, gt=0)


Vector3 = tuple[float, float, float]


class BoundaryConditions(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    r0: Vector3 = (-2.61, 0.53, -5.38)
    rdot0: Vector3 = (-0.62, 0.77, -0.14)
    rf: Vector3 = (2.61, -0.53, 5.38)
    rdotf: Vector3 = (0.64, 0.75, 0.15)

    @field_validator("r0", "rdot0", "rf", "rdotf")
    @classmethod
    def _finite(cls, v: Vector3) -> Vector3:
        if not all(math.isfinite(c) for c in v):
            raise ValueError("boundary condition entries must be finite")
        return v


class RunConfig(BaseModel):
    """Options of one CLI invocation."""

    model_config = ConfigDict(extra="forbid")

    config: Path | None = None
    out: Path = Path("out")
    seed: int = Field(0, ge=0, lt=2**64)
    cases: int = Field(100, ge=1)
    max_iters: int | None = Field(None, ge=1)
    eps_rel: float | None = Field(None, gt=0)
    relax_keepout: bool = False
    workers: int | None = Field(None, ge=1)
    log_level: str = "INFO"

    def overrides(self) -> dict[str, Any]:
        """Case-file keys set by command-line flags."""
        out: dict[str, Any] = {}
        if self.max_iters is not None:
            out["scp.max_iters"] = self.max_iters
        if self.eps_rel is not None:
            out["scp.eps_rel"] = self.eps_rel
        if self.relax_keepout:
            out["scp.relax_all"] = True
        return out


def _deep_merge(base: dict[str, Any], update: dict[str, Any]) -> dict[str, Any]:
    merged = copy.deepcopy(base)
    for key, value in update.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _deep_merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


class Config:
    """Case-file configuration: defaults merged with a JSON file and overrides."""

    DEFAULTS: dict[str, Any] = {
        "params": VehicleParams().model_dump(),
        "bc": BoundaryConditions().model_dump(),
        "scp": ScpConfig().model_dump(exclude={"solver"}),
        "solver": SolverConfig().model_dump(),
        "montecarlo": {"cases": 100, "seed": 0, "r0_norm": 6.0, "rdot_norm": 1.0},
        "problem": None,
    }

    def __init__(
        self,
        path: str | Path | None = None,
        overrides: dict[str, Any] | None = None,
    ):
        self.config_path = Path(path) if path is not None else None
        self.config = _deep_merge(self.DEFAULTS, self._load_config())
        for key, value in (overrides or {}).items():
            self.set(key, value)

    def get(self, key: str, default: Any = None) -> Any:
        """Get a value by dotted key, e.g. ``get("scp.eps_rel")``."""
        node: Any = self.config
        for part in key.split("."):
            if not isinstance(node, dict) or part not in node:
                return default
            node = node[part]
        return node

    def set(self, key: str, value: Any):
        """Set a value by dotted key (in memory only; see ``save``)."""
        parts = key.split(".")
        node = self.config
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"cannot set '{key}': '{part}' is not a section")
        node[parts[-1]] = value

    def _load_config(self) -> dict[str, Any]:
        if self.config_path is None:
            return {}
        with open(self.config_path) as f:
            data = json.load(f)
        if not isinstance(data, dict):
            raise ConfigError(f"{self.config_path}: top level must be an object")
        unknown = set(data) - set(self.DEFAULTS) - {"version", "name"}
        if unknown:
            raise ConfigError(f"{self.config_path}: unknown sections {sorted(unknown)}")
        return data

    def solver_config(self) -> SolverConfig:
        return SolverConfig(**self.config["solver"])

    def scp_config(self) -> ScpConfig:
        return ScpConfig(**self.config["scp"], solver=self.solver_config())

    def vehicle_params(self) -> VehicleParams:
        return VehicleParams(**self.config["params"])

    def boundary_conditions(self) -> BoundaryConditions:
        return BoundaryConditions(**self.config["bc"])

    def problem(self) -> dict[str, Any] | None:
        """Generic class-P problem definition, when the case file carries one."""
        return self.config.get("problem")


def worker_limit(default: int | None = None) -> int:
    """Worker cap from SCPKIT_THREADS, else ``default`` or the CPU count."""
    raw = os.environ.get(ENV_THREADS)
    if raw:
        try:
            value = int(raw)
        except ValueError as e:
            raise ConfigError(f"{ENV_THREADS} must be an integer, got {raw!r}") from e
        if value < 1:
            raise ConfigError(f"{ENV_THREADS} must be >= 1, got {value}")
        return value if default is None else min(value, default)
    return default or os.cpu_count() or 1


def env_log_level(default: str = "INFO") -> str:
    return os.environ.get(ENV_LOG_LEVEL, default).upper()
