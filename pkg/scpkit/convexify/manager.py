"""
Strategy registry: build convexifiers from names or config dicts.
"""

from typing import Any

from loguru import logger

from ..errors import ConfigError
from ..oracles import PolynomialOracle
from ..tensor_taylor import Polynomial
from .dc import DcLinearize
from .lipschitz import Linearize, LipschitzReg
from .strategy_base import ConvexifierStrategy
from .taylor import TaylorCvx

STRATEGIES: dict[str, type[ConvexifierStrategy]] = {
    "linearize": Linearize,
    "taylor": TaylorCvx,
    "dc": DcLinearize,
    "lipschitz": LipschitzReg,
}


def _polynomial(terms: Any, dim: int | None, key: str) -> PolynomialOracle | None:
    if terms is None:
        return None
    if dim is None:
        raise ConfigError(f"d.c. part '{key}' needs the function dimension")
    try:
        return PolynomialOracle(Polynomial.from_list(dim, terms))
    except (TypeError, ValueError) as e:
        raise ConfigError(f"bad polynomial for d.c. part '{key}': {e}") from e


def build_strategy(
    spec: str | dict[str, Any] | ConvexifierStrategy | None, dim: int | None = None
) -> ConvexifierStrategy:
    """
    Build a strategy from a config entry.

    Args:
        spec: Strategy instance, variant name, or dict with a "variant" key and
            per-variant options ("order", "K", "c1"/"c2"/"remainder"
            polynomial term lists, "remainder_order")
        dim: Variable count of the function; needed for d.c. polynomial parts

    Returns:
        Configured strategy (TaylorCvx(3) when spec is None)
    """
    if isinstance(spec, ConvexifierStrategy):
        return spec
    if spec is None:
        return TaylorCvx(3)
    options = {"variant": spec} if isinstance(spec, str) else dict(spec)
    variant = options.pop("variant", "taylor")
    if variant not in STRATEGIES:
        raise ConfigError(
            f"unknown strategy '{variant}', expected one of {sorted(STRATEGIES)}"
        )
    try:
        if variant == "taylor":
            strategy: ConvexifierStrategy = TaylorCvx(int(options.get("order", 3)))
        elif variant == "lipschitz":
            strategy = LipschitzReg(float(options.get("K", 1.0)))
        elif variant == "dc":
            strategy = DcLinearize(
                c1=_polynomial(options.get("c1"), dim, "c1"),
                c2=_polynomial(options.get("c2"), dim, "c2"),
                remainder=_polynomial(options.get("remainder"), dim, "remainder"),
                remainder_order=int(options.get("remainder_order", 4)),
            )
        else:
            strategy = Linearize()
    except ConfigError:
        raise
    except (TypeError, ValueError) as e:
        raise ConfigError(f"bad options for strategy '{variant}': {e}") from e
    logger.debug(f"Built convexifier {strategy.describe()}")
    return strategy


def available_strategies() -> list[str]:
    return sorted(STRATEGIES)
