"""
Generic class-P problems from JSON.

    {
      "n": 2,
      "cost":  [{"terms": [[1.0, [2, 0]], [1.0, [0, 2]]]}],
      "ineqs": [{"name": "disk", "terms": [[1.0, [2, 0]], [-4.0, [0, 0]]],
                 "strategy": {"variant": "taylor", "order": 2}}],
      "eq_A": [[1.0, -1.0]], "eq_b": [0.0],
      "x0": [0.5, 0.5],
      "relax": [0]
    }

Each function is ``weight * p(A x + b) + offset`` with ``p`` a sparse
polynomial over ``A``'s output; ``map`` defaults to the identity.
"""

from __future__ import annotations

from typing import Any

import numpy as np

from ..convexify import build_strategy
from ..errors import ConfigError
from ..oracles import PolynomialOracle
from ..solver import AffineMap
from ..tensor_taylor import Polynomial
from .problem import FunctionSpec, NonConvexProblem


def _function(entry: dict[str, Any], n: int, name: str) -> FunctionSpec:
    if not isinstance(entry, dict) or "terms" not in entry:
        raise ConfigError(f"{name}: expected an object with 'terms'")
    raw_map = entry.get("map")
    if raw_map is None:
        fmap = AffineMap.identity(n)
    else:
        A = np.atleast_2d(np.asarray(raw_map["A"], dtype=float))
        b = np.asarray(raw_map.get("b", np.zeros(A.shape[0])), dtype=float)
        fmap = AffineMap(A, b)
    dim = fmap.out_dim
    poly = Polynomial.from_list(dim, entry["terms"])
    return FunctionSpec(
        entry.get("name", name),
        PolynomialOracle(poly),
        fmap,
        build_strategy(entry.get("strategy"), dim),
        weight=float(entry.get("weight", 1.0)),
        offset=float(entry.get("offset", 0.0)),
    )


def problem_from_dict(
    data: dict[str, Any],
) -> tuple[NonConvexProblem, np.ndarray | None]:
    """Problem and optional starting point from a JSON problem definition."""
    try:
        n = int(data["n"])
        cost = tuple(
            _function(e, n, f"cost[{j}]") for j, e in enumerate(data.get("cost", []))
        )
        ineqs = tuple(
            _function(e, n, f"ineq[{i}]") for i, e in enumerate(data.get("ineqs", []))
        )
        if not cost:
            raise ConfigError("problem needs at least one cost term")
        eq_A = data.get("eq_A")
        problem = NonConvexProblem(
            n,
            cost,
            ineqs,
            None if eq_A is None else np.asarray(eq_A, dtype=float),
            data.get("eq_b"),
            relax_default=tuple(int(i) for i in data.get("relax", range(len(ineqs)))),
            name=str(data.get("name", "problem")),
        )
        x0 = data.get("x0")
        x0_arr = None if x0 is None else np.asarray(x0, dtype=float).reshape(n)
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as e:
        # ArgumentError is a ValueError and lands here too.
        raise ConfigError(f"invalid problem definition: {e!r}") from e
    return problem, x0_arr
