"""
Command-line entry point: ``scpkit solve | montecarlo | verify``.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd
from loguru import logger
from pydantic import ValidationError

from .config import Config, RunConfig, env_log_level
from .errors import ScpkitError
from .scp import ScpStatus, problem_from_dict, scp_solve
from .trajectory import monte_carlo, run_case
from .verify import kkt_check_original, run_suites

EXIT_CODES = {
    ScpStatus.CONVERGED: 0,
    ScpStatus.PENALTY_FAILED: 2,
    ScpStatus.SUBPROBLEM_INFEASIBLE: 3,
    ScpStatus.MAX_ITERATIONS: 4,
    ScpStatus.NOT_CONVERGED: 5,
}
EXIT_ERROR = 1
LOG_FORMAT = "{time:HH:mm:ss} | {level: <8} | {message}"


def _bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


def _setup_logging(level: str):
    logger.remove()
    logger.add(sys.stderr, level=level.upper(), format=LOG_FORMAT)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scpkit",
        description="Sequential convex programming with inner-convex approximations",
    )
    parser.add_argument("--log-level", default=None, help="loguru level (INFO)")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser):
        p.add_argument("--config", type=Path, help="JSON case file")
        p.add_argument("--out", type=Path, help="output directory (out)")
        p.add_argument("--max-iters", type=int, help="SCP iteration cap")
        p.add_argument("--eps-rel", type=float, help="relative cost-change tolerance")
        p.add_argument(
            "--relax-keepout",
            type=_bool,
            nargs="?",
            const=True,
            default=None,
            help="relax every inequality in the penalty phase",
        )

    solve_p = sub.add_parser("solve", help="run one case")
    common(solve_p)

    mc_p = sub.add_parser("montecarlo", help="run random boundary-condition cases")
    common(mc_p)
    mc_p.add_argument("--cases", type=int, help="number of cases")
    mc_p.add_argument("--seed", type=int, help="master seed (u64)")
    mc_p.add_argument("--workers", type=int, help="worker processes")

    verify_p = sub.add_parser("verify", help="run certification suites")
    verify_p.add_argument(
        "suite", nargs="?", default="all", help="convexify, solver, trajectory or all"
    )
    verify_p.add_argument("--seed", type=int, default=0)
    verify_p.add_argument("--samples", type=int, default=2_000)
    verify_p.add_argument(
        "--corrupt-tcvx", action="store_true", help=argparse.SUPPRESS
    )
    return parser


def _run_config(args: argparse.Namespace) -> RunConfig:
    fields = ("config", "out", "seed", "cases", "max_iters", "eps_rel", "workers")
    values: dict[str, Any] = {
        f: getattr(args, f) for f in fields if getattr(args, f, None) is not None
    }
    if getattr(args, "relax_keepout", None) is not None:
        values["relax_keepout"] = args.relax_keepout
    return RunConfig(**values)


def _write_json(data: dict[str, Any], path: Path):
    with open(path, "w") as f:
        json.dump(data, f, indent=2, sort_keys=True)


def cmd_solve(args: argparse.Namespace) -> int:
    run = _run_config(args)
    cfg = Config(run.config, run.overrides())
    scp_cfg = cfg.scp_config()
    run.out.mkdir(parents=True, exist_ok=True)

    definition = cfg.problem()
    if definition is not None:
        problem, x0 = problem_from_dict(definition)
        if x0 is None:
            x0 = np.zeros(problem.n)
        x, trace = scp_solve(problem, x0, scp_cfg)
        pd.DataFrame({"x": x}).to_csv(
            run.out / "solution.csv", index_label="i", float_format="%.17g"
        )
    else:
        result = run_case(cfg.vehicle_params(), cfg.boundary_conditions(), scp_cfg)
        problem, x, trace = result.benchmark.problem, result.x, result.trace
        result.benchmark.write_nodes(x, run.out / "nodes.csv")

    trace.to_csv(run.out / "trace.csv")
    trace.to_csv(run.out / "diagnostics.csv", diagnostics=True)
    summary = trace.summary()
    summary["problem"] = problem.name
    has_duals = trace.nu is not None and trace.mu is not None
    if has_duals and trace.nu.size == len(problem.ineqs):
        kkt = kkt_check_original(problem, x, trace.nu, trace.mu)
        summary["kkt_original"] = kkt.as_dict()
    _write_json(summary, run.out / "summary.json")

    status = trace.status or ScpStatus.MAX_ITERATIONS
    logger.info(f"{status.value}: outputs in {run.out}")
    return EXIT_CODES[status]


def cmd_montecarlo(args: argparse.Namespace) -> int:
    run = _run_config(args)
    cfg = Config(run.config, run.overrides())
    n_cases = int(cfg.get("montecarlo.cases")) if args.cases is None else args.cases
    seed = int(cfg.get("montecarlo.seed")) if args.seed is None else args.seed
    # Values taken from the case file go through the same validation.
    run = RunConfig(**{**run.model_dump(), "cases": n_cases, "seed": seed})

    summary = monte_carlo(
        cfg.vehicle_params(),
        n_cases,
        seed,
        cfg.scp_config(),
        workers=run.workers,
        r0_norm=float(cfg.get("montecarlo.r0_norm")),
        rdot_norm=float(cfg.get("montecarlo.rdot_norm")),
    )
    case_dir = run.out / "cases"
    case_dir.mkdir(parents=True, exist_ok=True)
    for outcome in summary.outcomes:
        pd.DataFrame(outcome.trace_rows).to_csv(
            case_dir / f"case_{outcome.index:04d}.csv",
            index=False,
            float_format="%.17g",
        )
    table = pd.json_normalize([o.summary() for o in summary.outcomes])
    table.to_csv(run.out / "cases.csv", index=False, float_format="%.17g")
    _write_json(summary.to_dict(), run.out / "summary.json")
    return 0


def cmd_verify(args: argparse.Namespace) -> int:
    checks = run_suites(
        args.suite,
        seed=args.seed,
        n_samples=args.samples,
        corrupt_tcvx=args.corrupt_tcvx,
    )
    width = max(len(f"{c.suite}.{c.name}") for c in checks)
    for c in checks:
        mark = "PASS" if c.passed else "FAIL"
        detail = f"  {c.detail}" if c.detail else ""
        print(f"{c.suite + '.' + c.name:<{width}}  {mark}{detail}")
    failed = sum(not c.passed for c in checks)
    print(f"{len(checks) - failed}/{len(checks)} checks passed")
    return 0 if failed == 0 else EXIT_ERROR


COMMANDS = {"solve": cmd_solve, "montecarlo": cmd_montecarlo, "verify": cmd_verify}


def _one_line(e: Exception) -> str:
    if isinstance(e, ValidationError):
        parts = []
        for err in e.errors():
            loc = ".".join(str(p) for p in err["loc"])
            parts.append(f"{loc}: {err['msg']}")
        return "; ".join(parts)
    return " ".join(str(e).split())


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        _setup_logging(args.log_level or env_log_level())
    except ValueError as e:
        print(f"scpkit: {e}", file=sys.stderr)
        return EXIT_ERROR
    try:
        return COMMANDS[args.command](args)
    except (ScpkitError, ValidationError, OSError, json.JSONDecodeError) as e:
        print(f"scpkit {args.command}: {_one_line(e)}", file=sys.stderr)
        return EXIT_ERROR
