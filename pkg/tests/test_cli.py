"""
Tests for the scpkit command line.
"""

import contextlib
import io
import json
import tempfile
import unittest
from pathlib import Path

import pandas as pd
import pytest

from scpkit.cli import build_parser, main

CASES = Path(__file__).resolve().parent.parent / "cases"


def run(*argv):
    """main(argv) with stdout and stderr captured."""
    out, err = io.StringIO(), io.StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
        code = main(["--log-level", "ERROR", *argv])
    return code, out.getvalue(), err.getvalue()


class TestParser(unittest.TestCase):
    """Test cases for argument parsing."""

    def test_flags(self):
        """Common flags land in the namespace."""
        args = build_parser().parse_args(
            ["solve", "--max-iters", "3", "--eps-rel", "1e-4", "--relax-keepout"]
        )
        self.assertEqual(args.command, "solve")
        self.assertEqual(args.max_iters, 3)
        self.assertEqual(args.eps_rel, 1e-4)
        self.assertTrue(args.relax_keepout)

    def test_relax_keepout_value(self):
        """--relax-keepout accepts an explicit boolean."""
        args = build_parser().parse_args(["solve", "--relax-keepout", "false"])
        self.assertFalse(args.relax_keepout)

    def test_verify_defaults(self):
        """verify runs every suite unless told otherwise."""
        args = build_parser().parse_args(["verify"])
        self.assertEqual(args.suite, "all")
        self.assertFalse(args.corrupt_tcvx)


class TestCommands(unittest.TestCase):
    """Test cases for the subcommands."""

    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.tmp = Path(self._tmp.name)

    def tearDown(self):
        self._tmp.cleanup()

    def write_config(self, data):
        path = self.tmp / "case.json"
        path.write_text(json.dumps(data) if not isinstance(data, str) else data)
        return path

    def test_malformed_json(self):
        """Broken case files exit 1 with a one-line message."""
        path = self.write_config("{not json")
        code, _, err = run("solve", "--config", str(path), "--out", str(self.tmp))
        self.assertEqual(code, 1)
        self.assertEqual(len(err.strip().splitlines()), 1)

    def test_unknown_section(self):
        """Unknown top-level sections are rejected."""
        path = self.write_config({"bogus": {}})
        code, _, err = run("solve", "--config", str(path), "--out", str(self.tmp))
        self.assertEqual(code, 1)
        self.assertIn("bogus", err)

    def test_invalid_parameter(self):
        """Out-of-range parameters are validation errors."""
        path = self.write_config({"params": {"N": 1}})
        code, _, err = run("solve", "--config", str(path), "--out", str(self.tmp))
        self.assertEqual(code, 1)
        self.assertIn("N", err)

    def test_bad_log_level(self):
        """An unknown log level exits 1."""
        out, err = io.StringIO(), io.StringIO()
        with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
            code = main(["--log-level", "LOUD", "verify", "solver"])
        self.assertEqual(code, 1)

    def test_solve_generic_problem(self):
        """The ring case converges and writes every output file."""
        code, _, _ = run(
            "solve", "--config", str(CASES / "ring.json"), "--out", str(self.tmp)
        )
        self.assertEqual(code, 0)
        for name in ("solution.csv", "trace.csv", "diagnostics.csv", "summary.json"):
            self.assertTrue((self.tmp / name).exists(), name)
        with open(self.tmp / "summary.json") as f:
            summary = json.load(f)
        self.assertEqual(summary["status"], "Converged")
        self.assertEqual(summary["problem"], "ring")
        self.assertIn("kkt_original", summary)
        solution = pd.read_csv(self.tmp / "solution.csv")
        x = solution["x"].to_numpy()
        self.assertGreaterEqual(float(x @ x), 1.0 - 1e-6)

    def test_iteration_cap_exit_code(self):
        """Stopping at the iteration cap exits 4."""
        code, _, _ = run(
            "solve",
            "--config",
            str(CASES / "ring.json"),
            "--out",
            str(self.tmp),
            "--max-iters",
            "1",
            "--eps-rel",
            "1e-14",
        )
        self.assertEqual(code, 4)
        trace = pd.read_csv(self.tmp / "trace.csv")
        self.assertEqual(len(trace), 1)

    def test_growth_cap_exit_code(self):
        """Running out of regularizer re-solves exits 5."""
        path = self.write_config(
            {
                "scp": {"max_M_retries": 0},
                "problem": {
                    "name": "quartic",
                    "n": 1,
                    "cost": [
                        {
                            "name": "quartic",
                            "terms": [[1.0, [4]]],
                            "strategy": {"variant": "lipschitz", "K": 0.01},
                        }
                    ],
                    "x0": [2.0],
                },
            }
        )
        code, _, _ = run("solve", "--config", str(path), "--out", str(self.tmp))
        self.assertEqual(code, 5)
        with open(self.tmp / "summary.json") as f:
            self.assertEqual(json.load(f)["status"], "NotConverged")

    def test_verify_suite(self):
        """A passing suite exits 0 and prints a tally."""
        code, out, _ = run("verify", "solver")
        self.assertEqual(code, 0)
        self.assertIn("5/5 checks passed", out)

    def test_verify_corrupted(self):
        """Corrupted coefficients make the convexify suite fail."""
        code, out, _ = run("verify", "convexify", "--samples", "500", "--corrupt-tcvx")
        self.assertNotEqual(code, 0)
        self.assertIn("FAIL", out)

    def test_verify_unknown_suite(self):
        """Unknown suites exit 1."""
        code, _, err = run("verify", "nonsense")
        self.assertEqual(code, 1)
        self.assertIn("unknown suite", err)

    @pytest.mark.slow
    def test_montecarlo_outputs(self):
        """A small Monte Carlo run writes per-case traces and a summary."""
        path = self.write_config(
            {"params": {"N": 9}, "scp": {"max_iters": 5}, "montecarlo": {"seed": 3}}
        )
        code, _, _ = run(
            "montecarlo",
            "--config",
            str(path),
            "--out",
            str(self.tmp),
            "--cases",
            "2",
            "--workers",
            "1",
        )
        self.assertEqual(code, 0)
        self.assertTrue((self.tmp / "cases" / "case_0000.csv").exists())
        self.assertTrue((self.tmp / "cases" / "case_0001.csv").exists())
        with open(self.tmp / "summary.json") as f:
            summary = json.load(f)
        self.assertEqual(summary["n_cases"], 2)
        self.assertEqual(summary["seed"], 3)
        self.assertEqual(len(pd.read_csv(self.tmp / "cases.csv")), 2)


if __name__ == "__main__":
    unittest.main()
