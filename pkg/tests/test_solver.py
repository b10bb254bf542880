"""
Unit tests for the convex subproblem containers and the interior-point solver.
"""

import math
import unittest
from unittest import mock

import numpy as np
import numpy.testing as npt

from scpkit.config import SolverConfig
from scpkit.convexify import InnerConvexApprox, PowerTerm
from scpkit.errors import ArgumentError
from scpkit.solver import (
    AffineMap,
    ConvexFunction,
    ConvexSubproblem,
    ConvexTerm,
    SolverStatus,
    kkt_residual,
    relax_with_slacks,
    solve,
)


def quadratic(center, scale=1.0):
    """scale * ||x - center||^2 as a convex function of len(center) variables."""
    center = np.asarray(center, dtype=float)
    n = center.size
    approx = InnerConvexApprox(
        np.zeros(n),
        scale * float(center @ center),
        -2.0 * scale * center,
        2.0 * scale * np.eye(n),
    )
    return ConvexFunction(n, (ConvexTerm(approx, AffineMap.identity(n)),))


class TestContainers(unittest.TestCase):
    """Test cases for AffineMap and ConvexFunction."""

    def test_affine_map(self):
        """Identity, padding and application."""
        m = AffineMap(np.array([[1.0, 2.0]]), np.array([3.0]))
        self.assertEqual((m.in_dim, m.out_dim), (2, 1))
        npt.assert_allclose(m.apply(np.array([1.0, 1.0])), [6.0])
        padded = m.pad(2)
        self.assertEqual(padded.in_dim, 4)
        npt.assert_allclose(padded.apply(np.array([1.0, 1.0, 9.0, 9.0])), [6.0])
        npt.assert_allclose(AffineMap.identity(3).A, np.eye(3))

    def test_map_shape_mismatch(self):
        """Offsets must match the map rows."""
        with self.assertRaises(ArgumentError):
            AffineMap(np.eye(2), np.zeros(3))

    def test_chain_rule(self):
        """Gradient and Hessian of a mapped term follow the chain rule."""
        fn = quadratic([1.0])
        A = np.array([[2.0, -1.0]])
        term = ConvexTerm(fn.terms[0].approx, AffineMap(A, np.array([0.5])), 3.0)
        composite = ConvexFunction(2, (term,), np.array([1.0, 0.0]), 2.0)
        x = np.array([0.2, 0.4])
        v = 2 * 0.2 - 0.4 + 0.5
        value, grad, hess = composite.evaluate(x)
        self.assertAlmostEqual(value, 3.0 * (v - 1.0) ** 2 + 0.2 + 2.0)
        npt.assert_allclose(grad, 3.0 * 2 * (v - 1.0) * A[0] + [1.0, 0.0])
        npt.assert_allclose(hess, 3.0 * 2 * np.outer(A[0], A[0]))
        self.assertIsNone(composite.evaluate(x, hessian=False)[2])

    def test_negative_weight_rejected(self):
        """Term weights must be nonnegative."""
        fn = quadratic([0.0])
        with self.assertRaises(ArgumentError):
            ConvexTerm(fn.terms[0].approx, AffineMap.identity(1), -1.0)

    def test_dimension_mismatch(self):
        """Functions must live in the subproblem's space."""
        with self.assertRaises(ArgumentError):
            ConvexSubproblem(2, quadratic([0.0]))


class TestInteriorPoint(unittest.TestCase):
    """Test cases for solve."""

    def test_equality_dual_sign(self):
        """min x^2 s.t. x = 3 gives mu = -6."""
        p = ConvexSubproblem(
            1, quadratic([0.0]), (), np.array([[1.0]]), np.array([3.0])
        )
        r = solve(p)
        self.assertIs(r.status, SolverStatus.OPTIMAL)
        self.assertAlmostEqual(r.x_star[0], 3.0, places=6)
        self.assertAlmostEqual(r.mu_star[0], -6.0, places=5)
        self.assertAlmostEqual(r.cost, 9.0, places=5)

    def test_active_inequality(self):
        """min x s.t. 1 - x <= 0 gives x = 1 and nu = 1."""
        p = ConvexSubproblem(
            1,
            ConvexFunction.affine(np.array([1.0])),
            (ConvexFunction.affine(np.array([-1.0]), 1.0),),
        )
        r = solve(p)
        self.assertTrue(r.ok)
        self.assertAlmostEqual(r.x_star[0], 1.0, places=6)
        self.assertAlmostEqual(r.nu_star[0], 1.0, places=5)
        self.assertLessEqual(r.kkt_residuals.max(), 1e-7)

    def test_projection_onto_halfplane(self):
        """min ||x - (1, 2)||^2 s.t. x + y <= 1 lands on (0, 1) with nu = 2."""
        p = ConvexSubproblem(
            2,
            quadratic([1.0, 2.0]),
            (ConvexFunction.affine(np.array([1.0, 1.0]), -1.0),),
        )
        r = solve(p, warm_start=np.array([-1.0, -1.0]))
        self.assertTrue(r.ok)
        npt.assert_allclose(r.x_star, [0.0, 1.0], atol=1e-6)
        self.assertAlmostEqual(r.nu_star[0], 2.0, places=5)

    def test_projection_from_cold_start(self):
        """The halfplane projection converges from the origin and tight tolerances."""
        p = ConvexSubproblem(
            2,
            quadratic([1.0, 2.0]),
            (ConvexFunction.affine(np.array([1.0, 1.0]), -1.0),),
        )
        for tol in (1e-8, 1e-10):
            r = solve(p, SolverConfig(kkt_tol=tol))
            self.assertIs(r.status, SolverStatus.OPTIMAL)
            npt.assert_allclose(r.x_star, [0.0, 1.0], atol=1e-6)
            self.assertLessEqual(r.kkt_residuals.stationarity, 10 * tol)
            self.assertLessEqual(r.kkt_residuals.complementarity, 10 * tol)

    def test_singular_factorization_uses_least_squares(self):
        """A failing LU factorization falls back to least squares."""
        p = ConvexSubproblem(
            2,
            quadratic([1.0, 2.0]),
            (ConvexFunction.affine(np.array([1.0, 1.0]), -1.0),),
        )
        with mock.patch(
            "scipy.linalg.lu_factor", side_effect=np.linalg.LinAlgError("singular")
        ):
            r = solve(p)
        self.assertTrue(r.ok)
        npt.assert_allclose(r.x_star, [0.0, 1.0], atol=1e-6)

    def test_unsolvable_newton_system_returns_status(self):
        """When no linear solve works the result carries a status, not an error."""
        p = ConvexSubproblem(
            2,
            quadratic([1.0, 2.0]),
            (ConvexFunction.affine(np.array([1.0, 1.0]), -1.0),),
        )
        failure = np.linalg.LinAlgError("SVD did not converge")
        with mock.patch("scipy.linalg.lu_factor", side_effect=failure):
            with mock.patch("scipy.linalg.lstsq", side_effect=failure):
                r = solve(p, warm_start=np.array([-1.0, -1.0]))
        self.assertIs(r.status, SolverStatus.MAX_ITERATIONS)
        npt.assert_allclose(r.x_star, [-1.0, -1.0])

    def test_non_finite_newton_solution_returns_status(self):
        """A solve that returns NaNs ends the run with MaxIterations."""
        p = ConvexSubproblem(
            2,
            quadratic([1.0, 2.0]),
            (ConvexFunction.affine(np.array([1.0, 1.0]), -1.0),),
        )
        with mock.patch(
            "scipy.linalg.lu_solve", side_effect=lambda lu, rhs, **kw: rhs * np.nan
        ):
            r = solve(p, warm_start=np.array([-1.0, -1.0]))
        self.assertIs(r.status, SolverStatus.MAX_ITERATIONS)
        npt.assert_allclose(r.x_star, [-1.0, -1.0])

    def test_inactive_inequality_has_zero_dual(self):
        """A slack constraint carries no multiplier."""
        p = ConvexSubproblem(
            1, quadratic([0.5]), (ConvexFunction.affine(np.array([1.0]), -5.0),)
        )
        r = solve(p)
        self.assertTrue(r.ok)
        self.assertAlmostEqual(r.x_star[0], 0.5, places=6)
        self.assertLess(abs(r.nu_star[0]), 1e-6)

    def test_cubic_power_term(self):
        """|x|^3 + x is minimized at x = -1/sqrt(3)."""
        approx = InnerConvexApprox(
            np.zeros(1),
            0.0,
            np.array([1.0]),
            np.zeros((1, 1)),
            (PowerTerm(3, np.zeros(1), np.ones(1)),),
        )
        fn = ConvexFunction(1, (ConvexTerm(approx, AffineMap.identity(1)),))
        r = solve(ConvexSubproblem(1, fn))
        self.assertTrue(r.ok)
        self.assertAlmostEqual(r.x_star[0], -1.0 / math.sqrt(3.0), places=6)

    def test_unbounded_linear_cost(self):
        """min x with no constraints is unbounded."""
        r = solve(ConvexSubproblem(1, ConvexFunction.affine(np.array([1.0]))))
        self.assertIs(r.status, SolverStatus.UNBOUNDED)

    def test_infeasible_inequalities(self):
        """x <= -1 and x >= 1 cannot both hold."""
        p = ConvexSubproblem(
            1,
            quadratic([0.0]),
            (
                ConvexFunction.affine(np.array([1.0]), 1.0),
                ConvexFunction.affine(np.array([-1.0]), 1.0),
            ),
        )
        r = solve(p, SolverConfig(max_iterations=60))
        self.assertIs(r.status, SolverStatus.INFEASIBLE)
        self.assertIsNotNone(r.phase1_value)
        self.assertAlmostEqual(r.phase1_value, 1.0, places=4)

    def test_inconsistent_equalities(self):
        """x = 1 and x = 2 are infeasible."""
        p = ConvexSubproblem(
            1, quadratic([0.0]), (), np.array([[1.0], [1.0]]), np.array([1.0, 2.0])
        )
        self.assertIs(solve(p).status, SolverStatus.INFEASIBLE)

    def test_dependent_equalities(self):
        """A duplicated equality row is dropped; its dual is reported as zero."""
        p = ConvexSubproblem(
            1, quadratic([0.0]), (), np.array([[1.0], [1.0]]), np.array([3.0, 3.0])
        )
        r = solve(p)
        self.assertTrue(r.ok)
        self.assertAlmostEqual(r.x_star[0], 3.0, places=6)
        self.assertAlmostEqual(float(r.mu_star.sum()), -6.0, places=5)
        self.assertIn(0.0, list(r.mu_star))

    def test_bad_warm_start(self):
        """Warm starts must match n and be finite."""
        p = ConvexSubproblem(1, quadratic([0.0]))
        with self.assertRaises(ArgumentError):
            solve(p, warm_start=np.zeros(2))
        with self.assertRaises(ArgumentError):
            solve(p, warm_start=np.array([np.inf]))

    def test_kkt_residual_shapes(self):
        """kkt_residual checks the dual vector lengths."""
        p = ConvexSubproblem(1, quadratic([0.0]))
        with self.assertRaises(ArgumentError):
            kkt_residual(p, np.zeros(1), np.zeros(1), np.zeros(0))

    def test_kkt_residual_negative_dual(self):
        """Negative multipliers show up as dual infeasibility."""
        p = ConvexSubproblem(
            1, quadratic([0.0]), (ConvexFunction.affine(np.array([1.0]), -1.0),)
        )
        res = kkt_residual(p, np.zeros(1), np.array([-0.5]), np.zeros(0))
        self.assertAlmostEqual(res.dual_feasibility, 0.5)
        self.assertAlmostEqual(res.stationarity, 0.5)


class TestSlackRelaxation(unittest.TestCase):
    """Test cases for relax_with_slacks and exact penalties."""

    def setUp(self):
        """min (x - 2)^2 s.t. x <= 1, whose multiplier is 2."""
        self.base = ConvexSubproblem(
            1, quadratic([2.0]), (ConvexFunction.affine(np.array([1.0]), -1.0),)
        )

    def test_layout(self):
        """Slacks follow x; sign constraints follow the originals."""
        relaxed = relax_with_slacks(self.base, [0], 5.0)
        self.assertEqual(relaxed.n, 2)
        self.assertEqual(relaxed.n_ineq, 2)
        self.assertEqual(relaxed.n_slack, 1)
        self.assertEqual(relaxed.relaxed, (0,))
        z = np.array([3.0, 0.5])
        npt.assert_allclose(relaxed.constraint_values(z), [3.0 - 1.0 - 0.5, -0.5])

    def test_empty_indices(self):
        """No indices leaves the problem unchanged."""
        self.assertIs(relax_with_slacks(self.base, [], 5.0), self.base)

    def test_invalid_arguments(self):
        """Bad weights and indices are rejected."""
        with self.assertRaises(ArgumentError):
            relax_with_slacks(self.base, [0], 0.0)
        with self.assertRaises(ArgumentError):
            relax_with_slacks(self.base, [3], 1.0)
        with self.assertRaises(ArgumentError):
            relax_with_slacks(self.base, [0, 0], 1.0)

    def test_exact_penalty_above_dual(self):
        """kappa above the multiplier reproduces the constrained optimum."""
        r = solve(relax_with_slacks(self.base, [0], 5.0))
        self.assertTrue(r.ok)
        self.assertAlmostEqual(r.x_star[0], 1.0, places=6)
        self.assertLess(abs(r.x_star[1]), 1e-6)

    def test_penalty_below_dual(self):
        """kappa below the multiplier leaves a positive slack."""
        r = solve(relax_with_slacks(self.base, [0], 1.0))
        self.assertTrue(r.ok)
        self.assertAlmostEqual(r.x_star[1], 0.5, places=5)

    def test_drop_cost(self):
        """With drop_cost only the slack penalty remains."""
        relaxed = relax_with_slacks(self.base, [0], 1.0, drop_cost=True)
        self.assertAlmostEqual(relaxed.cost.value(np.array([7.0, 2.0])), 2.0)


if __name__ == "__main__":
    unittest.main()
