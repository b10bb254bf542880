"""
Unit tests for inner-convex approximation builders.
"""

import unittest

import numpy as np
import numpy.testing as npt

from scpkit.convexify import (
    DcLinearize,
    InnerConvexApprox,
    Linearize,
    LipschitzReg,
    PowerTerm,
    TaylorCvx,
    add_regularizer,
    available_strategies,
    build_strategy,
    dc_linearize,
    evaluate,
    lipschitz_regularize,
    split_hessian,
    taylor_convexify,
    tensor_cvx_coeffs,
    verify_overestimation,
)
from scpkit.errors import ArgumentError, ConfigError
from scpkit.oracles import CallableOracle, PolynomialOracle
from scpkit.tensor_taylor import Polynomial, SymTensor, TaylorExpansion


def poly_oracle(dim, terms):
    return PolynomialOracle(Polynomial.from_list(dim, terms))


class TestSplitHessian(unittest.TestCase):
    """Test cases for split_hessian."""

    def test_parts_sum_back(self):
        """H+ + H- = H with H+ PSD and H- NSD."""
        rng = np.random.default_rng(0)
        A = rng.standard_normal((4, 4))
        H = A + A.T
        h_plus, h_minus = split_hessian(H)
        npt.assert_allclose(h_plus + h_minus, H, atol=1e-10)
        self.assertGreaterEqual(np.linalg.eigvalsh(h_plus)[0], -1e-10)
        self.assertLessEqual(np.linalg.eigvalsh(h_minus)[-1], 1e-10)

    def test_psd_input_unchanged(self):
        """A PSD matrix is its own positive part."""
        H = np.array([[2.0, 1.0], [1.0, 2.0]])
        h_plus, h_minus = split_hessian(H)
        npt.assert_allclose(h_plus, H, atol=1e-12)
        npt.assert_allclose(h_minus, 0.0, atol=1e-12)

    def test_negative_definite(self):
        """A negative-definite matrix has a zero positive part."""
        h_plus, _ = split_hessian(-np.eye(3))
        npt.assert_allclose(h_plus, 0.0, atol=1e-12)

    def test_rejects_bad_shapes(self):
        """Non-square and asymmetric matrices are rejected."""
        with self.assertRaises(ArgumentError):
            split_hessian(np.zeros((2, 3)))
        with self.assertRaises(ArgumentError):
            split_hessian(np.array([[1.0, 2.0], [0.0, 1.0]]))


class TestTensorCoefficients(unittest.TestCase):
    """Test cases for T_diag / T_cvx extraction."""

    def test_x1_squared_x2(self):
        """x1^2 x2 has no diagonal part and unit T_cvx on both variables."""
        t = SymTensor.from_monomials(2, 3, {(0, 0, 1): 1.0})
        t_diag, t_cvx = tensor_cvx_coeffs(t)
        npt.assert_allclose(t_diag, [0.0, 0.0])
        npt.assert_allclose(t_cvx, [1.0, 1.0])

    def test_pure_diagonal(self):
        """Pure powers land in T_diag only."""
        t = SymTensor(2, 4, {(0, 0, 0, 0): -2.0, (1, 1, 1, 1): 3.0})
        t_diag, t_cvx = tensor_cvx_coeffs(t)
        npt.assert_allclose(t_diag, [-2.0, 3.0])
        npt.assert_allclose(t_cvx, [0.0, 0.0])

    def test_zero_tensor(self):
        """The zero tensor gives zero coefficients."""
        t_diag, t_cvx = tensor_cvx_coeffs(SymTensor(3, 3))
        npt.assert_allclose(t_diag, 0.0)
        npt.assert_allclose(t_cvx, 0.0)

    def test_convexified_form_overestimates(self):
        """The separable form bounds a mixed quartic from above."""
        t = SymTensor.from_monomials(3, 4, {(0, 0, 1, 2): 2.0, (1, 1, 2, 2): -1.5})
        zero = np.zeros(3)
        exp = TaylorExpansion(zero, 0.0, zero, np.zeros((3, 3)), (t,), d_trunc=4)
        approx = taylor_convexify(exp)
        rng = np.random.default_rng(7)
        report = verify_overestimation(
            approx, t.apply, rng.uniform(-2.0, 2.0, size=(2000, 3))
        )
        self.assertTrue(report.ok)
        self.assertEqual(report.samples, 2000)


class TestPowerTerm(unittest.TestCase):
    """Test cases for PowerTerm."""

    def test_positive_part_cubic(self):
        """pos(x^3) vanishes for negative x."""
        term = PowerTerm(3, np.array([1.0]), np.array([0.0]))
        self.assertEqual(term.evaluate(np.array([-2.0]))[0], 0.0)
        self.assertAlmostEqual(term.evaluate(np.array([2.0]))[0], 8.0)

    def test_derivatives_at_zero(self):
        """Derivatives vanish at dx = 0."""
        term = PowerTerm(3, np.array([1.0]), np.array([2.0]))
        _, d1, d2 = term.evaluate(np.zeros(1))
        npt.assert_allclose(d1, [0.0])
        npt.assert_allclose(d2, [0.0])

    def test_validation(self):
        """Order below three and negative T_cvx are rejected."""
        with self.assertRaises(ArgumentError):
            PowerTerm(2, np.zeros(1), np.zeros(1))
        with self.assertRaises(ArgumentError):
            PowerTerm(3, np.zeros(1), np.array([-1.0]))


class TestTaylorCvx(unittest.TestCase):
    """Test cases for Taylor-tensor convexification."""

    def setUp(self):
        """Indefinite quartic keep-out remainder and a double well."""
        self.q = poly_oracle(3, [(10.0, (2, 1, 1)), (-10.0, (1, 2, 1))])
        self.well = poly_oracle(1, [(1.0, (4,)), (-1.0, (2,))])

    def test_matches_value_and_gradient(self):
        """Value and gradient agree with f at x_e."""
        x_e = np.array([0.4, -1.1, 2.0])
        a = TaylorCvx(4).convexify(self.q, x_e)
        value, grad, _ = a.evaluate(x_e)
        self.assertAlmostEqual(value, self.q.value(x_e), places=10)
        npt.assert_allclose(grad, self.q.gradient(x_e), atol=1e-10)

    def test_exact_series_overestimates(self):
        """A full-degree Taylor convexification is a global overestimator."""
        rng = np.random.default_rng(1)
        x_e = rng.uniform(-2.0, 2.0, size=3)
        a = TaylorCvx(4).convexify(self.q, x_e)
        points = x_e + rng.uniform(-3.0, 3.0, size=(5000, 3))
        self.assertTrue(verify_overestimation(a, self.q, points).ok)

    def test_hessian_is_psd(self):
        """The reported Hessian is PSD away from x_e."""
        a = TaylorCvx(4).convexify(self.well, np.array([0.2]))
        for x in np.linspace(-2.0, 2.0, 21):
            _, _, hess = a.evaluate(np.array([x]))
            self.assertGreaterEqual(hess[0, 0], -1e-12)

    def test_gradient_matches_finite_differences(self):
        """Analytic gradient of the approximation matches central differences."""
        a = TaylorCvx(4).convexify(self.q, np.array([1.0, 0.5, -0.3]))
        x = np.array([1.3, 0.1, 0.2])
        _, grad, _ = evaluate(a, x)
        h = 1e-6
        fd = [
            (a.value(x + h * e) - a.value(x - h * e)) / (2 * h) for e in np.eye(3)
        ]
        npt.assert_allclose(grad, fd, rtol=1e-5, atol=1e-6)

    def test_is_exact_and_describe(self):
        """Exactness follows the polynomial degree."""
        self.assertTrue(TaylorCvx(4).is_exact(self.q))
        self.assertFalse(TaylorCvx(3).is_exact(self.q))
        self.assertEqual(TaylorCvx(3).describe(), "taylor(3)")
        self.assertEqual(TaylorCvx(3).reg_order, 4)

    def test_order_below_two_rejected(self):
        """TaylorCvx needs order >= 2."""
        with self.assertRaises(ArgumentError):
            TaylorCvx(1)

    def test_regularizer_restores_overestimation(self):
        """A truncated cubic series of x^4 overestimates once M is large."""
        x_e = np.array([0.5])
        a = TaylorCvx(3).convexify(self.well, x_e)
        points = x_e + np.linspace(-1.0, 1.0, 201)[:, None]
        self.assertFalse(verify_overestimation(a, self.well, points).ok)
        big = add_regularizer(a, 24.0)
        self.assertTrue(verify_overestimation(big, self.well, points).ok)
        self.assertAlmostEqual(big.value(x_e), a.value(x_e))

    def test_negative_regularizer_rejected(self):
        """M must be nonnegative."""
        a = TaylorCvx(2).convexify(self.well, np.zeros(1))
        with self.assertRaises(ArgumentError):
            add_regularizer(a, -1.0)


class TestApproximationAlgebra(unittest.TestCase):
    """Test cases for scaling, shifting and adding approximations."""

    def setUp(self):
        """Two approximations at a common point."""
        self.x_e = np.array([0.3, -0.2])
        f = poly_oracle(2, [(1.0, (3, 0)), (1.0, (1, 1))])
        g = poly_oracle(2, [(1.0, (0, 4)), (-1.0, (2, 0))])
        self.a = TaylorCvx(3).convexify(f, self.x_e)
        self.b = TaylorCvx(4).convexify(g, self.x_e)
        self.x = np.array([1.0, 0.7])

    def test_sum(self):
        """Sum evaluates to the sum of values."""
        total = self.a + self.b
        self.assertAlmostEqual(
            total.value(self.x), self.a.value(self.x) + self.b.value(self.x)
        )

    def test_scaled_and_shifted(self):
        """Scaling multiplies and shifting offsets the value."""
        self.assertAlmostEqual(self.a.scaled(2.5).value(self.x), 2.5 * self.a(self.x))
        self.assertAlmostEqual(self.a.shifted(-1.0).value(self.x), self.a(self.x) - 1)

    def test_negative_scale_rejected(self):
        """Negative weights would break convexity."""
        with self.assertRaises(ArgumentError):
            self.a.scaled(-1.0)

    def test_different_points_rejected(self):
        """Approximations at different points cannot be added."""
        other = TaylorCvx(2).convexify(poly_oracle(2, [(1.0, (2, 0))]), np.ones(2))
        with self.assertRaises(ArgumentError):
            self.a + other

    def test_non_psd_hessian_rejected(self):
        """hess_psd must be PSD."""
        with self.assertRaises(ArgumentError):
            InnerConvexApprox(np.zeros(1), 0.0, np.zeros(1), -np.eye(1))


class TestDcAndLipschitz(unittest.TestCase):
    """Test cases for d.c. linearization and Lipschitz regularization."""

    def test_dc_linearize_overestimates(self):
        """x^4 - x^2 split as c1 = x^4, c2 = x^2."""
        c1 = poly_oracle(1, [(1.0, (4,))])
        c2 = poly_oracle(1, [(1.0, (2,))])
        f = poly_oracle(1, [(1.0, (4,)), (-1.0, (2,))])
        x_e = np.array([0.6])
        a = dc_linearize(c1, c2, x_e)
        self.assertAlmostEqual(a.value(x_e), f.value(x_e), places=12)
        npt.assert_allclose(a.evaluate(x_e)[1], f.gradient(x_e), atol=1e-12)
        points = np.linspace(-2.0, 2.0, 101)[:, None]
        self.assertTrue(verify_overestimation(a, f, points).ok)

    def test_dc_linearize_concave_only(self):
        """A concave function becomes its tangent plane."""
        c2 = poly_oracle(2, [(1.0, (2, 0)), (1.0, (0, 2))])
        x_e = np.array([1.0, 2.0])
        a = dc_linearize(None, c2, x_e)
        x = np.array([0.0, 0.0])
        expected = -5.0 + (x - x_e) @ np.array([-2.0, -4.0])
        self.assertAlmostEqual(a.value(x), expected)

    def test_dc_strategy_with_remainder(self):
        """DcLinearize adds a Taylor-convexified remainder."""
        c2 = poly_oracle(3, [(1.0, (4, 0, 0)), (1.0, (0, 0, 4))])
        q = poly_oracle(3, [(10.0, (2, 1, 1)), (-10.0, (1, 2, 1))])
        full = PolynomialOracle(q.poly - c2.poly)
        strategy = DcLinearize(c2=c2, remainder=q, remainder_order=4)
        self.assertTrue(strategy.is_exact(full))
        x_e = np.array([1.0, -0.5, 2.0])
        a = strategy.convexify(full, x_e)
        self.assertAlmostEqual(a.value(x_e), full.value(x_e), places=9)
        rng = np.random.default_rng(5)
        points = x_e + rng.uniform(-2.0, 2.0, size=(3000, 3))
        self.assertTrue(verify_overestimation(a, full, points).ok)
        self.assertIn("c2", strategy.describe())

    def test_linearize_underestimates_quartic(self):
        """Plain linearization of x^4 violates overestimation."""
        f = poly_oracle(1, [(1.0, (4,))])
        a = Linearize().convexify(f, np.array([1.0]))
        report = verify_overestimation(a, f, np.linspace(-2.0, 2.0, 41)[:, None])
        self.assertGreater(report.violations, 0)
        self.assertGreater(report.worst_gap, 0.0)

    def test_lipschitz_depends_on_k(self):
        """K equal to half the curvature overestimates, a smaller K does not."""
        f = CallableOracle(
            lambda v: float(v @ v),
            2,
            grad=lambda v: 2 * v,
            hess=lambda v: 2 * np.eye(2),
        )
        x_e = np.array([0.5, -0.5])
        points = np.random.default_rng(2).uniform(-2.0, 2.0, size=(500, 2))
        good = lipschitz_regularize(f, x_e, 1.0)
        bad = LipschitzReg(0.5).convexify(f, x_e)
        self.assertTrue(verify_overestimation(good, f, points).ok)
        self.assertFalse(verify_overestimation(bad, f, points).ok)
        with self.assertRaises(ArgumentError):
            LipschitzReg(-1.0)


class TestStrategyRegistry(unittest.TestCase):
    """Test cases for build_strategy."""

    def test_default_is_taylor3(self):
        """None builds TaylorCvx(3)."""
        strategy = build_strategy(None)
        self.assertIsInstance(strategy, TaylorCvx)
        self.assertEqual(strategy.order, 3)

    def test_from_name_and_dict(self):
        """Names and dicts select variants and options."""
        self.assertIsInstance(build_strategy("linearize"), Linearize)
        self.assertEqual(build_strategy({"variant": "taylor", "order": 4}).order, 4)
        self.assertEqual(build_strategy({"variant": "lipschitz", "K": 2.0}).K, 2.0)

    def test_dc_from_dict(self):
        """d.c. parts are given as polynomial term lists."""
        strategy = build_strategy(
            {"variant": "dc", "c2": [[1.0, [2, 0]], [1.0, [0, 2]]]}, dim=2
        )
        self.assertIsInstance(strategy, DcLinearize)
        self.assertIsNotNone(strategy.c2)

    def test_unknown_variant(self):
        """Unknown variants are configuration errors."""
        with self.assertRaises(ConfigError):
            build_strategy("sos")

    def test_dc_needs_dimension(self):
        """Polynomial parts need the dimension."""
        with self.assertRaises(ConfigError):
            build_strategy({"variant": "dc", "c1": [[1.0, [2]]]})

    def test_available(self):
        """Every registered variant is listed."""
        self.assertEqual(
            set(available_strategies()), {"linearize", "taylor", "dc", "lipschitz"}
        )


if __name__ == "__main__":
    unittest.main()
