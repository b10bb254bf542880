"""
Unit tests for multi-indices, symmetric tensors and Taylor expansions.
"""

import math
import unittest

import numpy as np
import numpy.testing as npt

from scpkit.errors import ArgumentError
from scpkit.oracles import CallableOracle, PolynomialOracle
from scpkit.tensor_taylor import (
    MultiIndex,
    Polynomial,
    SymTensor,
    TaylorExpansion,
    canonical,
    fd_expand,
    multiplicity,
    tensor_apply,
    tensor_get,
)


class TestMultiIndex(unittest.TestCase):
    """Test cases for MultiIndex helpers."""

    def test_order_and_factorial(self):
        """Order sums entries and factorial multiplies entry factorials."""
        alpha = MultiIndex((2, 0, 1))
        self.assertEqual(alpha.order, 3)
        self.assertEqual(alpha.factorial, 2)

    def test_power(self):
        """x**alpha multiplies the selected powers."""
        self.assertAlmostEqual(MultiIndex((2, 1)).power(np.array([3.0, 2.0])), 18.0)

    def test_index_tuple_round_trip(self):
        """Index tuple repeats each variable alpha_j times."""
        alpha = MultiIndex((2, 0, 1))
        self.assertEqual(alpha.index_tuple(), (0, 0, 2))
        self.assertEqual(MultiIndex.from_index_tuple((2, 0, 0), 3), alpha)

    def test_negative_entry_rejected(self):
        """Negative exponents are argument errors."""
        with self.assertRaises(ArgumentError):
            MultiIndex((1, -1))

    def test_multiplicity(self):
        """Distinct permutations of an index tuple."""
        self.assertEqual(multiplicity((0, 0, 1)), 3)
        self.assertEqual(multiplicity((0, 1, 2)), 6)
        self.assertEqual(multiplicity((1, 1, 1, 1)), 1)
        self.assertEqual(canonical((2, 0, 1)), (0, 1, 2))


class TestSymTensor(unittest.TestCase):
    """Test cases for SymTensor storage and evaluation."""

    def test_get_is_permutation_invariant(self):
        """Any permutation of an index reads the same coefficient."""
        t = SymTensor(3, 3, {(0, 1, 2): 0.5})
        for idx in [(0, 1, 2), (2, 1, 0), (1, 0, 2)]:
            self.assertEqual(tensor_get(t, idx), 0.5)
        self.assertEqual(t.get((0, 0, 1)), 0.0)

    def test_bad_index_length(self):
        """Index tuples of the wrong length are rejected."""
        t = SymTensor(2, 3)
        with self.assertRaises(ArgumentError):
            t.get((0, 1))

    def test_index_out_of_range(self):
        """Indices beyond dim are rejected."""
        with self.assertRaises(ArgumentError):
            SymTensor(2, 3, {(0, 1, 2): 1.0})

    def test_apply_x1_squared_x2(self):
        """Monomial x1^2 x2 stored as 1/3 reproduces the form."""
        t = SymTensor.from_monomials(2, 3, {(0, 0, 1): 1.0})
        self.assertAlmostEqual(t.get((0, 0, 1)), 1.0 / 3.0)
        dx = np.array([1.5, -2.0])
        self.assertAlmostEqual(tensor_apply(t, dx), 1.5**2 * -2.0)

    def test_dense_round_trip(self):
        """from_dense(to_dense(t)) keeps every coefficient."""
        t = SymTensor(3, 4, {(0, 0, 1, 2): 0.25, (2, 2, 2, 2): -1.0})
        back = SymTensor.from_dense(t.to_dense())
        for key, value in t.coeffs.items():
            self.assertAlmostEqual(back.get(key), value)

    def test_dense_contraction_matches_apply(self):
        """Dense full contraction equals apply."""
        rng = np.random.default_rng(3)
        t = SymTensor(3, 3, {(0, 1, 1): 0.7, (0, 0, 2): -0.2, (2, 2, 2): 1.1})
        dx = rng.standard_normal(3)
        dense = np.einsum("ijk,i,j,k->", t.to_dense(), dx, dx, dx)
        self.assertAlmostEqual(t.apply(dx), dense, places=12)

    def test_scaled(self):
        """Scaling multiplies the form."""
        t = SymTensor(2, 3, {(0, 1, 1): 2.0})
        dx = np.array([0.3, 0.4])
        self.assertAlmostEqual(t.scaled(-2.0).apply(dx), -2.0 * t.apply(dx))


class TestTaylorExpansion(unittest.TestCase):
    """Test cases for TaylorExpansion and exact polynomial expansions."""

    def setUp(self):
        """Polynomial x^3 + x y^2 - 2 y + 1."""
        self.poly = Polynomial.from_list(
            2, [(1.0, (3, 0)), (1.0, (1, 2)), (-2.0, (0, 1)), (1.0, (0, 0))]
        )

    def test_polynomial_expansion_is_exact(self):
        """The full series of a polynomial reproduces it anywhere."""
        x_e = np.array([0.7, -1.2])
        exp = self.poly.expand(x_e)
        self.assertTrue(exp.exact)
        for x in [np.array([2.0, 1.0]), np.array([-1.3, 0.4])]:
            self.assertAlmostEqual(exp.evaluate(x), self.poly.value(x), places=10)

    def test_expansion_derivatives(self):
        """Gradient and Hessian match the analytic ones."""
        x_e = np.array([0.5, 2.0])
        exp = self.poly.expand(x_e, 3)
        npt.assert_allclose(exp.grad, self.poly.gradient(x_e), atol=1e-12)
        npt.assert_allclose(exp.hess, self.poly.hessian(x_e), atol=1e-12)
        self.assertAlmostEqual(exp.f0, self.poly.value(x_e), places=12)

    def test_truncated(self):
        """Truncation drops higher tensors and clears the exact flag."""
        exp = self.poly.expand(np.zeros(2))
        cut = exp.truncated(2)
        self.assertEqual(cut.d_trunc, 2)
        self.assertEqual(cut.tensors, ())
        self.assertFalse(cut.exact)

    def test_scaled_and_shifted(self):
        """Scaling and shifting act on the series value."""
        exp = self.poly.expand(np.array([0.1, 0.2]))
        x = np.array([0.4, -0.3])
        self.assertAlmostEqual(exp.scaled(3.0).evaluate(x), 3.0 * exp.evaluate(x))
        self.assertAlmostEqual(exp.shifted(2.5).evaluate(x), exp.evaluate(x) + 2.5)

    def test_asymmetric_hessian_rejected(self):
        """Non-symmetric Hessians are argument errors."""
        with self.assertRaises(ArgumentError):
            TaylorExpansion(
                np.zeros(2), 0.0, np.zeros(2), np.array([[1.0, 1.0], [0.0, 1.0]])
            )

    def test_tensor_order_above_truncation_rejected(self):
        """Tensors beyond d_trunc are rejected."""
        with self.assertRaises(ArgumentError):
            TaylorExpansion(
                np.zeros(1),
                0.0,
                np.zeros(1),
                np.zeros((1, 1)),
                (SymTensor(1, 4, {(0, 0, 0, 0): 1.0}),),
                d_trunc=3,
            )

    def test_fd_expand_matches_exact(self):
        """Finite differences recover the third-order series of a cubic."""
        x_e = np.array([0.3, -0.4])
        fd = fd_expand(self.poly.value, x_e, 3)
        exact = self.poly.expand(x_e, 3)
        npt.assert_allclose(fd.grad, exact.grad, atol=1e-5)
        npt.assert_allclose(fd.hess, exact.hess, atol=1e-5)
        fd3, ex3 = fd.tensor(3), exact.tensor(3)
        for key in [(0, 0, 0), (0, 1, 1), (1, 1, 1)]:
            self.assertAlmostEqual(fd3.get(key), ex3.get(key), places=4)

    def test_fd_expand_order_range(self):
        """Orders outside 2..4 are rejected."""
        with self.assertRaises(ArgumentError):
            fd_expand(self.poly.value, np.zeros(2), 5)


class TestOracles(unittest.TestCase):
    """Test cases for the oracle wrappers."""

    def test_polynomial_oracle(self):
        """PolynomialOracle forwards to the polynomial."""
        poly = Polynomial.from_list(1, [(1.0, (4,)), (-1.0, (2,))])
        oracle = PolynomialOracle(poly)
        x = np.array([0.8])
        self.assertAlmostEqual(oracle.value(x), 0.8**4 - 0.8**2)
        npt.assert_allclose(oracle.gradient(x), [4 * 0.8**3 - 2 * 0.8])
        self.assertIn("degree=4", oracle.describe())

    def test_callable_oracle_fd(self):
        """CallableOracle differentiates by finite differences."""
        oracle = CallableOracle(lambda v: math.exp(v[0]) + v[0] * v[1], 2)
        x = np.array([0.2, 0.5])
        npt.assert_allclose(oracle.gradient(x), [math.exp(0.2) + 0.5, 0.2], atol=1e-6)

    def test_non_finite_value(self):
        """Non-finite oracle values raise OracleError."""
        from scpkit.errors import OracleError

        oracle = CallableOracle(lambda v: float("nan"), 1)
        with self.assertRaises(OracleError):
            oracle.checked_value(np.zeros(1))


if __name__ == "__main__":
    unittest.main()
