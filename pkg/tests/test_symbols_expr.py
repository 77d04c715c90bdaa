"""Tests for the expression language: parsing, printing, exact derivatives."""

import math

import numpy as np
import pytest

from ultracalc.symbols import expr as ex
from ultracalc.symbols import parser as ps


def cauchy_derivative(f, x0, k, radius=0.4, npts=128):
    """Derivative oracle via the Cauchy integral on a circle around x0.

    Spectrally accurate for trees analytic in a neighborhood of the real
    axis, and independent of the symbolic differentiation path.
    """
    theta = 2.0 * np.pi * np.arange(npts) / npts
    z = x0 + radius * np.exp(1j * theta)
    vals = f(z)
    coeff = np.mean(vals * np.exp(-1j * k * theta)) / radius**k
    return coeff * math.factorial(k)


def eval1d(tree, x=0.0, xi=0.0, y=0.0):
    return tree.evaluate({"x": (np.asarray(x, dtype=complex),),
                          "xi": (np.asarray(xi, dtype=complex),),
                          "y": (np.asarray(y, dtype=complex),)})


class TestParse:
    def test_gaussian_in_xi(self):
        tree = ps.parse("exp(-xi^2/2)")
        assert eval1d(tree, xi=0.0) == pytest.approx(1.0)
        assert eval1d(tree, xi=2.0) == pytest.approx(math.exp(-2.0))

    def test_product_node(self):
        tree = ps.parse("x*xi")
        assert isinstance(tree, ex.Prod)
        assert eval1d(tree, x=3.0, xi=-2.0) == pytest.approx(-6.0)

    def test_angle_negative_power_derivative_matches_oracle(self):
        tree = ps.parse("angle(x)^(-2)")
        d = tree.diff("x")
        def f(z):
            return tree.evaluate({"x": (z,), "xi": (z * 0,), "y": (z * 0,)})
        oracle = cauchy_derivative(f, 1.0, 1)
        assert eval1d(d, x=1.0) == pytest.approx(oracle, rel=1e-8)

    def test_roundtrip_print_parse(self):
        samples = [
            "exp(-xi^2/2)", "x*xi", "angle(x)^(-2)", "x + 2*xi - 3",
            "exp(-x^2 - xi^2)", "(x + xi)^3/angle(xi)", "x1*xi2 + angle(y)",
            "i*x - xi/4",
        ]
        for text in samples:
            tree = ps.parse(text)
            assert ps.parse(ps.to_text(tree)) == tree

    def test_errors_carry_position(self):
        with pytest.raises(ps.ParseError, match="line 1"):
            ps.parse("x + $")
        with pytest.raises(ps.ParseError, match="unknown identifier"):
            ps.parse("x + zeta")
        with pytest.raises(ps.ParseError, match="integer"):
            ps.parse("x^2.5")

    def test_symbol_file(self, tmp_path):
        path = tmp_path / "f.sym"
        path.write_text("# fixtures\na = x*xi\nb = exp(-xi^2/2)\n")
        table = ps.load_symbol_file(path)
        assert set(table) == {"a", "b"}
        assert eval1d(table["a"], x=1.0, xi=5.0) == pytest.approx(5.0)


class TestDifferentiate:
    def test_D_of_x_xi(self):
        # D_x (x*xi) = xi / i
        tree = ps.parse("x*xi")
        d = ex.differentiate(tree, beta=1, convention="D")
        assert eval1d(d, xi=3.0) == pytest.approx(3.0 / 1j)

    def test_mixed_partial_of_gaussian(self):
        # d_xi d_x exp(-x^2 - xi^2) = 4 x xi exp(-x^2 - xi^2)
        tree = ps.parse("exp(-x^2 - xi^2)")
        d = ex.differentiate(tree, alpha=1, beta=1)
        x, xi = 0.3, -1.1
        expected = 4 * x * xi * math.exp(-x * x - xi * xi)
        assert eval1d(d, x=x, xi=xi) == pytest.approx(expected, rel=1e-12)

    def test_sixth_derivative_of_inverse_bracket(self):
        tree = ps.parse("angle(x)^(-1)")
        d = ex.differentiate(tree, beta=6)
        def f(z):
            return tree.evaluate({"x": (z,), "xi": (z * 0,), "y": (z * 0,)})
        oracle = cauchy_derivative(f, 0.7, 6, radius=0.5, npts=256)
        assert eval1d(d, x=0.7) == pytest.approx(oracle, rel=1e-6)

    def test_budget_enforced(self):
        with pytest.raises(ex.BudgetExceededError):
            ex.differentiate(ps.parse("x"), beta=13)

    def test_random_trees_match_oracle(self):
        rng = np.random.RandomState(0)
        pool = [
            "exp(-x^2/4 + x*xi/8)", "x^3*xi - 2*x", "angle(x)^(-2)*xi",
            "(x + xi)/angle(x)", "exp(-xi^2/2)*x^2",
        ]
        for text in pool:
            tree = ps.parse(text)
            for block in ("x", "xi"):
                k = int(rng.randint(1, 4))
                d = ex.differentiate(tree, alpha=k if block == "xi" else 0,
                                     beta=k if block == "x" else 0)
                x0, xi0 = 0.6, 0.4
                if block == "x":
                    def f(z):
                        return tree.evaluate({"x": (z,), "xi": (np.full_like(z, xi0),),
                                              "y": (z * 0,)})
                    oracle = cauchy_derivative(f, x0, k)
                else:
                    def f(z):
                        return tree.evaluate({"x": (np.full_like(z, x0),), "xi": (z,),
                                              "y": (z * 0,)})
                    oracle = cauchy_derivative(f, xi0, k)
                got = eval1d(d, x=x0, xi=xi0)
                assert got == pytest.approx(oracle, rel=1e-6, abs=1e-10)


class TestPolynomial:
    def test_exact_expansion_and_cancellation(self):
        a = ps.parse("(x + xi)^2")
        b = ps.parse("x^2 + 2*x*xi + xi^2")
        assert ex.poly_equal(a, b)

    def test_reflect_xi(self):
        tree = ps.parse("x*xi + xi^2 + angle(xi)")
        reflected = ex.reflect_xi(tree)
        x, xi = 1.3, 0.7
        assert eval1d(reflected, x=x, xi=xi) == pytest.approx(eval1d(tree, x=x, xi=-xi))

    def test_non_polynomial_returns_none(self):
        assert ex.to_polynomial(ps.parse("exp(x)")) is None
        assert ex.to_polynomial(ps.parse("angle(x)")) is None

    def test_exact_rational_coefficients(self):
        # (1/3!) stays an exact rational through products and sums
        c = ex.Const(ex.ExactC(1, 0)) * (1.0 / 6.0)
        tree = c * ps.parse("x^3") - ps.parse("x^3") * (1.0 / 6.0)
        poly = ex.to_polynomial(tree)
        assert poly == {}
