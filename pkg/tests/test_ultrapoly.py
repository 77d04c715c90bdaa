"""Tests for the truncated entire-product machinery.

Closed-form oracle: for M_p = p!, l = 1, q = 1 the product telescopes to
sinh(pi xi)/(pi xi).
"""

import math

import numpy as np
import pytest

from ultracalc import ultrapoly as up
from ultracalc import weights as wt


def sinh_oracle(xi):
    xi = np.asarray(xi, dtype=float)
    out = np.ones_like(xi)
    nz = xi != 0
    out[nz] = np.sinh(np.pi * xi[nz]) / (np.pi * xi[nz])
    return out


@pytest.fixture(scope="module")
def factorial_poly():
    return up.build(wt.gevrey(1.0, 64), l=1.0, q=1, radius=50.0, J=10000)


class TestEvaluate:
    def test_value_at_zero_is_one(self, factorial_poly):
        assert up.evaluate(factorial_poly, np.array([0.0]))[0] == pytest.approx(1.0, abs=1e-14)

    def test_matches_sinh_closed_form(self, factorial_poly):
        xi = np.linspace(0.0, 20.0, 201)
        vals = up.evaluate(factorial_poly, xi)
        rel = np.abs(vals - sinh_oracle(xi)) / sinh_oracle(xi)
        assert np.max(rel) <= 1e-8
        # spot value at xi = 2
        v2 = up.evaluate(factorial_poly, np.array([2.0]))[0]
        assert v2 == pytest.approx(math.sinh(2 * math.pi) / (2 * math.pi), rel=1e-8)

    def test_at_least_one_on_reals(self, factorial_poly):
        xi = np.linspace(-30.0, 30.0, 301)
        assert np.all(up.evaluate(factorial_poly, xi) >= 1.0 - 1e-12)

    def test_even_and_log_monotone(self, factorial_poly):
        xi = np.linspace(0.0, 25.0, 101)
        ln_pos = up.eval_ln(factorial_poly, xi)
        ln_neg = up.eval_ln(factorial_poly, -xi)
        assert np.array_equal(ln_pos, ln_neg)  # factors depend on xi^2 only
        assert np.all(np.diff(ln_pos) >= -1e-12)

    def test_tail_bound_envelope(self, factorial_poly):
        xi = np.linspace(0.5, 20.0, 101)
        rel = np.abs(up.evaluate(factorial_poly, xi) / sinh_oracle(xi) - 1.0)
        assert np.max(rel) <= math.expm1(factorial_poly.tail_bound) + 1e-12

    def test_complex_strip_no_zero(self, factorial_poly):
        z = np.linspace(0.0, 10.0, 50) + 0.5j
        vals = np.exp(up.eval_ln(factorial_poly, z))
        assert np.all(np.abs(vals) > 0.5)

    def test_zero_off_strip_raises(self, factorial_poly):
        with pytest.raises(up.ZeroOnGridError):
            up.eval_ln(factorial_poly, np.array([1j]))  # zero at z = i l m_1 = i


class TestLowerBound:
    def test_passes_for_k_2(self, factorial_poly):
        rep = up.lower_bound_check(factorial_poly, 2.0, np.linspace(0.0, 50.0, 501))
        assert rep.passed and rep.C > 0

    def test_at_zero_forces_C_at_most_one(self, factorial_poly):
        rep = up.lower_bound_check(factorial_poly, 2.0, np.linspace(0.0, 50.0, 501))
        assert rep.C <= 1.0 + 1e-12

    def test_small_k_fails_with_radius(self, factorial_poly):
        # ln P ~ pi |xi| while M(|xi|/k) ~ |xi|/k: k below 1/pi must fail
        rep = up.lower_bound_check(factorial_poly, 0.2, np.linspace(0.0, 50.0, 501))
        assert not rep.passed
        assert rep.failure_radius == pytest.approx(50.0, abs=1.0)

    def test_roumieu_gauge(self):
        seq = wt.gevrey(1.0, 64)
        r = wt.RSequence(np.arange(1.0, 65.0))
        P = up.build(seq, l=1.0, q=1, radius=50.0, J=10000)
        rep = up.lower_bound_check(P, None, np.linspace(0.0, 50.0, 501), r_sequence=r)
        assert rep.passed


class TestReciprocalDerivatives:
    def test_alpha0_matches_lower_bound(self, factorial_poly):
        grid = np.linspace(0.0, 30.0, 301)
        der = up.reciprocal_derivative_check(factorial_poly, K=0, r=0.5, k=2.0, grid=grid)
        low = up.lower_bound_check(factorial_poly, 2.0, grid)
        assert der.per_order_C[0] == pytest.approx(1.0 / low.C, rel=1e-12)

    def test_first_derivative_vanishes_at_zero(self, factorial_poly):
        jets = up.reciprocal_jet(factorial_poly, np.array([0.0]), K=1)
        assert abs(jets[1, 0]) < 1e-14  # evenness

    def test_fourth_derivative_bounded(self, factorial_poly):
        grid = np.linspace(0.0, 30.0, 121)
        rep = up.reciprocal_derivative_check(factorial_poly, K=4, r=0.5, k=2.0, grid=grid)
        assert np.all(np.isfinite(rep.per_order_C))
        assert rep.C < 1e3

    def test_jets_match_cauchy_oracle(self, factorial_poly):
        # independent derivative oracle: Cauchy integral over a circle with
        # radius inside the zero-free strip
        x0, k, radius, npts = 2.0, 4, 0.5, 256
        theta = 2 * np.pi * np.arange(npts) / npts
        z = x0 + radius * np.exp(1j * theta)
        vals = 1.0 / np.exp(up.eval_ln(factorial_poly, z))
        oracle = np.mean(vals * np.exp(-1j * k * theta)) / radius**k * math.factorial(k)
        jet = up.reciprocal_jet(factorial_poly, np.array([x0]), K=4)
        got = jet[4, 0] * math.factorial(4)
        assert got == pytest.approx(oracle.real, rel=1e-6)


class TestChooseParameters:
    def test_factorial_target(self):
        seq = wt.gevrey(1.0, 64)
        l, q = up.choose_parameters(seq, 1.0, c=1.0, grid=np.linspace(0.0, 50.0, 251))
        P = up.build(seq, l=l, q=q, radius=50.0)
        rep = up.lower_bound_check(P, 1.0, np.linspace(0.0, 50.0, 251))
        assert rep.passed
        # strip: no factor zero with |Im z| <= 1
        assert l * math.exp(seq.ln_quotient(np.array([q]))[0]) > 1.0

    def test_looser_target_keeps_l(self):
        seq = wt.gevrey(1.0, 64)
        grid = np.linspace(0.0, 50.0, 251)
        l_tight, _ = up.choose_parameters(seq, 1.0, c=1.0, grid=grid)
        l_loose, _ = up.choose_parameters(seq, 10.0, c=1.0, grid=grid)
        assert l_loose >= l_tight

    def test_strip_evaluation_nonzero(self):
        seq = wt.gevrey(1.0, 64)
        l, q = up.choose_parameters(seq, 1.0, c=1.0, grid=np.linspace(0.0, 50.0, 251))
        P = up.build(seq, l=l, q=q, radius=50.0)
        z = np.linspace(0.0, 50.0, 101) + 0.5j
        vals = np.exp(up.eval_ln(P, z))
        assert np.all(np.abs(vals) > 1e-6)
