"""Tests for bumps, the dyadic partition, excision cutoffs, and theta."""

import math

import numpy as np
import pytest

from ultracalc import mollify as mf
from ultracalc import weights as wt


def richardson_derivative(f, t0, k, h0=1e-2, levels=4):
    """Central finite differences with Richardson extrapolation (real oracle
    for the non-analytic profiles; spacing tuned per order)."""
    def central(h):
        offsets = np.arange(-k, k + 1)
        # k-th derivative stencil from iterated central differences
        coeffs = np.zeros(2 * k + 1)
        base = np.array([1.0])
        for _ in range(k):
            base = np.convolve(base, [0.5, 0.0, -0.5]) / 1.0
        # base now has length 2k+1 with spacing-h first differences
        vals = f(t0 + offsets * h)
        return float(np.dot(base, vals[::-1])) / h**k

    estimates = [central(h0 / 2**j) for j in range(levels)]
    table = list(estimates)
    for m in range(1, levels):
        fac = 4.0**m
        table = [(fac * table[j + 1] - table[j]) / (fac - 1.0) for j in range(len(table) - 1)]
    return table[0]


class TestBumpProfile:
    def test_boundary_values(self):
        prof = mf.make_bump(2.0, 1.0, 2.0)
        assert prof(np.array([1.0]))[0] == pytest.approx(1.0)
        assert prof(np.array([2.0]))[0] == pytest.approx(0.0, abs=1e-300)
        assert prof(np.array([0.5]))[0] == 1.0

    def test_strict_transition(self):
        prof = mf.make_bump(2.0, 1.0, 2.0)
        v = prof(np.array([1.5]))[0]
        assert 0.0 < v < 1.0

    def test_range_in_unit_interval(self):
        prof = mf.make_bump(2.0, 1.0, 2.0)
        t = np.linspace(0.0, 3.0, 1201)
        vals = prof(t)
        assert np.all(vals >= -1e-12) and np.all(vals <= 1.0 + 1e-12)

    def test_quasianalytic_rejected(self):
        with pytest.raises(mf.QuasianalyticOrderError):
            mf.make_bump(0.8, 1.0, 2.0)
        with pytest.raises(mf.QuasianalyticOrderError):
            mf.make_bump(1.0, 1.0, 2.0)

    def test_first_derivative_matches_fd(self):
        prof = mf.make_bump(2.0, 1.0, 2.0)
        for t0 in (1.3, 1.5, 1.7):
            fd = richardson_derivative(lambda t: prof(t), t0, 1, h0=1e-4)
            assert prof.derivative(np.array([t0]), 1)[0] == pytest.approx(fd, rel=1e-6)

    def test_higher_derivatives_match_fd(self):
        # t = 1.5 is the odd-symmetry point of the glue, so use 1.35
        prof = mf.make_bump(2.0, 1.0, 2.0)
        for k, h0 in ((2, 1e-3), (3, 1e-2)):
            fd = richardson_derivative(lambda t: prof(t), 1.35, k, h0=h0)
            got = prof.derivative(np.array([1.35]), k)[0]
            assert got == pytest.approx(fd, rel=1e-4)

    def test_gevrey_fit_succeeds_to_order_six(self):
        for s in (1.5, 2.0, 3.0):
            prof = mf.make_bump(s, 1.0, 2.0)
            fit = mf.derivative_bound_fit(prof, K=6)
            assert np.all(np.isfinite(fit.ratios))
            assert fit.C >= 1.0 and fit.h > 0.0
            # the bound closes by construction; check it explicitly
            t = np.linspace(1.0, 2.0, 401)
            for k in range(7):
                lhs = np.max(np.abs(prof.derivative(t, k)))
                rhs = fit.C * fit.h**k * math.gamma(k + 1) ** s
                assert lhs <= rhs * (1 + 1e-9)


class TestDyadicPartition:
    def setup_method(self):
        self.seq = wt.gevrey(1.0, 64)
        self.R = 2.5
        self.N = 8
        self.pieces = mf.dyadic_partition(self.seq, self.R, self.N)

    def test_telescoping_identity(self):
        xi = np.linspace(-70.0, 70.0, 2001)
        total = sum(p(xi) for p in self.pieces)
        m_next = math.exp(self.seq.ln_quotient(np.array([self.N + 1]))[0])
        target = self.pieces[0].profile(np.abs(xi) / (self.R * m_next))
        assert np.max(np.abs(total - target)) <= 1e-12

    def test_partial_sum_is_one_inside(self):
        # <xi> <= sqrt(6) R m_{N+1} lies in the plateau of the telescoped sum
        m_next = math.exp(self.seq.ln_quotient(np.array([self.N + 1]))[0])
        xi = np.linspace(0.0, math.sqrt(5.0) * self.R * m_next * 0.999, 300)
        total = sum(p(xi) for p in self.pieces)
        assert np.max(np.abs(total - 1.0)) <= 1e-12

    def test_supports(self):
        m = np.exp(self.seq.ln_quotient(np.arange(1, self.N + 2)))
        xi = np.linspace(0.0, 100.0, 4001)
        bracket = np.sqrt(1.0 + xi * xi)
        for n in range(1, self.N + 1):
            vals = np.abs(self.pieces[n](xi))
            outside = (bracket <= 2.0 * self.R * m[n - 1]) | (bracket >= 3.0 * self.R * m[n])
            assert np.max(vals[outside]) == 0.0

    def test_vanishes_at_bracket_two_R_mn(self):
        m = np.exp(self.seq.ln_quotient(np.arange(1, self.N + 1)))
        for n in range(1, self.N + 1):
            b = 2.0 * self.R * m[n - 1]
            xi = math.sqrt(b * b - 1.0)  # <xi> = 2 R m_n exactly
            assert self.pieces[n](np.array([xi]))[0] == 0.0

    def test_range(self):
        xi = np.linspace(0.0, 100.0, 2001)
        for p in self.pieces:
            vals = p(xi)
            assert np.all(vals >= -1e-12) and np.all(vals <= 1.0 + 1e-12)

    def test_small_R_rejected(self):
        with pytest.raises(ValueError):
            mf.dyadic_partition(self.seq, 1.5, 4)


class TestExcision:
    def setup_method(self):
        self.seq = wt.gevrey(1.0, 64)
        self.family = mf.excision(self.seq, R=2.0, N=8)

    def _env(self, x, xi):
        return {"x": (np.atleast_1d(np.asarray(x, dtype=float)),),
                "xi": (np.atleast_1d(np.asarray(xi, dtype=float)),)}

    def test_chi0_is_zero(self):
        assert self.family.piece(0) is None

    def test_center_value_one(self):
        chi1 = self.family.piece(1)
        assert chi1.evaluate(self._env(0.0, 0.0))[0] == pytest.approx(1.0)

    def test_zero_outside_qc(self):
        m = np.exp(self.seq.ln_quotient(np.arange(1, 9)))
        for n in (1, 3, 5):
            chi = self.family.piece(n)
            t = 3.0 * self.family.R * m[n - 1]
            x_out = math.sqrt(t * t - 1.0) + 1e-9  # <x> >= 3 R m_n
            assert chi.evaluate(self._env(x_out, 0.0))[0] == pytest.approx(0.0, abs=1e-300)
            assert chi.evaluate(self._env(0.0, x_out))[0] == pytest.approx(0.0, abs=1e-300)

    def test_plateau(self):
        chi2 = self.family.piece(2)
        t = self.family.plateau_radius(2)
        x_in = math.sqrt(t * t - 1.0) * 0.999
        assert chi2.evaluate(self._env(x_in, x_in))[0] == pytest.approx(1.0)

    def test_locally_finite(self):
        # at a fixed point, 1 - chi_n = 0 once the plateau covers it
        x, xi = 7.0, 3.0
        b = max(math.hypot(1.0, x), math.hypot(1.0, xi))
        active = [n for n in range(1, 9)
                  if self.family.plateau_radius(n) < b or
                  abs(1.0 - self.family.piece(n).evaluate(self._env(x, xi))[0]) > 0]
        for n in range(1, 9):
            if self.family.plateau_radius(n) >= b:
                val = self.family.piece(n).evaluate(self._env(x, xi))[0]
                assert val == pytest.approx(1.0)
        assert len(active) <= 8

    def test_negative_index_rejected(self):
        with pytest.raises(ValueError):
            self.family.piece(-1)

    def test_derivative_matches_fd(self):
        chi1 = self.family.piece(1)
        x0 = np.array([3.1])
        xi0 = np.array([0.5])

        def f(x):
            return chi1.evaluate({"x": (np.asarray(x),), "xi": (np.full_like(np.asarray(x), xi0[0]),)})

        fd = richardson_derivative(f, x0[0], 1, h0=1e-3)
        got = chi1.deriv_eval(0, 1, x0, xi0)[0]
        # D convention divides by i
        assert got * 1j == pytest.approx(fd, rel=1e-6)

    def test_second_derivative_matches_fd(self):
        chi1 = self.family.piece(1)
        x0, xi0 = 3.3, 0.0

        def f(x):
            return chi1.evaluate({"x": (np.asarray(x),), "xi": (np.zeros_like(np.asarray(x)),)})

        fd = richardson_derivative(f, x0, 2, h0=1e-2)
        got = chi1.deriv_eval(0, 2, np.array([x0]), np.array([xi0]))[0]
        assert got * (1j) ** 2 == pytest.approx(fd, rel=1e-5)


@pytest.fixture(scope="module")
def theta_cutoff():
    axis = -12.0 + 0.0078125 * np.arange(3072)
    return mf.offdiag_cutoff(0.5, axis)


class TestOffdiagCutoff:
    r = 0.5

    @pytest.fixture(autouse=True)
    def _bind(self, theta_cutoff):
        self.theta = theta_cutoff
        self.axis = theta_cutoff.axis

    def test_zero_on_diagonal(self):
        x = np.array([-3.0, 0.0, 2.5])
        assert np.max(np.abs(self.theta(x, x))) == 0.0

    def test_one_deep_inside(self):
        # |x - y| = 2 <x> is deep in Omega_{3r/4}
        x = np.array([0.0, 1.0, -2.0])
        y = x - 2.0 * np.sqrt(1.0 + x * x)
        vals = self.theta(x, y)
        assert np.max(np.abs(vals - 1.0)) <= 1e-12

    def test_support_predicates(self):
        rng = np.random.RandomState(2)
        x = rng.uniform(-8.0, 8.0, 300)
        y = rng.uniform(-8.0, 8.0, 300)
        vals = self.theta(x, y)
        bracket = np.sqrt(1.0 + x * x)
        gap = np.abs(x - y)
        margin = 2.5 * (self.axis[1] - self.axis[0])
        outside = gap <= (self.r / 4.0) * bracket - margin
        inside = gap >= (3.0 * self.r / 4.0) * bracket + margin
        assert np.all(vals[outside] <= 1e-12)
        assert np.all(vals[inside] >= 1.0 - 1e-9)

    def test_range(self):
        assert np.all(self.theta.values >= -1e-12)
        assert np.all(self.theta.values <= 1.0 + 1e-12)

    def test_coarse_grid_rejected(self):
        with pytest.raises(mf.ResolutionError):
            mf.offdiag_cutoff(0.05, np.linspace(-12, 12, 256))
