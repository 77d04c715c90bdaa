"""Tests for weight sequences, growth conditions, and the sequence lemmas."""

import math

import numpy as np
import pytest

from ultracalc import weights as w


def brute_force_assoc(ln_M_terms, rho, pmax):
    """Independent oracle: direct sup of log+(rho^p / den_p) over p <= pmax.

    ln_M_terms(p) must return ln den_p for a scalar integer p.
    """
    if rho == 0.0:
        return 0.0
    best = 0.0
    for p in range(0, pmax + 1):
        best = max(best, p * math.log(rho) - ln_M_terms(p))
    return best


class TestValidate:
    def test_gevrey_1_all_pass_with_binomial_witnesses(self):
        seq = w.gevrey(1.0, 64)
        rep = w.validate(seq)
        assert rep.all_passed
        # binomial(p, q) <= 2^p makes (c0, H) = (1, 2) the minimal M.2 fit
        assert rep.witnesses.c0_m2 == pytest.approx(1.0)
        assert rep.witnesses.H == pytest.approx(2.0)

    def test_constant_sequence_fails_m3_passes_m1(self):
        seq = w.WeightSequence(np.zeros(65), label="ones")
        rep = w.validate(seq)
        assert rep.passed("M1")
        assert not rep.passed("M3")

    def test_counterexample_sequence_passes_all(self):
        A, M = w.counterexample_pair(64)
        assert w.validate(A).all_passed
        assert w.validate(M).all_passed

    def test_nonpositive_entries_rejected(self):
        with pytest.raises(w.MalformedSequenceError):
            w.WeightSequence(np.array([0.0, np.nan, 1.0]))

    def test_m1_quotient_form_matches_direct_form(self):
        rng = np.random.RandomState(0)
        for _ in range(20):
            ln_M = np.concatenate([[0.0], np.cumsum(rng.uniform(-0.5, 2.0, 12))])
            seq = w.WeightSequence(ln_M)
            rep = w.validate(seq, conditions=("M1",))
            assert rep.passed("M1") == w.m1_direct_check(seq)


class TestAssociatedFunction:
    def test_rho_at_most_m1_gives_zero(self):
        seq = w.gevrey(1.0, 64)
        assert w.associated_function(seq, 1.0).value == 0.0

    def test_factorial_at_e(self):
        # sup_p (p - ln p!) is attained at p = 2: the value is 2 - ln 2
        seq = w.gevrey(1.0, 64)
        res = w.associated_function(seq, math.e)
        assert res.value == pytest.approx(2.0 - math.log(2.0), abs=1e-12)
        assert res.argmax == 2 and not res.at_horizon

    def test_matches_brute_force(self):
        seq = w.gevrey(1.0, 200)
        for rho in (0.1, 1.0, math.e, 10.0, 100.0):
            oracle = brute_force_assoc(lambda p: math.lgamma(p + 1), rho, 200)
            assert w.associated_function(seq, rho).value == pytest.approx(oracle, abs=1e-12)

    def test_monotone_in_rho(self):
        seq = w.gevrey(2.0, 64)
        assert w.associated_function(seq, 2.0).value >= w.associated_function(seq, 1.0).value

    def test_horizon_overflow_flagged(self):
        seq = w.gevrey(1.0, 8)
        assert w.associated_function(seq, 100.0).at_horizon

    def test_convex_in_log_rho(self):
        seq = w.gevrey(1.0, 128)
        t = np.linspace(0.0, 4.0, 41)  # rho = e^t
        vals = seq.assoc_grid(np.exp(t))
        second = vals[2:] - 2 * vals[1:-1] + vals[:-2]
        assert np.all(second >= -1e-9)
        assert np.all(np.diff(vals) >= -1e-12)

    def test_exp_gauge_below_series(self):
        # e^{M(rho)} <= sum_p rho^p / M_p; for p! the sum is e^rho
        seq = w.gevrey(1.0, 128)
        for rho in (0.5, 1.0, 3.0, 10.0):
            assert w.associated_function(seq, rho).value <= rho + 1e-12


class TestNrpAssociated:
    def test_dominated_by_plain_assoc(self):
        seq = w.gevrey(1.0, 64)
        r = w.RSequence(np.arange(1.0, 65.0))
        for rho in (0.5, 2.0, 10.0, 50.0):
            assert w.nrp_associated(seq, r, rho).value <= w.associated_function(seq, rho).value + 1e-12

    def test_zero_gives_zero(self):
        seq = w.gevrey(1.0, 64)
        r = w.RSequence(np.arange(1.0, 65.0))
        assert w.nrp_associated(seq, r, 0.0).value == 0.0

    def test_matches_brute_force(self):
        seq = w.gevrey(1.0, 200)
        r = w.RSequence(np.arange(1.0, 201.0))
        oracle = brute_force_assoc(lambda p: 2 * math.lgamma(p + 1), 10.0, 200)
        assert w.nrp_associated(seq, r, 10.0).value == pytest.approx(oracle, abs=1e-12)


class TestRegularize:
    def test_identity_on_linear(self):
        k = w.RSequence(np.arange(1.0, 65.0))
        kp = w.regularize_rsequence(k)
        assert np.allclose(kp.r, k.r, rtol=1e-12)

    def test_product_inequality_holds(self):
        rng = np.random.RandomState(1)
        for _ in range(10):
            vals = np.cumsum(rng.uniform(0.01, 1.0, 64)) + 1.0
            kp = w.regularize_rsequence(w.RSequence(vals))
            assert w.product_inequality_violations(kp.r) == 0

    def test_dominated_pointwise(self):
        k = w.counterexample_rsequence(64)
        kp = w.regularize_rsequence(k)
        assert np.all(kp.r <= k.r * (1 + 1e-12))

    def test_gauge_increases_after_regularization(self):
        seq = w.gevrey(1.0, 64)
        k = w.RSequence(np.exp(np.sqrt(np.arange(1.0, 65.0))))
        kp = w.regularize_rsequence(k)
        rho = np.linspace(0.5, 50.0, 25)
        before = w.nrp_assoc_grid(seq, k, rho)
        after = w.nrp_assoc_grid(seq, kp, rho)
        assert np.all(after >= before - 1e-12)


class TestGaugeGrowth:
    def test_factorial_with_unit_witnesses(self):
        seq = w.gevrey(1.0, 64)
        witnesses = w.Witnesses(c0=1.0, H=2.0, c0_m2=1.0, c0_m3=1.0)
        rep = w.gauge_growth_check(seq, m=1.0, nmax=32, witnesses=witnesses)
        assert rep.passed and rep.nrp_passed

    def test_passes_with_fitted_witnesses(self):
        for s in (1.0, 2.0):
            seq = w.gevrey(s, 64)
            seq = seq.with_witnesses(w.validate(seq).witnesses)
            rep = w.gauge_growth_check(seq, m=1.0, nmax=32)
            assert rep.passed, f"s={s}: slack {rep.max_slack}"
            assert rep.nrp_passed

    def test_n1_trivially_bounded(self):
        seq = w.gevrey(2.0, 64)
        seq = seq.with_witnesses(w.validate(seq).witnesses)
        rep = w.gauge_growth_check(seq, m=0.5, nmax=1)
        assert rep.passed


class TestInclusionExponent:
    def test_counterexample_dichotomy(self):
        A, M = w.counterexample_pair(64)
        rep = w.inclusion_exponent(A, M, [2.0 / 3.0, 0.75])
        assert not rep.fit_at(2.0 / 3.0).included
        assert rep.fit_at(0.75).included

    def test_self_inclusion_unit_witnesses(self):
        M = w.gevrey(1.0, 64)
        rep = w.inclusion_exponent(M, M, [1.0])
        fit = rep.fit_at(1.0)
        assert fit.included
        assert fit.C == pytest.approx(1.0) and fit.L == pytest.approx(1.0)

    def test_bracket_orders(self):
        A, M = w.counterexample_pair(64)
        rep = w.inclusion_exponent(A, M, [0.6, 2.0 / 3.0, 0.7, 0.75, 0.9])
        lo, hi = rep.rho0_bracket
        assert lo <= hi
        assert lo >= 2.0 / 3.0 - 1e-9 and hi <= 0.75 + 1e-9


class TestInfBound:
    def test_factorial_fit(self):
        seq = w.gevrey(1.0, 200)
        rho = np.linspace(2.0, 200.0, 150)
        rep = w.inf_bound_check(seq, l=1.0, B=2.0, rho_grid=rho)
        assert rep.fit_ok
        # two-sided: the fitted bound actually dominates f on the grid
        bound = rep.C * np.exp(-seq.assoc_grid(rep.l * rep.m_tilde * rho))
        assert np.all(rep.f_values <= bound * (1 + 1e-9))

    def test_boundary_single_feasible_n(self):
        seq = w.gevrey(1.0, 64)
        B = 2.0
        rho = np.array([B * math.exp(seq.ln_M[1])])  # rho = B * M_1 exactly
        rep = w.inf_bound_check(seq, l=1.0, B=B, rho_grid=rho)
        assert not rep.boundary_flags[0]
        assert np.isfinite(rep.f_values[0])

    def test_monotone_in_l(self):
        # smaller l makes every term larger, so f grows as l shrinks
        seq = w.gevrey(1.0, 64)
        rho = np.linspace(3.0, 60.0, 40)
        f_small, _ = w._inf_bound_f(seq, 0.5, 2.0, rho)
        f_large, _ = w._inf_bound_f(seq, 1.0, 2.0, rho)
        assert np.all(f_small >= f_large - 1e-12)

    def test_m_tilde_common_across_l_sweep(self):
        seq = w.gevrey(1.0, 200)
        rho = np.linspace(2.0, 200.0, 150)
        mt, reports = w.inf_bound_l_sweep(seq, [1.0, 0.5, 0.25], 2.0, rho)
        assert all(r.fit_ok for r in reports)
        assert all(r.m_tilde == mt for r in reports)
