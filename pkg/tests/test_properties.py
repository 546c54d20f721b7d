"""Randomised invariants across every shipped model."""
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from nptruth import (Belief, Decision, DecisionGate, LogLikelihoodRatio, OneSampleNormal, PValue,
                     TeaTastingBinomial, TeaTastingFisher, TwoSampleT, biased_expected_V, biased_size, build_rule,
                     lambda_D, p_functional, roc, roc_deriv, sample_size, update)
from nptruth.belief import expected_null_V
from nptruth.distributions import (TDistParams, nct_cdf, norm_cdf, norm_isf, norm_quantile, norm_sf, t_cdf,
                                   t_quantile)

levels = st.floats(1e-4, 1 - 1e-4)
inner_levels = st.floats(0.01, 0.99)

models = st.one_of(
    st.builds(OneSampleNormal, st.just(0.0), st.floats(0.2, 3.0), st.floats(0.5, 5.0), st.integers(1, 20)),
    st.builds(TwoSampleT, st.just(0.0), st.floats(0.5, 6.0), st.floats(1.0, 5.0), st.integers(3, 20)),
    st.builds(TeaTastingBinomial, st.floats(0.55, 1.0)),
    st.builds(TeaTastingFisher, st.floats(0.55, 1.0)),
)
continuous = st.one_of(
    st.builds(OneSampleNormal, st.just(0.0), st.floats(0.2, 2.0), st.just(1.0), st.integers(1, 10)),
    st.builds(TwoSampleT, st.just(0.0), st.floats(1.0, 5.0), st.just(5.0), st.integers(3, 15)),
)


class TestRoc:
    @given(models, levels)
    def test_above_chance(self, model, a):
        assert roc(model, a) > a

    @given(models, levels, levels)
    def test_concave_midpoint(self, model, a, b):
        mid = roc(model, 0.5 * (a + b))
        assert mid >= 0.5 * (roc(model, a) + roc(model, b)) - 1e-12

    @given(models, levels, levels)
    def test_slope_nonincreasing(self, model, a, b):
        lo, hi = sorted((a, b))
        assert roc_deriv(model, lo) >= roc_deriv(model, hi) * (1 - 1e-9)

    @given(continuous, inner_levels)
    def test_slope_matches_finite_difference(self, model, a):
        h = 1e-6
        fd = (roc(model, a + h) - roc(model, a - h)) / (2 * h)
        assert abs(fd - roc_deriv(model, a)) < 1e-5 * max(1.0, roc_deriv(model, a))


class TestExactSize:
    @given(st.sampled_from([TeaTastingBinomial, TeaTastingFisher]), st.floats(0.55, 1.0),
           st.fractions(Fraction(1, 10**6), Fraction(10**6 - 1, 10**6), max_denominator=10**6))
    def test_rule_size_is_alpha(self, cls, theta, alpha):
        assume(0 < alpha < 1)
        model = cls(theta, exact=True)
        rule = build_rule(model, alpha)
        assert 0 <= rule.gamma <= 1
        assert model.null_tail(rule.c) + rule.gamma * model.null_point(rule.c) == alpha

    @given(st.sampled_from([TeaTastingBinomial, TeaTastingFisher]), st.floats(0.55, 1.0), inner_levels)
    def test_p_functional_level_set(self, cls, theta, a):
        model = cls(theta)
        rule = build_rule(model, a)
        # the P-functional at the cutoff interpolates across the level
        assert p_functional(model, rule.c, 0.0) <= a <= p_functional(model, rule.c, 1.0) + 1e-15


class TestDistributions:
    @given(st.floats(-8.0, 8.0))
    def test_normal_round_trip(self, z):
        # invert through the tail that keeps full relative precision
        back = norm_quantile(norm_cdf(z)) if z <= 0 else norm_isf(norm_sf(z))
        assert back == pytest.approx(z, abs=1e-9)

    @given(st.floats(-6.0, 6.0), st.floats(1.0, 60.0))
    def test_t_round_trip(self, x, df):
        assert t_quantile(t_cdf(x, df), df) == pytest.approx(x, abs=1e-7)

    @given(st.lists(st.floats(-20.0, 20.0), min_size=2, max_size=30), st.floats(1.0, 40.0), st.floats(-4.0, 4.0))
    def test_nct_cdf_monotone(self, xs, df, ncp):
        values = np.asarray(nct_cdf(np.sort(np.array(xs)), TDistParams(df, ncp)))
        assert np.all((values >= 0.0) & (values <= 1.0))
        assert np.all(np.diff(values) >= -1e-14)


evidence = st.one_of(
    st.builds(LogLikelihoodRatio, st.floats(-30.0, 30.0)),
    st.builds(Decision, st.integers(0, 1), st.floats(0.01, 0.2), st.floats(0.3, 0.95)),
)


class TestUpdating:
    @given(st.floats(0.01, 0.99), evidence, evidence)
    def test_composition_and_order(self, k0, e1, e2):
        b = Belief(k0)
        one = update(update(b, e1), e2)
        other = update(update(b, e2), e1)
        joint = update(b, LogLikelihoodRatio(e1.log_lr() + e2.log_lr()))
        assert one.log_odds == pytest.approx(other.log_odds, abs=1e-12)
        assert one.log_odds == pytest.approx(joint.log_odds, abs=1e-12)

    @given(st.floats(0.01, 0.99), st.floats(0.001, 0.999))
    def test_uninformative_p(self, k0, p):
        # with no effect the P-value density is flat under both hypotheses
        b = update(Belief(k0), PValue(p, roc_deriv(OneSampleNormal(0.0, 0.0, 1.0, 1), p)))
        assert b.kappa0 == pytest.approx(k0, abs=1e-12)

    @given(st.floats(1e-4, 0.5), st.floats(0.0, 1.0))
    def test_decision_lr_has_unit_null_mean(self, a, t):
        r = a + t * (1 - a)
        assume(r < 1)
        mean = a * lambda_D(1, a, r) + (1 - a) * lambda_D(0, a, r)
        assert mean == pytest.approx(1.0, abs=1e-12)


gates = st.tuples(st.floats(0.01, 1.0), st.floats(0.0, 1.0)).map(lambda t: DecisionGate(t[0] * t[1], t[0]))


class TestBias:
    @given(gates, levels)
    def test_filtered_size_not_below_alpha(self, gate, a):
        assert biased_size(gate, a) >= a * (1 - 1e-12)

    @given(gates, st.floats(1e-3, 0.5), st.floats(0.01, 0.99))
    def test_filtered_drift_not_below_unfiltered(self, gate, a, t):
        r = a + t * (1 - a)
        assert biased_expected_V(gate, a, r) >= expected_null_V(a, r) - 1e-12


class TestSampleSize:
    @given(st.floats(0.5, 8.0), st.floats(0.5, 8.0), st.floats(0.1, 2.0))
    def test_monotone_in_bound(self, b1, b2, xi):
        lo, hi = sorted((b1, b2))
        assert sample_size(lo, xi=xi).n_star <= sample_size(hi, xi=xi).n_star

    @given(st.floats(0.5, 8.0), st.floats(0.1, 2.0), st.floats(0.1, 2.0))
    def test_monotone_in_effect(self, b, x1, x2):
        lo, hi = sorted((x1, x2))
        assert sample_size(b, xi=hi).n_star <= sample_size(b, xi=lo).n_star

    @given(st.floats(0.5, 8.0), st.floats(0.1, 2.0))
    def test_design_reaches_bound(self, b, xi):
        res = sample_size(b, xi=xi)
        assert res.log_odds_ratio_at_n >= b - 1e-9
        if res.n_star > 1:
            prev = OneSampleNormal.from_effect(xi, res.n_star - 1)
            a = prev.crossing_level()
            r = float(roc(prev, a))
            assert math.log(r / (1 - r)) - math.log(a / (1 - a)) < b + 1e-9
