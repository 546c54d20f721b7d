import math

import numpy as np
import pytest
from scipy import integrate, optimize, special, stats

from nptruth.belief import (LOGIT_05, Belief, Decision, LogLikelihoodRatio, PValue, RawLikelihoodRatio, contour_grid,
                            expected_null_V, l_D_profile, l_P_profile, lambda_D, log_lambda_D, p_expectation, update)
from nptruth.errors import DomainError
from nptruth.models import OneSampleNormal, TeaTastingBinomial, TeaTastingFisher, TwoSampleT
from nptruth.output import csv_text


class TestUpdate:
    def test_uninformative(self):
        assert update(Belief(0.5), RawLikelihoodRatio(1.0)).kappa0 == 0.5

    def test_rejection_at_ten(self):
        post = update(Belief(0.5), Decision(1, 0.05, 0.5))
        assert post.kappa0 == pytest.approx(1 / 11, rel=1e-14)

    def test_impossible_under_alternative(self):
        assert update(Belief(0.5), PValue(0.3, 0.0)).kappa0 == 1.0

    def test_log_channel(self):
        post = update(Belief(0.2), LogLikelihoodRatio(math.log(3.0)))
        assert post.kappa1 / post.kappa0 == pytest.approx(4.0 * 3.0, rel=1e-13)

    def test_two_updates_multiply(self):
        b = update(update(Belief(0.3), RawLikelihoodRatio(2.5)), Decision(0, 0.05, 0.6))
        odds = (0.7 / 0.3) * 2.5 * (0.4 / 0.95)
        assert b.kappa1 / b.kappa0 == pytest.approx(odds, rel=1e-13)

    def test_log_odds_survive_many_updates(self):
        b = Belief(0.5)
        for _ in range(5000):
            b = update(b, RawLikelihoodRatio(1.5))
        assert b.log_odds == pytest.approx(-5000 * math.log(1.5), rel=1e-12)
        assert b.kappa0 == 0.0 or b.kappa0 < 1e-300

    @pytest.mark.parametrize("lr", [-1.0, math.inf, math.nan])
    def test_bad_likelihood_ratio(self, lr):
        with pytest.raises(DomainError):
            update(Belief(0.5), RawLikelihoodRatio(lr))

    @pytest.mark.parametrize("k", [0.0, 1.0, -0.1])
    def test_prior_range(self, k):
        with pytest.raises(DomainError):
            Belief(k)


class TestLambdaD:
    def test_reject(self):
        assert lambda_D(1, 0.05, 0.5) == pytest.approx(10.0, rel=1e-14)

    @pytest.mark.parametrize("d", [0, 1])
    def test_powerless(self, d):
        assert lambda_D(d, 0.2, 0.2) == pytest.approx(1.0, abs=1e-15)

    def test_design_point(self):
        assert lambda_D(0, 0.05, 0.9526) == pytest.approx((1 - 0.9526) / 0.95, rel=1e-13)
        assert lambda_D(0, 0.05, 0.9526) == pytest.approx(0.0499, abs=5e-5)

    def test_certain_power_accept(self):
        assert lambda_D(0, 0.05, 1.0) == 0.0
        assert log_lambda_D(0, 0.05, 1.0) == -math.inf

    def test_null_mean_is_one(self):
        a = np.linspace(0.01, 0.99, 50)[:, None]
        r = np.linspace(0.0, 1.0, 51)[None, :]
        mean = a * lambda_D(1, a, r) + (1 - a) * lambda_D(0, a, r)
        np.testing.assert_allclose(mean, 1.0, atol=1e-14)

    def test_null_log_mean_negative(self):
        a = np.linspace(0.01, 0.95, 40)
        for shift in (0.1, 1.0, 3.0):
            r = OneSampleNormal(0, shift, 1, 1).roc(a)
            assert np.all(expected_null_V(a, r) < 0)


class TestPExpectation:
    @pytest.mark.parametrize("model", [OneSampleNormal.from_effect(1, 1), OneSampleNormal.from_effect(0.4, 7),
                                       TwoSampleT(0, 2, 5, 10), TwoSampleT(0, 5, 5, 5)])
    def test_alternative_density_normalised(self, model):
        assert p_expectation(model, np.exp) == pytest.approx(1.0, abs=1e-8)
        direct, _ = integrate.quad(lambda a: model.roc_deriv(a), 0, 1, points=[1e-6, 1e-3, 0.5], limit=400)
        assert direct == pytest.approx(1.0, abs=1e-8)

    def test_normal_log_moments(self):
        m = OneSampleNormal.from_effect(1, 1)
        assert p_expectation(m) == pytest.approx(-0.5, abs=1e-10)
        assert p_expectation(m, lambda v: v * v) == pytest.approx(1.25, abs=1e-10)

    def test_discrete_is_kl(self):
        m = TeaTastingBinomial(0.8)
        kl = sum(p * math.log(p / q) for p, q in zip(m.null_pmf, m.alt_pmf))
        assert p_expectation(m) == pytest.approx(-kl, abs=1e-14)


class TestProfiles:
    def test_zero_effect_is_flat(self):
        assert l_D_profile("normal", 1, 0.05, [0.0]).values[0, 0] == 0.0
        assert l_P_profile("normal", 0.2, [0.0]).values[0, 0] == 0.0

    def test_tasting_decision_profile(self):
        prof = l_D_profile("tea-binomial", 0, 0.05)
        v = prof.values[:, 0]
        assert prof.effect_name == "theta1"
        assert np.all(v < 0)
        assert v[-1] < v[20] < v[0]
        assert v[-1] - v[-11] < v[20] - v[10]  # steeper near theta1 = 1

    def test_tasting_p_profile_sign(self):
        # s = 6 with u = .973 at the worked example: slightly positive, negative once theta1 > .9
        p = 9 / 256 + 0.973 * 28 / 256
        prof = l_P_profile("tea-binomial", p, [0.6, 0.7, 0.8, 0.95])
        v = prof.values[:, 0]
        assert np.all(v[:3] > 0) and v[3] < 0

    def test_two_sample_p_profile_shape(self):
        n, p = 20, 0.04
        xi = np.linspace(0.1, 3.0, 59)
        v = l_P_profile("twosample", p, xi, n=n).values[:, 0]
        peak = int(np.argmax(v))
        assert 0 < peak < len(xi) - 1
        assert v[-1] < 0

        def oracle(x):
            df, ncp = 2 * (n - 1), x / math.sqrt(2 / n)
            q = stats.t.isf(p, df)
            return stats.nct.logpdf(q, df, ncp) - stats.t.logpdf(q, df)

        root = optimize.brentq(oracle, xi[peak], 3.0, xtol=1e-12)
        k = np.searchsorted(-v[peak:], 0) + peak  # first grid point past the sign change
        assert xi[k - 1] <= root <= xi[k]
        assert l_P_profile("twosample", p, [root], n=n).values[0, 0] == pytest.approx(0.0, abs=1e-6)

    def test_certain_power_gives_minus_inf(self):
        prof = l_D_profile("tea-binomial", 0, 0.05, [1.0])
        assert prof.values[0, 0] == -math.inf
        assert "-inf" in csv_text(["theta1", "logit", "alpha", "l_D"], prof.rows())

    def test_bad_level(self):
        with pytest.raises(DomainError):
            l_D_profile("normal", 1, 1.0)
        with pytest.raises(DomainError):
            l_P_profile("normal", 0.0)


class TestContour:
    def test_zero_column(self):
        g = contour_grid("normal", 4, (0.0, 2.0), (-6, -0.5), 9, d=1)
        np.testing.assert_array_equal(g.values[0], 0.0)
        gp = contour_grid("normal", 4, (0.0, 2.0), (-6, -0.5), 9)
        np.testing.assert_array_equal(gp.values[0], 0.0)

    def test_reference_level_inserted(self):
        g = contour_grid("normal", 1, (0.1, 1.0), (-7, 0), 8, d=1)
        assert np.any(g.logit == LOGIT_05)
        assert g.values.shape == (8, 9)

    def test_larger_sample_more_evidence(self):
        a = contour_grid("twosample", 10, (0.2, 2.0), (-6, -1), 10, d=1).values
        b = contour_grid("twosample", 20, (0.2, 2.0), (-6, -1), 10, d=1).values
        assert np.all(np.abs(b) > np.abs(a))

    def test_matches_scalar_decision_ratio(self):
        g = contour_grid("twosample", 10, (1.4142, 2.0), (-7, 0), 5, d=1)
        j = int(np.flatnonzero(g.logit == LOGIT_05)[0])
        rho = TwoSampleT(0, 1.4142, 1, 10).roc(0.05)
        assert g.values[0, j] == pytest.approx(math.log(rho / 0.05), rel=1e-12)
        assert special.expit(g.logit[j]) == pytest.approx(0.05, rel=1e-14)

    def test_empty_range(self):
        with pytest.raises(DomainError):
            contour_grid("normal", 1, (1.0, 1.0), (-3, 0), 5)
        with pytest.raises(DomainError):
            contour_grid("normal", 1, (0.0, 1.0), (0, -3), 5)
