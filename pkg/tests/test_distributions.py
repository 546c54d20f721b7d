import math
from fractions import Fraction

import numpy as np
import pytest
from scipy import integrate, stats

from nptruth.distributions import (TDistParams, binom_pmf, hypergeom4_pmf, nct_cdf, nct_pdf, nct_sf, norm_cdf,
                                   norm_pdf, norm_quantile, poisson_sample, t_cdf, t_pdf, t_quantile, theta_tea_pmf)
from nptruth.errors import DomainError
from nptruth.rng import RngStream

# high-precision references (40-digit mpmath evaluations)
T_Q95_DF8 = 1.859548037530898390
NCT_CDF_15_8_15811 = 0.45179775131056084


class TestNormal:
    def test_symmetry(self):
        assert norm_cdf(0.0) == 0.5

    @pytest.mark.parametrize("z, expected", [(-0.25, 0.401294), (-1.0, 0.158655)])
    def test_tabled_levels(self, z, expected):
        assert norm_cdf(z) == pytest.approx(expected, abs=5e-7)

    def test_quantile_inverts_cdf(self):
        p = np.linspace(1e-6, 1 - 1e-6, 501)
        assert np.max(np.abs(norm_cdf(norm_quantile(p)) - p)) < 1e-10

    @pytest.mark.parametrize("p", [0.0, 1.0, -0.1, 1.5])
    def test_quantile_rejects_endpoints(self, p):
        with pytest.raises(DomainError):
            norm_quantile(p)

    def test_pdf_matches_scipy(self):
        z = np.linspace(-8, 8, 101)
        np.testing.assert_allclose(norm_pdf(z), stats.norm.pdf(z), rtol=1e-14)


class TestStudentT:
    @pytest.mark.parametrize("df", [1, 2.5, 8, 30, 1e4])
    def test_cdf_at_zero(self, df):
        assert t_cdf(0.0, df) == pytest.approx(0.5, abs=1e-15)

    def test_quantile_reference(self):
        assert t_quantile(0.95, 8) == pytest.approx(T_Q95_DF8, abs=1e-9)

    def test_quantile_against_quadrature_of_pdf(self):
        q = t_quantile(0.95, 8)
        mass, _ = integrate.quad(lambda x: t_pdf(x, 8), -np.inf, q, epsabs=1e-13)
        assert mass == pytest.approx(0.95, abs=1e-10)

    def test_large_df_limit(self):
        assert abs(t_cdf(1.0, 1e6) - norm_cdf(1.0)) < 1e-4

    @pytest.mark.parametrize("df", [2, 8, 18])
    def test_quantile_inverts_cdf(self, df):
        p = np.linspace(1e-4, 1 - 1e-4, 101)
        q = np.array([t_quantile(x, df) for x in p])
        assert np.max(np.abs(t_cdf(q, df) - p)) < 1e-10

    @pytest.mark.parametrize("df", [0, -1, math.inf, math.nan])
    def test_bad_df(self, df):
        with pytest.raises(DomainError):
            t_cdf(0.3, df)


class TestNoncentralT:
    def test_zero_ncp_reduces_to_central(self):
        x = np.linspace(-6, 6, 61)
        np.testing.assert_allclose(nct_cdf(x, TDistParams(8, 0.0)), t_cdf(x, 8), atol=1e-10)

    def test_upper_limit(self):
        assert nct_cdf(1e6, TDistParams(4, 3.0)) == pytest.approx(1.0, abs=1e-12)

    def test_reference_value(self):
        assert nct_cdf(1.5, TDistParams(8, 1.5811)) == pytest.approx(NCT_CDF_15_8_15811, abs=1e-9)

    def test_monte_carlo_oracle(self):
        g = RngStream(7).generator
        k, w, reps = 8, 1.5811, 10_000_000
        draws = (g.standard_normal(reps) + w) / np.sqrt(g.chisquare(k, reps) / k)
        hat = np.mean(draws <= 1.5)
        se = math.sqrt(hat * (1 - hat) / reps)
        assert abs(nct_cdf(1.5, TDistParams(k, w)) - hat) < 3 * se

    @pytest.mark.parametrize("df, ncp", [(2, 0.5), (8, 1.5811), (18, 2.5), (40, -1.0)])
    def test_against_scipy(self, df, ncp):
        x = np.linspace(-5, 10, 31)
        np.testing.assert_allclose(nct_cdf(x, TDistParams(df, ncp)), stats.nct.cdf(x, df, ncp), atol=1e-10)
        np.testing.assert_allclose(nct_pdf(x, TDistParams(df, ncp)), stats.nct.pdf(x, df, ncp), atol=1e-10)

    @pytest.mark.parametrize("df, ncp", [(4, 1.0), (8, 1.5811), (18, 3.5)])
    def test_pdf_is_derivative_of_cdf(self, df, ncp):
        p = TDistParams(df, ncp)
        x = np.linspace(-3, 8, 23)
        h = 1e-5
        fd = (nct_cdf(x + h, p) - nct_cdf(x - h, p)) / (2 * h)
        assert np.max(np.abs(fd - nct_pdf(x, p))) < 1e-6

    def test_sf_complements_cdf(self):
        p = TDistParams(8, 2.0)
        x = np.linspace(-4, 9, 27)
        np.testing.assert_allclose(nct_cdf(x, p) + nct_sf(x, p), 1.0, atol=1e-14)

    @pytest.mark.parametrize("ncp", [math.inf, math.nan])
    def test_nonfinite_ncp(self, ncp):
        with pytest.raises(DomainError):
            TDistParams(8, ncp)


class TestCounts:
    def test_hypergeometric_top(self):
        assert hypergeom4_pmf(4) == Fraction(1, 70)

    def test_theta_half_is_hypergeometric(self):
        for t in range(5):
            assert theta_tea_pmf(t, Fraction(1, 2)) == hypergeom4_pmf(t)

    def test_binomial_top(self):
        assert binom_pmf(8, 8, Fraction(1, 2)) == Fraction(1, 256)

    @pytest.mark.parametrize("theta", [0.5, 0.63, 0.9])
    def test_pmfs_sum_to_one(self, theta):
        assert sum(binom_pmf(s, 8, theta) for s in range(9)) == pytest.approx(1.0, abs=1e-12)
        assert sum(theta_tea_pmf(t, theta) for t in range(5)) == pytest.approx(1.0, abs=1e-12)
        assert sum(hypergeom4_pmf(t) for t in range(5)) == 1

    @pytest.mark.parametrize("fn, count", [(lambda c: binom_pmf(c, 8, 0.5), 9), (hypergeom4_pmf, 5),
                                           (lambda c: theta_tea_pmf(c, 0.7), -1)])
    def test_out_of_support(self, fn, count):
        with pytest.raises(DomainError):
            fn(count)


class TestPoisson:
    def test_near_degenerate(self):
        draws = poisson_sample(0.001, RngStream(1), size=100_000)
        assert np.mean(draws == 0) == pytest.approx(math.exp(-0.001), abs=4 * math.sqrt(0.001 / 100_000))

    def test_moments(self):
        draws = poisson_sample(10.0, RngStream(2), size=100_000)
        assert abs(draws.mean() - 10.0) < 0.04
        assert draws.var(ddof=1) == pytest.approx(10.0, rel=0.03)

    @pytest.mark.parametrize("lam", [0.0, -2.0, math.inf])
    def test_bad_rate(self, lam):
        with pytest.raises(DomainError):
            poisson_sample(lam, RngStream(0))
