import math

import numpy as np
import pytest
from scipy import stats

from nptruth.belief import expected_null_V
from nptruth.errors import DomainError
from nptruth.models import NormalFamily, OneSampleNormal, TwoSampleFamily, TwoSampleT
from nptruth.rng import RngStream
from nptruth.sequential import (EXHAUSTED, H0_DECLARED, H1_DECLARED, SequentialConfig, lemma_condition_check,
                                run_replication_study, run_sequential)


class TestRunSequential:
    def test_threshold_already_crossed(self):
        cfg = SequentialConfig(epsilon=0.4999, kappa0_init=0.9999)
        t = run_sequential(cfg, "H1", NormalFamily(1.0), RngStream(0))
        assert t.verdict == H0_DECLARED and len(t) == 0

    def test_no_studies(self):
        cfg = SequentialConfig(kappa0_init=0.3, max_studies=0)
        t = run_sequential(cfg, "H0", NormalFamily(1.0), RngStream(0))
        assert t.verdict == EXHAUSTED
        assert t.final_kappa0 == pytest.approx(0.3, rel=1e-15)

    @pytest.mark.parametrize("truth, verdict", [("H0", H0_DECLARED), ("H1", H1_DECLARED)])
    def test_two_sample_convergence(self, truth, verdict):
        cfg = SequentialConfig(epsilon=1e-4, channel="p", alpha=0.05, poisson_lambda=10.0, max_studies=2000)
        fam = TwoSampleFamily(0.0, 2.0, 5.0)
        hits = sum(run_sequential(cfg, truth, fam, RngStream(100, k)).verdict == verdict for k in range(200))
        assert hits >= 190

    def test_log_odds_bookkeeping(self):
        cfg = SequentialConfig(epsilon=1e-300, channel="random", alpha=0.05, n=1, max_studies=10_000)
        t = run_sequential(cfg, "H0", NormalFamily(0.05), RngStream(3))
        assert len(t) == 10_000
        start = math.log(0.5 / 0.5)
        assert t.final_log_odds == pytest.approx(start - math.fsum(t.columns["log_lr"]), abs=1e-9)

    def test_decision_channel_drift(self):
        cfg = SequentialConfig(epsilon=1e-300, channel="d", alpha=0.05, n=1, max_studies=10_000)
        t = run_sequential(cfg, "H0", NormalFamily(0.3), RngStream(4))
        v = t.columns["log_lr"]  # log Lambda_D of each study
        target = expected_null_V(0.05, OneSampleNormal.from_effect(0.3, 1).roc(0.05))
        assert target < 0
        se = v.std(ddof=1) / math.sqrt(v.size)
        assert abs(v.mean() - target) < 4 * se

    def test_reproducible(self):
        cfg = SequentialConfig(channel="round-robin", poisson_lambda=10.0, max_studies=300)
        fam = TwoSampleFamily(0.0, 2.0, 5.0)
        a = run_sequential(cfg, "H1", fam, RngStream(9, 1))
        b = run_sequential(cfg, "H1", fam, RngStream(9, 1))
        assert a.to_csv() == b.to_csv()

    def test_round_robin_cycle(self):
        cfg = SequentialConfig(epsilon=1e-300, channel="round-robin", channel_cycle=("d", "p"), max_studies=6)
        t = run_sequential(cfg, "H0", NormalFamily(0.2), RngStream(1))
        assert list(t.columns["channel"]) == ["d", "p", "d", "p", "d", "p"]

    def test_alpha_schedule_reuses_last(self):
        cfg = SequentialConfig(epsilon=1e-300, channel="d", alpha=(0.1, 0.05, 0.01), max_studies=5)
        t = run_sequential(cfg, "H0", NormalFamily(0.2), RngStream(1))
        np.testing.assert_allclose(t.columns["alpha"], [0.1, 0.05, 0.01, 0.01, 0.01])

    def test_factory_failure_names_study(self):
        cfg = SequentialConfig(n=1, max_studies=3)
        with pytest.raises(DomainError, match="study 1"):
            run_sequential(cfg, "H0", TwoSampleFamily(0.0, 2.0, 5.0), RngStream(0))

    @pytest.mark.parametrize("kwargs", [{"epsilon": 0.5}, {"kappa0_init": 1.0}, {"channel": "z"},
                                        {"alpha": (0.05, 1.0)}, {"max_studies": -1}, {"n": 0}])
    def test_config_validation(self, kwargs):
        with pytest.raises(DomainError):
            SequentialConfig(**kwargs)


class TestReplication:
    def test_null(self):
        res = run_replication_study(100, TwoSampleT(0, 2, 5), 10.0, 0.05, "H0", RngStream(1))
        lo, hi = stats.binom.ppf([0.005, 0.995], 100, 0.05)
        assert lo <= res.rejections <= hi
        assert stats.kstest(res.batch.p, "uniform").pvalue > 0.001
        assert res.hist_counts.sum() == 100 and res.hist_edges[0] == 0.0 and res.hist_edges[-1] == 1.0

    def test_alternative(self):
        res = run_replication_study(100, TwoSampleT(0, 2, 5), 10.0, 0.05, "H1", RngStream(1))
        assert res.rejections > stats.binom.ppf(0.99, 100, 0.05)
        assert res.hist_counts[0] > res.hist_counts[-1]
        assert res.kappa0_p[-1] < 1e-6

    def test_sample_sizes_are_shifted_poisson(self):
        res = run_replication_study(2000, TwoSampleT(0, 2, 5), 10.0, 0.05, "H0", RngStream(2))
        assert res.batch.n.min() >= 5
        assert res.batch.n.mean() == pytest.approx(15.0, abs=4 * math.sqrt(10 / 2000))


class TestConvergenceConditions:
    def test_normal_holds(self):
        rep = lemma_condition_check(SequentialConfig(alpha=0.05, n=1), NormalFamily(0.4))
        assert rep.holds
        assert rep.pvalue_limsup_mean == pytest.approx(-0.08, abs=1e-12)

    def test_zero_effect_fails(self):
        rep = lemma_condition_check(SequentialConfig(alpha=0.05, n=1), NormalFamily(0.0))
        assert rep.pvalue_limsup_mean == 0.0
        assert not rep.pvalue_holds and not rep.holds

    def test_level_tending_to_one_fails(self):
        schedule = tuple(1 - 0.5 ** k for k in range(1, 40))
        rep = lemma_condition_check(SequentialConfig(alpha=schedule, n=1), NormalFamily(0.4))
        assert not rep.decision_holds
