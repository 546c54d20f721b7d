"""Sequential knowledge updating over a stream of independent studies.

Each study reports through one channel: the data (its total log likelihood
ratio), the decision ``d`` at its level, or its P-value ``p``.  The running
belief about the null is updated in log-odds and the loop stops once
``kappa0 < eps`` or ``kappa0 > 1 - eps``.

All studies of a run are simulated as one batch up front; the stopping index
is then found by the ``first_exit`` kernel, so a run costs one vectorised
simulation plus one pass over its log-odds path.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import expit

from . import _kernels
from .belief import Belief, expected_null_V, log_lambda_D, p_expectation
from .engine import Hypothesis
from .errors import DomainError
from .models import ModelFamily, OneSampleNormal, StudyBatch, TwoSampleFamily, TwoSampleT
from .output import csv_text, json_text

CHANNELS = ("x", "d", "p")
CHANNEL_POLICIES = (*CHANNELS, "round-robin", "random")

H0_DECLARED = "H0-declared"
H1_DECLARED = "H1-declared"
EXHAUSTED = "exhausted"


@dataclass(frozen=True)
class SequentialConfig:
    """Stopping threshold, prior, channel/level/sample-size policies and the study cap.

    ``alpha`` is a single level or a per-study schedule (the last entry is
    reused once the schedule runs out).  Sample sizes are fixed at ``n`` unless
    ``poisson_lambda`` is set, in which case ``n_m = Poisson(lambda) + 5``.
    """

    epsilon: float = 1e-4
    kappa0_init: float = 0.5
    channel: str = "p"
    channel_cycle: tuple = CHANNELS
    channel_weights: tuple = (1 / 3, 1 / 3, 1 / 3)
    alpha: float | tuple = 0.05
    n: int = 1
    poisson_lambda: float | None = None
    max_studies: int = 2000

    def __post_init__(self):
        if not (0.0 < self.epsilon < 0.5):
            raise DomainError("epsilon must lie in (0, 0.5)")
        if not (0.0 < self.kappa0_init < 1.0):
            raise DomainError("kappa0_init must lie strictly inside (0, 1)")
        if self.channel not in CHANNEL_POLICIES:
            raise DomainError(f"channel must be one of {CHANNEL_POLICIES}")
        if self.channel == "round-robin" and (not self.channel_cycle or any(c not in CHANNELS for c in self.channel_cycle)):
            raise DomainError("channel_cycle must be a nonempty sequence of 'x', 'd', 'p'")
        if self.channel == "random":
            w = np.asarray(self.channel_weights, dtype=float)
            if w.shape != (3,) or np.any(w < 0) or not w.sum() > 0:
                raise DomainError("channel_weights must be three nonnegative numbers, not all zero")
        levels = np.atleast_1d(np.asarray(self.alpha, dtype=float))
        if levels.size == 0 or np.any((levels <= 0.0) | (levels >= 1.0)):
            raise DomainError("every alpha must lie strictly inside (0, 1)")
        if self.poisson_lambda is None:
            if int(self.n) != self.n or self.n < 1:
                raise DomainError("n must be a positive integer")
        elif not (self.poisson_lambda > 0 and math.isfinite(self.poisson_lambda)):
            raise DomainError("poisson_lambda must be positive")
        if int(self.max_studies) != self.max_studies or self.max_studies < 0:
            raise DomainError("max_studies must be a nonnegative integer")

    @property
    def bound(self) -> float:
        """Log-odds threshold: ``kappa0 > 1 - eps`` iff log-odds exceeds it."""
        return math.log1p(-self.epsilon) - math.log(self.epsilon)

    def alphas(self, count: int) -> np.ndarray:
        levels = np.atleast_1d(np.asarray(self.alpha, dtype=float))
        idx = np.minimum(np.arange(count), levels.size - 1)
        return levels[idx]

    def sample_sizes(self, count: int, rng) -> np.ndarray:
        if self.poisson_lambda is None:
            return np.full(count, int(self.n), dtype=np.int64)
        return rng.poisson(self.poisson_lambda, count).astype(np.int64) + 5

    def channels(self, count: int, rng) -> np.ndarray:
        if self.channel in CHANNELS:
            return np.full(count, CHANNELS.index(self.channel), dtype=np.int8)
        if self.channel == "round-robin":
            cycle = np.array([CHANNELS.index(c) for c in self.channel_cycle], dtype=np.int8)
            return cycle[np.arange(count) % cycle.size]
        w = np.asarray(self.channel_weights, dtype=float)
        return rng.choice(np.arange(3, dtype=np.int8), size=count, p=w / w.sum())

    def smallest_n(self) -> int:
        return 5 if self.poisson_lambda is not None else int(self.n)

    def typical_n(self) -> int:
        return int(round(self.poisson_lambda)) + 5 if self.poisson_lambda is not None else int(self.n)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["alpha"] = list(self.alpha) if isinstance(self.alpha, (tuple, list)) else self.alpha
        out["channel_cycle"] = list(self.channel_cycle)
        out["channel_weights"] = list(self.channel_weights)
        return out


@dataclass
class Trajectory:
    """Per-study columns of a sequential run, its verdict and enough context to replay it."""

    columns: dict
    verdict: str
    kappa0_init: float
    epsilon: float
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return int(len(self.columns["m"]))

    @property
    def kappa0(self) -> np.ndarray:
        return self.columns["kappa0"]

    @property
    def final_log_odds(self) -> float:
        lo = self.columns["log_odds"]
        return float(lo[-1]) if len(lo) else float(Belief(self.kappa0_init).log_odds)

    @property
    def final_kappa0(self) -> float:
        return Belief(log_odds=self.final_log_odds).kappa0

    def rows(self):
        names = list(self.columns)
        for i in range(len(self)):
            yield [self.columns[k][i] for k in names]

    def to_csv(self) -> str:
        return csv_text(list(self.columns), self.rows())

    def summary(self) -> dict:
        return {
            "verdict": self.verdict,
            "studies": len(self),
            "kappa0_init": self.kappa0_init,
            "kappa0_final": self.final_kappa0,
            "log_odds_final": self.final_log_odds,
            "epsilon": self.epsilon,
            **self.meta,
        }

    def to_json(self) -> str:
        return json_text(self.summary())


def verdict_for(log_odds: float, bound: float) -> str | None:
    if log_odds > bound:
        return H0_DECLARED
    if log_odds < -bound:
        return H1_DECLARED
    return None


def channel_log_lr(batch: StudyBatch, channels: np.ndarray) -> np.ndarray:
    """Log likelihood ratio each study carries through its reporting channel."""
    with np.errstate(divide="ignore"):
        v_d = log_lambda_D(batch.d, batch.alpha, batch.rho) if len(batch) else np.empty(0)
    return np.select([channels == 0, channels == 1], [batch.log_lr, v_d], default=batch.log_rho_prime)


def _payload(batch: StudyBatch, channels: np.ndarray) -> np.ndarray:
    return np.select([channels == 0, channels == 1], [batch.log_lr, batch.d.astype(float)], default=batch.p)


def simulate_stream(cfg: SequentialConfig, truth, family: ModelFamily, rng):
    """All ``max_studies`` studies of one run, their channels and carried log LRs."""
    count = int(cfg.max_studies)
    ns = cfg.sample_sizes(count, rng.child(0))
    channels = cfg.channels(count, rng.child(1))
    for n in np.unique(ns):
        try:
            family.problem(int(n))
        except Exception as exc:
            first = int(np.flatnonzero(ns == n)[0]) + 1
            raise type(exc)(f"study {first}: model construction failed for n={int(n)}: {exc}") from exc
    batch = family.simulate(ns, truth, cfg.alphas(count), rng.child(2))
    return batch, channels, channel_log_lr(batch, channels)


def walk(start: float, log_lr: np.ndarray, bound: float):
    """Log-odds path ``start - cumsum(log_lr)`` and its stopping length (studies consumed)."""
    if verdict_for(start, bound) is not None or log_lr.size == 0:
        return np.empty(0), 0
    path, stop = _kernels.active().first_exit(-np.asarray(log_lr, dtype=float), start, bound)
    used = log_lr.size if stop < 0 else stop + 1
    return path[:used], used


def _trajectory(cfg, batch, channels, log_lr, path, used, truth, family, extra=None):
    names = np.array(CHANNELS)
    cols = {
        "m": np.arange(1, used + 1),
        "n": batch.n[:used],
        "alpha": batch.alpha[:used],
        "channel": names[channels[:used]],
        "payload": _payload(batch, channels)[:used],
        "log_lr": log_lr[:used],
        "log_odds": path,
        "kappa0": expit(path),
    }
    if extra:
        cols.update({k: v[:used] for k, v in extra.items()})
    start = Belief(cfg.kappa0_init).log_odds
    final = float(path[-1]) if used else start
    verdict = verdict_for(final, cfg.bound) or EXHAUSTED
    meta = {"truth": Hypothesis.coerce(truth).value, "family": getattr(family, "name", type(family).__name__)}
    return Trajectory(cols, verdict, cfg.kappa0_init, cfg.epsilon, meta)


def run_sequential(cfg: SequentialConfig, truth, family: ModelFamily, rng) -> Trajectory:
    """Simulate, report through the configured channel, update, stop at the first exit."""
    batch, channels, log_lr = simulate_stream(cfg, truth, family, rng)
    path, used = walk(Belief(cfg.kappa0_init).log_odds, log_lr, cfg.bound)
    return _trajectory(cfg, batch, channels, log_lr, path, used, truth, family)


# ---------------------------------------------------------------- replication


@dataclass
class ReplicationResult:
    """``M`` independent two-sample studies and the beliefs their d's and p's induce."""

    batch: StudyBatch
    kappa0_d: np.ndarray
    kappa0_p: np.ndarray
    hist_edges: np.ndarray
    hist_counts: np.ndarray
    truth: str

    @property
    def rejections(self) -> int:
        return int(self.batch.d.sum())

    def study_rows(self):
        b = self.batch
        for i in range(len(b)):
            yield [i + 1, b.n[i], b.statistic[i], b.d[i], b.p[i], self.kappa0_d[i], self.kappa0_p[i]]

    def hist_rows(self):
        for lo, hi, c in zip(self.hist_edges[:-1], self.hist_edges[1:], self.hist_counts):
            yield [lo, hi, c]


def run_replication_study(M: int, model, lam: float, alpha: float, truth, rng, kappa0_init: float = 0.5) -> ReplicationResult:
    """``M`` scientists each run a two-sample study with ``n_m = Poisson(lam) + 5``."""
    if int(M) != M or M < 1:
        raise DomainError("M must be a positive integer")
    if not (lam > 0 and math.isfinite(lam)):
        raise DomainError("lambda must be positive")
    if not (0.0 < alpha < 1.0):
        raise DomainError("alpha must lie strictly inside (0, 1)")
    family = TwoSampleFamily(model.mu0, model.mu1, model.sigma) if isinstance(model, TwoSampleT) else model
    ns = rng.child(0).poisson(lam, int(M)).astype(np.int64) + 5
    batch = family.simulate(ns, truth, np.full(int(M), float(alpha)), rng.child(1))
    start = Belief(kappa0_init).log_odds
    with np.errstate(divide="ignore"):
        v_d = log_lambda_D(batch.d, batch.alpha, batch.rho)
    kd = expit(start - np.cumsum(v_d))
    kp = expit(start - np.cumsum(batch.log_rho_prime))
    counts, edges = np.histogram(batch.p, bins=10, range=(0.0, 1.0))
    return ReplicationResult(batch, kd, kp, edges, counts, Hypothesis.coerce(truth).value)


# ---------------------------------------------------------------- diagnostics


@dataclass
class LemmaReport:
    """Numerical check of the sufficient conditions for convergence under the null."""

    alpha_interval: tuple
    n_smallest: int
    n_typical: int
    decision_sup_mean: float
    decision_series: float
    decision_holds: bool
    pvalue_limsup_mean: float
    pvalue_series: float
    pvalue_holds: bool
    margin: float

    @property
    def holds(self) -> bool:
        return self.decision_holds and self.pvalue_holds


def p_log_moments(problem):
    """Null mean and second moment of ``log rho'(P)``; closed form for the normal model."""
    if isinstance(problem, OneSampleNormal):
        d = problem.shift
        return -0.5 * d * d, d * d + 0.25 * d**4
    return p_expectation(problem), p_expectation(problem, lambda v: v * v)


def lemma_condition_check(cfg: SequentialConfig, family: ModelFamily, margin: float = 1e-4, grid: int = 201) -> LemmaReport:
    """Evaluate both sets of convergence conditions for the configured policies.

    Decision channel: the largest null mean of ``V`` over the level interval
    spanned by the configuration, computed with the ROC of the smallest sample
    size the policy can produce (larger samples only push it further down),
    plus the partial sum of the variance series.  P-value channel: the null
    mean of ``log rho'(P)`` at the smallest sample size and its series.
    A condition holds when its mean is at most ``-margin``.
    """
    levels = np.atleast_1d(np.asarray(cfg.alpha, dtype=float))
    lo, hi = float(levels.min()), float(levels.max())
    a_grid = np.unique(np.concatenate([np.linspace(lo, hi, grid), levels]))
    small = family.problem(cfg.smallest_n())
    typical = family.problem(cfg.typical_n())
    with np.errstate(divide="ignore", invalid="ignore"):
        sup_v = float(np.max(expected_null_V(a_grid, small.roc(a_grid))))
    count = max(int(cfg.max_studies), 1)
    m = np.arange(1, count + 1, dtype=float)
    a_m = cfg.alphas(count)
    rho_m = np.asarray(typical.roc(a_m), dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        odds = np.log(rho_m) - np.log(a_m) + np.log1p(-a_m) - np.log1p(-rho_m)
    series_d = float(np.sum(a_m * (1 - a_m) / m**2 * odds**2))
    mean_small, _ = p_log_moments(small)
    _, second = p_log_moments(typical)
    series_p = float(second * np.sum(1.0 / m**2))
    return LemmaReport(
        (lo, hi), cfg.smallest_n(), cfg.typical_n(),
        sup_v, series_d, bool(sup_v <= -margin and math.isfinite(series_d)),
        float(mean_small), series_p, bool(mean_small <= -margin and math.isfinite(series_p)),
        margin,
    )
