"""Concrete testing problems and the study simulators built on them.

Four problems ship with the package:

* ``OneSampleNormal``  one-sample mean, known sigma, statistic ``Z = sqrt(n)(xbar - mu0)/sigma``
* ``TwoSampleT``       pooled two-sample t, sigma unknown to the analyst
* ``TeaTastingBinomial`` eight independent cups, count of correct calls
* ``TeaTastingFisher``   four-of-eight design, count of correct milk-first cups

Each ``ModelFamily`` maps a per-group sample size to a problem and simulates
whole batches of studies at once (columnar ``StudyBatch``), which is what the
sequential and replication loops consume.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import _kernels
from .distributions import (
    TDistParams,
    binom_pmf,
    hypergeom4_pmf,
    nct_pdf,
    nct_sf,
    norm_isf,
    norm_pdf,
    norm_sf,
    t_isf,
    t_logpdf,
    t_pdf,
    t_sf,
    theta_tea_pmf,
)
from .engine import (
    ContinuousProblem,
    FiniteProblem,
    Hypothesis,
    _check_open_unit,
    p_functional,
    roc_with_limits,
)
from .errors import DomainError

# ---------------------------------------------------------------- normal


@dataclass(frozen=True)
class OneSampleNormal(ContinuousProblem):
    """``X_1..X_n ~ N(mu, sigma^2)``, testing ``mu0`` against ``mu1 >= mu0``."""

    mu0: float = 0.0
    mu1: float = 1.0
    sigma: float = 1.0
    n: int = 1

    def __post_init__(self):
        if not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise DomainError("sigma must be positive")
        if int(self.n) != self.n or self.n < 1:
            raise DomainError("n must be a positive integer")
        if not self.mu1 >= self.mu0:
            raise DomainError("only one-sided alternatives mu1 >= mu0 are supported")

    @classmethod
    def from_effect(cls, xi: float, n: int = 1) -> "OneSampleNormal":
        return cls(0.0, float(xi), 1.0, int(n))

    @property
    def xi(self) -> float:
        return (self.mu1 - self.mu0) / self.sigma

    @property
    def shift(self) -> float:
        """Mean of the statistic under the alternative, ``xi * sqrt(n)``."""
        return self.xi * math.sqrt(self.n)

    def null_tail(self, s):
        return norm_sf(s)

    def alt_tail(self, s):
        return norm_sf(np.asarray(s, dtype=float) - self.shift)

    def null_isf(self, a):
        return norm_isf(a)

    def null_pdf(self, s):
        return norm_pdf(s)

    def alt_pdf(self, s):
        return norm_pdf(np.asarray(s, dtype=float) - self.shift)

    def log_likelihood_ratio(self, s):
        # sum over the sample of log f1/f0 depends on the data only through Z
        d = self.shift
        if d == 0.0:
            return np.zeros_like(np.asarray(s, dtype=float)) if np.ndim(s) else 0.0
        return d * np.asarray(s, dtype=float) - 0.5 * d * d if np.ndim(s) else d * float(s) - 0.5 * d * d

    def sample_statistic(self, hypothesis, size, rng):
        z = rng.normal(size=size)
        return z + self.shift if Hypothesis.coerce(hypothesis) is Hypothesis.H1 else z

    def roc(self, alpha):
        d = self.shift
        if d == 0.0:
            return roc_with_limits(alpha, lambda a: a)
        return roc_with_limits(alpha, lambda a: norm_sf(norm_isf(a) - d))

    def roc_deriv(self, alpha):
        _check_open_unit(alpha)
        d = self.shift
        out = np.exp(d * (norm_isf(np.asarray(alpha, dtype=float)) - 0.5 * d))
        return out if np.ndim(out) else float(out)

    def log_roc_deriv(self, alpha):
        _check_open_unit(alpha)
        d = self.shift
        out = d * (norm_isf(np.asarray(alpha, dtype=float)) - 0.5 * d)
        return out if np.ndim(out) else float(out)

    def crossing_level(self) -> float:
        """The level where the ROC slope equals one, ``Phi(-xi sqrt(n) / 2)``."""
        return float(norm_sf(0.5 * self.shift))


def normal_roc(model: OneSampleNormal, alpha):
    """Closed-form power ``1 - Phi(z_{1-alpha} - xi sqrt(n))``."""
    _check_open_unit(alpha)
    return model.roc(alpha)


def normal_roc_deriv(model: OneSampleNormal, alpha):
    """Closed-form slope ``exp(xi sqrt(n) (z_{1-alpha} - xi sqrt(n)/2))``."""
    return model.roc_deriv(alpha)


# ---------------------------------------------------------------- two-sample t


@dataclass(frozen=True)
class TwoSampleT(ContinuousProblem):
    """Control ``X ~ N(mu0, sigma^2)`` and treatment ``Y`` with mean ``mu0`` or ``mu1``.

    The test only sees the pooled statistic; ``sigma`` is used for simulation
    and for the full-data likelihood ratio.
    """

    mu0: float = 0.0
    mu1: float = 2.0
    sigma: float = 5.0
    n: int = 10

    def __post_init__(self):
        if not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise DomainError("sigma must be positive")
        if int(self.n) != self.n or self.n < 2:
            raise DomainError("n must be an integer >= 2")
        if not self.mu1 >= self.mu0:
            raise DomainError("only one-sided alternatives mu1 >= mu0 are supported")

    @property
    def df(self) -> float:
        return 2.0 * (self.n - 1)

    @property
    def ncp(self) -> float:
        return (self.mu1 - self.mu0) / (self.sigma * math.sqrt(2.0 / self.n))

    @property
    def params(self) -> TDistParams:
        return TDistParams(self.df, self.ncp)

    def null_tail(self, s):
        return t_sf(s, self.df)

    def alt_tail(self, s):
        return nct_sf(s, self.params)

    def null_isf(self, a):
        return t_isf(a, self.df)

    def null_pdf(self, s):
        return t_pdf(s, self.df)

    def alt_pdf(self, s):
        return nct_pdf(s, self.params)

    def log_rho_prime_at(self, s):
        """``log rho'(p)`` for the P-value of statistic ``s``, evaluated on the t scale."""
        if self.ncp == 0.0:
            return np.zeros_like(np.asarray(s, dtype=float)) if np.ndim(s) else 0.0
        return np.log(nct_pdf(s, self.params)) - t_logpdf(s, self.df)

    def log_roc_deriv(self, alpha):
        _check_open_unit(alpha)
        if self.ncp == 0.0:
            return np.zeros_like(np.asarray(alpha, dtype=float)) if np.ndim(alpha) else 0.0
        return self.log_rho_prime_at(t_isf(alpha, self.df))

    def sample_statistic(self, hypothesis, size, rng):
        ns = np.full(int(size), self.n)
        return TwoSampleFamily(self.mu0, self.mu1, self.sigma).simulate(ns, hypothesis, np.full(ns.size, 0.5), rng).statistic

    def roc(self, alpha):
        if self.ncp == 0.0:
            return roc_with_limits(alpha, lambda a: a)
        return roc_with_limits(alpha, lambda a: nct_sf(t_isf(a, self.df), self.params))

    def roc_deriv(self, alpha):
        _check_open_unit(alpha)
        if self.ncp == 0.0:
            return np.ones_like(np.asarray(alpha, dtype=float)) if np.ndim(alpha) else 1.0
        q = t_isf(alpha, self.df)
        return nct_pdf(q, self.params) / t_pdf(q, self.df)


def twosample_roc(model: TwoSampleT, alpha):
    """Power ``1 - F_nct(t_{df; alpha}; df, ncp)`` of the one-sided pooled t test."""
    _check_open_unit(alpha)
    return model.roc(alpha)


def twosample_roc_deriv(model: TwoSampleT, alpha):
    """H1 density of the P-value: noncentral over central t density at the upper quantile."""
    return model.roc_deriv(alpha)


# ---------------------------------------------------------------- tea tasting


def _theta(value, exact):
    if exact:
        return Fraction(value).limit_denominator(10**12) if isinstance(value, float) else Fraction(value)
    return float(value)


@dataclass(frozen=True)
class TeaTastingBinomial(FiniteProblem):
    """Number of correct calls in eight cups, each right with probability ``theta``."""

    theta1: float = 0.8
    exact: bool = False
    n_cups: int = field(default=8, init=False)
    theta0: float = field(default=0.5, init=False)
    support: tuple = field(init=False, repr=False)
    null_pmf: tuple = field(init=False, repr=False)
    alt_pmf: tuple = field(init=False, repr=False)

    def __post_init__(self):
        if not (0.5 < self.theta1 <= 1.0):
            raise DomainError("theta1 must lie in (0.5, 1]")
        t0 = Fraction(1, 2) if self.exact else 0.5
        t1 = _theta(self.theta1, self.exact)
        object.__setattr__(self, "support", tuple(range(self.n_cups + 1)))
        object.__setattr__(self, "null_pmf", tuple(binom_pmf(s, self.n_cups, t0) for s in self.support))
        object.__setattr__(self, "alt_pmf", tuple(binom_pmf(s, self.n_cups, t1) for s in self.support))


@dataclass(frozen=True)
class TeaTastingFisher(FiniteProblem):
    """Milk-first cups identified among four, hypergeometric under the null."""

    theta1: float = 0.8
    exact: bool = False
    support: tuple = field(init=False, repr=False)
    null_pmf: tuple = field(init=False, repr=False)
    alt_pmf: tuple = field(init=False, repr=False)

    def __post_init__(self):
        if not (0.5 < self.theta1 <= 1.0):
            raise DomainError("theta1 must lie in (0.5, 1]")
        t1 = _theta(self.theta1, self.exact)
        null = tuple(hypergeom4_pmf(t) for t in range(5))
        if not self.exact:
            null = tuple(float(p) for p in null)
        object.__setattr__(self, "support", tuple(range(5)))
        object.__setattr__(self, "null_pmf", null)
        object.__setattr__(self, "alt_pmf", tuple(theta_tea_pmf(t, t1) for t in range(5)))


# ---------------------------------------------------------------- studies


@dataclass(frozen=True)
class StudyRecord:
    """One study: sample size, level used, statistic, randomizer and what it reports."""

    n: int
    alpha: float
    statistic: float
    u: float
    d: int
    p: float
    log_lr: float
    log_rho_prime: float
    rho: float

    def payload(self, channel: str) -> float:
        if channel == "x":
            return self.log_lr
        if channel == "d":
            return float(self.d)
        if channel == "p":
            return self.p
        raise DomainError(f"unknown channel {channel!r}")


@dataclass
class StudyBatch:
    """Columnar results for a batch of independent studies."""

    n: np.ndarray
    alpha: np.ndarray
    statistic: np.ndarray
    u: np.ndarray
    p: np.ndarray
    d: np.ndarray
    log_lr: np.ndarray
    log_rho_prime: np.ndarray
    rho: np.ndarray

    def __len__(self):
        return int(self.n.size)

    def record(self, i: int) -> StudyRecord:
        return StudyRecord(
            int(self.n[i]), float(self.alpha[i]), float(self.statistic[i]), float(self.u[i]),
            int(self.d[i]), float(self.p[i]), float(self.log_lr[i]), float(self.log_rho_prime[i]), float(self.rho[i]),
        )

    def records(self):
        return [self.record(i) for i in range(len(self))]


def _empty_batch():
    z = np.empty(0)
    return StudyBatch(np.empty(0, dtype=np.int64), z, z, z, z, np.empty(0, dtype=np.int8), z, z, z)


def _problem_log_rho_prime(problem, s):
    if hasattr(problem, "log_rho_prime_at"):
        return problem.log_rho_prime_at(s)
    if problem.discrete:
        return problem.log_likelihood_ratio(s)
    with np.errstate(divide="ignore"):
        return np.log(problem.alt_pdf(s)) - np.log(problem.null_pdf(s))


class ModelFamily:
    """Maps a per-group sample size to a problem; simulates batches of studies."""

    name = "family"

    def problem(self, n: int):
        raise NotImplementedError

    def __call__(self, n: int):
        return self.problem(n)

    def simulate(self, ns, truth, alphas, rng) -> StudyBatch:
        """Generic path: group by sample size and draw statistics from each problem."""
        ns = np.asarray(ns, dtype=np.int64)
        alphas = np.broadcast_to(np.asarray(alphas, dtype=float), ns.shape).copy()
        _check_open_unit(alphas)
        if ns.size == 0:
            return _empty_batch()
        out = {k: np.empty(ns.size) for k in ("statistic", "u", "p", "log_lr", "log_rho_prime", "rho")}
        for n in np.unique(ns):
            idx = np.flatnonzero(ns == n)
            prob = self.problem(int(n))
            s = np.asarray(prob.sample_statistic(truth, idx.size, rng), dtype=float)
            u = rng.uniform(size=idx.size)
            out["statistic"][idx] = s
            out["u"][idx] = u
            out["p"][idx] = p_functional(prob, s, u) if prob.discrete else prob.null_tail(s)
            with np.errstate(divide="ignore"):
                out["log_lr"][idx] = prob.log_likelihood_ratio(s)
                out["log_rho_prime"][idx] = _problem_log_rho_prime(prob, s)
            out["rho"][idx] = prob.roc(alphas[idx])
        d = (out["p"] <= alphas).astype(np.int8)
        return StudyBatch(ns, alphas, out["statistic"], out["u"], out["p"], d, out["log_lr"], out["log_rho_prime"], out["rho"])


@dataclass(frozen=True)
class NormalFamily(ModelFamily):
    """One-sample normal problems sharing the standardized effect ``xi``."""

    xi: float
    name = "normal"

    def problem(self, n: int) -> OneSampleNormal:
        return OneSampleNormal.from_effect(self.xi, n)

    def simulate(self, ns, truth, alphas, rng) -> StudyBatch:
        ns = np.asarray(ns, dtype=np.int64)
        alphas = np.broadcast_to(np.asarray(alphas, dtype=float), ns.shape).copy()
        _check_open_unit(alphas)
        if ns.size == 0:
            return _empty_batch()
        if np.any(ns < 1):
            raise DomainError("sample sizes must be >= 1")
        shift = self.xi * np.sqrt(ns)
        z = rng.normal(size=ns.size)
        if Hypothesis.coerce(truth) is Hypothesis.H1:
            z = z + shift
        p = norm_sf(z)
        log_lr = shift * z - 0.5 * shift * shift
        rho = norm_sf(norm_isf(alphas) - shift)
        d = (p <= alphas).astype(np.int8)
        return StudyBatch(ns, alphas, z, np.zeros(ns.size), p, d, log_lr, log_lr.copy(), rho)


@dataclass(frozen=True)
class TwoSampleFamily(ModelFamily):
    """Pooled two-sample t problems with fixed means and sigma, variable group size."""

    mu0: float = 0.0
    mu1: float = 2.0
    sigma: float = 5.0
    name = "twosample"

    def problem(self, n: int) -> TwoSampleT:
        return TwoSampleT(self.mu0, self.mu1, self.sigma, int(n))

    def simulate(self, ns, truth, alphas, rng) -> StudyBatch:
        """Draw raw samples for every study (ragged rows padded to the largest ``n``)."""
        ns = np.asarray(ns, dtype=np.int64)
        alphas = np.broadcast_to(np.asarray(alphas, dtype=float), ns.shape).copy()
        _check_open_unit(alphas)
        if ns.size == 0:
            return _empty_batch()
        if np.any(ns < 2):
            raise DomainError("group sizes must be >= 2")
        width = int(ns.max())
        mean_y = self.mu1 if Hypothesis.coerce(truth) is Hypothesis.H1 else self.mu0
        x = rng.normal(self.mu0, self.sigma, size=(ns.size, width))
        y = rng.normal(mean_y, self.sigma, size=(ns.size, width))
        t = _kernels.active().pooled_t_rows(x, y, ns)
        df = 2.0 * (ns - 1)
        p = t_sf(t, df)
        d = (p <= alphas).astype(np.int8)
        # full-data log likelihood ratio of the treatment sample (control cancels)
        delta = self.mu1 - self.mu0
        mask = np.arange(width)[None, :] < ns[:, None]
        ysum = np.where(mask, y - self.mu0, 0.0).sum(axis=1)
        log_lr = delta * ysum / self.sigma**2 - ns * delta * delta / (2.0 * self.sigma**2)
        rho = np.empty(ns.size)
        log_rp = np.empty(ns.size)
        for n in np.unique(ns):
            idx = np.flatnonzero(ns == n)
            prob = self.problem(int(n))
            rho[idx] = prob.roc(alphas[idx])
            log_rp[idx] = prob.log_rho_prime_at(t[idx])
        return StudyBatch(ns, alphas, t, np.zeros(ns.size), p, d, log_lr, log_rp, rho)


@dataclass(frozen=True)
class TeaBinomialFamily(ModelFamily):
    theta1: float = 0.8
    name = "tea-binomial"

    def problem(self, n: int = 8) -> TeaTastingBinomial:
        return TeaTastingBinomial(self.theta1)


@dataclass(frozen=True)
class TeaFisherFamily(ModelFamily):
    theta1: float = 0.8
    name = "tea-fisher"

    def problem(self, n: int = 4) -> TeaTastingFisher:
        return TeaTastingFisher(self.theta1)


def simulate_twosample_study(model: TwoSampleT, truth, alpha, rng) -> StudyRecord:
    """Draw both samples, form the pooled t statistic, its decision and P-value."""
    _check_open_unit(alpha)
    fam = TwoSampleFamily(model.mu0, model.mu1, model.sigma)
    return fam.simulate(np.array([model.n]), truth, np.array([alpha]), rng).record(0)
