"""Brute-force and Monte Carlo oracles for the test suite.

Nothing here calls the production rule or ROC builders.  Finite models get
their probability tables recomputed from scratch in rational arithmetic,
continuous models get their ROC from ``scipy.stats``, and raw data is
simulated directly with numpy.  The production code under test enters only
as the object being checked (the rule power, or the P-functional applied to
oracle-simulated statistics).
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy import optimize, stats

from .engine import Hypothesis, build_rule, p_functional
from .errors import DomainError
from .models import OneSampleNormal, TeaTastingBinomial, TeaTastingFisher, TwoSampleT

MAX_SUPPORT = 20
MC_SE_MULT = 4.0


@dataclass(frozen=True)
class OracleReport:
    target: str
    method: str
    estimate: float
    uncertainty: float  # MC standard error; 0.0 for exact oracles
    exact: bool
    passed: bool
    details: dict = field(default_factory=dict)


# ---------------------------------------------------------------- finite tables


def _frac(x) -> Fraction:
    if isinstance(x, float):
        return Fraction(x).limit_denominator(10**12)
    return Fraction(x)


def binomial_tables(theta1, cups: int = 8):
    half = Fraction(1, 2)
    th = _frac(theta1)
    null = [math.comb(cups, s) * half**cups for s in range(cups + 1)]
    alt = [math.comb(cups, s) * th**s * (1 - th) ** (cups - s) for s in range(cups + 1)]
    return list(range(cups + 1)), null, alt


def fisher_tables(theta1):
    def law(th):
        w = [math.comb(4, t) ** 2 * th**t * (1 - th) ** (8 - t) for t in range(5)]
        z = sum(w)
        return [x / z for x in w]

    return list(range(5)), law(Fraction(1, 2)), law(_frac(theta1))


def _tables_for(problem, theta1):
    if isinstance(problem, TeaTastingBinomial):
        return binomial_tables(theta1, problem.n_cups)
    if isinstance(problem, TeaTastingFisher):
        return fisher_tables(theta1)
    support = list(problem.support)
    return support, [_frac(x) for x in problem.null_pmf], [_frac(x) for x in problem.alt_pmf]


def _threshold_rules(null, alt, alpha):
    """Every size-``alpha`` rule 'reject above k, randomise at k' over all k."""
    out = []
    for k in range(len(null)):
        tail0 = sum(null[k + 1:], Fraction(0))
        if null[k] == 0:
            continue
        gamma = (alpha - tail0) / null[k]
        if 0 <= gamma <= 1:
            out.append((k, gamma, sum(alt[k + 1:], Fraction(0)) + gamma * alt[k]))
    return out


def _lp_vertices(null, alt, alpha):
    """Best power over the vertices of {0 <= phi <= 1, sum phi p0 <= alpha}.

    A vertex has at most one coordinate strictly inside (0, 1), so it is a
    subset at full rejection plus at most one partially rejected point.
    """
    idx = range(len(null))
    best = Fraction(0)
    count = 0
    for r in range(len(null) + 1):
        for subset in itertools.combinations(idx, r):
            size = sum((null[i] for i in subset), Fraction(0))
            if size > alpha:
                continue
            power = sum((alt[i] for i in subset), Fraction(0))
            count += 1
            best = max(best, power)
            slack = alpha - size
            for j in idx:
                if j in subset or null[j] == 0:
                    continue
                phi = min(Fraction(1), slack / null[j])
                count += 1
                best = max(best, power + phi * alt[j])
    return best, count


def _linprog_power(null, alt, alpha) -> float:
    res = optimize.linprog(
        -np.array([float(q) for q in alt]),
        A_ub=np.array([[float(p) for p in null]]),
        b_ub=[float(alpha)],
        bounds=[(0.0, 1.0)] * len(null),
        method="highs",
    )
    return float(-res.fun)


def enumerate_mp_optimality(problem, alpha, theta1=None, linprog_check: bool = True) -> OracleReport:
    """Exhaustive check that the production level-``alpha`` rule is most powerful.

    ``problem`` must be built with ``exact=True`` and ``alpha`` should be a
    ``Fraction`` for the comparison to be exact.
    """
    support = getattr(problem, "support", None)
    if support is None:
        raise DomainError("exhaustive MP check needs a finite problem")
    if len(support) > MAX_SUPPORT:
        raise DomainError(f"support has {len(support)} points; refusing to enumerate more than {MAX_SUPPORT}")
    theta1 = problem.theta1 if theta1 is None else theta1
    a = _frac(alpha)
    _, null, alt = _tables_for(problem, theta1)
    thresholds = _threshold_rules(null, alt, a)
    best_threshold = max(p for _, _, p in thresholds)
    best_vertex, n_vertices = _lp_vertices(null, alt, a)
    rule = build_rule(problem, alpha)
    produced = _frac(rule.power)
    gap = max(best_threshold, best_vertex) - produced
    details = {
        "rule_c": rule.c,
        "rule_gamma": rule.gamma,
        "threshold_rules": len(thresholds),
        "best_threshold_power": best_threshold,
        "vertices": n_vertices,
        "best_vertex_power": best_vertex,
        "power_gap": gap,
    }
    passed = gap == 0 and best_threshold == best_vertex
    if linprog_check:
        lp = _linprog_power(null, alt, a)
        details["linprog_power"] = lp
        passed = passed and abs(lp - float(best_vertex)) < 1e-9
    return OracleReport("build_rule", "vertex-enumeration", float(best_vertex), 0.0, True, passed, details)


# ---------------------------------------------------------------- Monte Carlo


def _oracle_roc(model):
    """ROC from scipy.stats, or by interpolating the enumerated finite ROC points."""
    if isinstance(model, OneSampleNormal):
        shift = (model.mu1 - model.mu0) * math.sqrt(model.n) / model.sigma
        return lambda a: stats.norm.sf(stats.norm.isf(a) - shift)
    if isinstance(model, TwoSampleT):
        df = 2 * (model.n - 1)
        ncp = (model.mu1 - model.mu0) / (model.sigma * math.sqrt(2.0 / model.n))
        return lambda a: stats.nct.sf(stats.t.isf(a, df), df, ncp) if ncp else np.asarray(a, dtype=float)
    _, null, alt = _tables_for(model, model.theta1)
    p0 = np.array([float(x) for x in null])
    p1 = np.array([float(x) for x in alt])
    xs = np.concatenate([[0.0], np.cumsum(p0[::-1])])
    ys = np.concatenate([[0.0], np.cumsum(p1[::-1])])
    return lambda a: np.interp(a, xs, ys)


def _simulate(model, truth, reps, rng):
    """Raw draws reduced to (statistic, u, log likelihood ratio), all computed here."""
    g = rng.generator
    h1 = Hypothesis.coerce(truth) is Hypothesis.H1
    u = np.zeros(reps)
    if isinstance(model, OneSampleNormal):
        mu = model.mu1 if h1 else model.mu0
        x = g.normal(mu, model.sigma, size=(reps, model.n))
        xbar = x.mean(axis=1)
        z = (xbar - model.mu0) * math.sqrt(model.n) / model.sigma
        llr = ((x - model.mu0) ** 2 - (x - model.mu1) ** 2).sum(axis=1) / (2 * model.sigma**2)
        return z, u, llr
    if isinstance(model, TwoSampleT):
        n = model.n
        x = g.normal(model.mu0, model.sigma, size=(reps, n))
        y = g.normal(model.mu1 if h1 else model.mu0, model.sigma, size=(reps, n))
        sp2 = (x.var(axis=1, ddof=1) + y.var(axis=1, ddof=1)) / 2
        t = (y.mean(axis=1) - x.mean(axis=1)) / np.sqrt(sp2 * 2 / n)
        llr = ((y - model.mu0) ** 2 - (y - model.mu1) ** 2).sum(axis=1) / (2 * model.sigma**2)
        return t, u, llr
    support, null, alt = _tables_for(model, model.theta1)
    p0 = np.array([float(x) for x in null])
    p1 = np.array([float(x) for x in alt])
    s = g.choice(np.asarray(support), size=reps, p=p1 if h1 else p0)
    u = g.random(reps)
    with np.errstate(divide="ignore"):
        log_ratio = np.log(p1) - np.log(p0)
    return s, u, log_ratio[s]


def _kl_target(model) -> float:
    """Null mean of the full-data log likelihood ratio, ``-KL(P0 || P1)``."""
    if isinstance(model, (OneSampleNormal, TwoSampleT)):
        return -model.n * (model.mu1 - model.mu0) ** 2 / (2 * model.sigma**2)
    _, null, alt = _tables_for(model, model.theta1)
    return float(sum(float(p) * math.log(float(q) / float(p)) for p, q in zip(null, alt) if p > 0))


def mc_theorem_checks(model, reps: int, rng) -> list[OracleReport]:
    """Distribution of the P-functional under each hypothesis, plus the sign of the null drift.

    Returns three reports: KS against Uniform(0,1) under the null, the largest
    pointwise gap between the alternative ecdf and the ROC on a 99-point grid,
    and the null mean of the log likelihood ratio against ``-KL``.
    """
    if reps < 10_000:
        raise DomainError("Monte Carlo theorem checks need at least 10^4 replicates")
    reports = []
    s0, u0, llr0 = _simulate(model, Hypothesis.H0, reps, rng.child(0))
    p0 = np.asarray(p_functional(model, s0, u0), dtype=float)
    ks = stats.kstest(p0, "uniform")
    crit = float(stats.kstwo.ppf(0.99, reps))
    reports.append(OracleReport("p_functional under H0", "ks-uniform", float(ks.statistic), 0.0, False,
                                bool(ks.statistic < crit), {"critical_1pct": crit, "pvalue": float(ks.pvalue)}))

    s1, u1, _ = _simulate(model, Hypothesis.H1, reps, rng.child(1))
    p1 = np.sort(np.asarray(p_functional(model, s1, u1), dtype=float))
    grid = np.linspace(0.01, 0.99, 99)
    ecdf = np.searchsorted(p1, grid, side="right") / reps
    rho = np.asarray(_oracle_roc(model)(grid), dtype=float)
    gaps = np.abs(ecdf - rho)
    k = int(np.argmax(gaps))
    se = math.sqrt(max(rho[k] * (1 - rho[k]), 1.0 / reps) / reps)
    reports.append(OracleReport("p_functional under H1", "ecdf-vs-roc", float(gaps[k]), se, False,
                                bool(gaps[k] < 0.01), {"alpha_at_max_gap": float(grid[k])}))

    target = _kl_target(model)
    mean = float(np.mean(llr0))
    se = float(np.std(llr0, ddof=1) / math.sqrt(reps))
    close = abs(mean - target) <= MC_SE_MULT * se or (se == 0.0 and abs(mean - target) < 1e-12)
    negative = target == 0.0 or mean + MC_SE_MULT * se < 0.0
    running = np.cumsum(llr0) / np.arange(1, reps + 1)
    reports.append(OracleReport("log likelihood ratio under H0", "running-mean", mean, se, False,
                                bool(close and negative),
                                {"target": target, "running_mean_tail": running[-10:].tolist()}))
    return reports
