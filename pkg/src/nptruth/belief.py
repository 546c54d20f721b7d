"""Two-point beliefs over the null and alternative, and what evidence does to them.

A ``Belief`` carries the log-odds ``log(kappa0 / kappa1)`` so long runs of
updates never underflow.  Every kind of evidence reduces to a likelihood ratio
``LR = f1/f0``, and updating is ``log-odds -= log LR``.

The module also builds effect-size profiles of the log likelihood ratios
carried by a reported decision (``l_D``) or P-value (``l_P``), as 1-D curves
or dense (effect, logit-level) grids.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np
from scipy import integrate, special

from .errors import DomainError
from .models import OneSampleNormal, TeaTastingBinomial, TeaTastingFisher, TwoSampleT

LOGIT_05 = math.log(0.05 / 0.95)


# ---------------------------------------------------------------- beliefs


@dataclass(frozen=True)
class Belief:
    """Probability ``kappa0`` that the null is true, stored as log-odds."""

    log_odds: float

    def __init__(self, kappa0: float | None = None, *, log_odds: float | None = None):
        if log_odds is None:
            if kappa0 is None or not (0.0 < kappa0 < 1.0):
                raise DomainError(f"kappa0 must lie strictly inside (0, 1), got {kappa0!r}")
            log_odds = math.log(kappa0) - math.log1p(-kappa0)
        elif math.isnan(log_odds):
            raise DomainError("log-odds must not be nan")
        object.__setattr__(self, "log_odds", float(log_odds))

    @property
    def kappa0(self) -> float:
        return float(special.expit(self.log_odds))

    @property
    def kappa1(self) -> float:
        return float(special.expit(-self.log_odds))


@dataclass(frozen=True)
class RawLikelihoodRatio:
    value: float

    def log_lr(self) -> float:
        if not (self.value >= 0.0 and math.isfinite(self.value)):
            raise DomainError(f"likelihood ratio must be finite and nonnegative, got {self.value!r}")
        return math.log(self.value) if self.value > 0.0 else -math.inf


@dataclass(frozen=True)
class LogLikelihoodRatio:
    """Study-level ``sum_j log Lambda(x_j)``, the compact form of the data channel."""

    value: float

    def log_lr(self) -> float:
        if math.isnan(self.value) or self.value == math.inf:
            raise DomainError(f"log likelihood ratio must be < +inf, got {self.value!r}")
        return float(self.value)


@dataclass(frozen=True)
class Decision:
    d: int
    alpha: float
    rho: float

    def __post_init__(self):
        if self.d not in (0, 1):
            raise DomainError("decision must be 0 or 1")
        if not (0.0 < self.alpha < 1.0):
            raise DomainError("alpha must lie strictly inside (0, 1)")
        if not (self.alpha <= self.rho <= 1.0):
            raise DomainError("power at alpha must lie in [alpha, 1]")

    def log_lr(self) -> float:
        return float(log_lambda_D(self.d, self.alpha, self.rho))


@dataclass(frozen=True)
class PValue:
    p: float
    rho_prime: float

    def __post_init__(self):
        if not (0.0 <= self.p <= 1.0):
            raise DomainError("p must lie in [0, 1]")

    def log_lr(self) -> float:
        return RawLikelihoodRatio(self.rho_prime).log_lr()


Evidence = Union[RawLikelihoodRatio, LogLikelihoodRatio, Decision, PValue]


def update(b: Belief, e: Evidence) -> Belief:
    """Posterior ``kappa0 = 1 / (1 + (kappa1/kappa0) LR)`` for any evidence channel."""
    return Belief(log_odds=b.log_odds - e.log_lr())


def lambda_D(d, alpha, rho):
    """Likelihood ratio of a reported decision: ``(rho/alpha)^d ((1-rho)/(1-alpha))^(1-d)``."""
    with np.errstate(divide="ignore"):
        return np.exp(log_lambda_D(d, alpha, rho))


def log_lambda_D(d, alpha, rho):
    d = np.asarray(d)
    a = np.asarray(alpha, dtype=float)
    r = np.asarray(rho, dtype=float)
    if np.any((a <= 0.0) | (a >= 1.0)):
        raise DomainError("alpha must lie strictly inside (0, 1)")
    if np.any((r < 0.0) | (r > 1.0)):
        raise DomainError("rho must lie in [0, 1]")
    with np.errstate(divide="ignore", invalid="ignore"):
        accept = np.log1p(-r) - np.log1p(-a)
        reject = np.log(r) - np.log(a)
    out = np.where(d == 1, reject, accept)
    return out if out.ndim else float(out)


def expected_null_V(alpha, rho):
    """``E0[log Lambda_D] = alpha log(rho/alpha) + (1-alpha) log((1-rho)/(1-alpha))``."""
    a = np.asarray(alpha, dtype=float)
    r = np.asarray(rho, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = a * (np.log(r) - np.log(a)) + (1.0 - a) * (np.log1p(-r) - np.log1p(-a))
    return out if out.ndim else float(out)


# ---------------------------------------------------------------- profiles


@dataclass
class ProfileGrid:
    """Values of ``l_D`` or ``l_P`` on an (effect, logit-level) grid.

    ``values[i, j]`` belongs to ``effect[i]`` and ``logit[j]``; the level itself
    (``alpha`` for ``l_D``, ``p`` for ``l_P``) is ``expit(logit)``.
    """

    kind: str
    effect_name: str
    effect: np.ndarray
    logit: np.ndarray
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def level(self):
        return special.expit(self.logit)

    def rows(self):
        """Long-format ``(effect, logit, level, value)`` tuples."""
        lv = self.level
        for i, x in enumerate(self.effect):
            for j, z in enumerate(self.logit):
                yield float(x), float(z), float(lv[j]), float(self.values[i, j])


FAMILY_KINDS = ("normal", "twosample", "tea-binomial", "tea-fisher")


def effect_family(kind: str, n: int | None = None) -> Callable[[float], object]:
    """Effect value -> problem; the effect is ``xi`` for normal families, ``theta1`` for tasting."""
    if kind == "normal":
        return lambda xi: OneSampleNormal.from_effect(xi, n or 1)
    if kind == "twosample":
        if n is None:
            raise DomainError("the two-sample family needs a group size n")
        return lambda xi: TwoSampleT(0.0, xi, 1.0, n)
    if kind == "tea-binomial":
        return lambda theta: TeaTastingBinomial(theta)
    if kind == "tea-fisher":
        return lambda theta: TeaTastingFisher(theta)
    raise DomainError(f"unknown model family {kind!r}; expected one of {FAMILY_KINDS}")


def default_effect_grid(kind: str) -> np.ndarray:
    if kind in ("tea-binomial", "tea-fisher"):
        return np.round(np.arange(0.51, 0.99 + 1e-9, 0.01), 10)
    return np.round(np.arange(0.1, 3.0 + 1e-9, 0.05), 10)


def _family(family, n):
    return effect_family(family, n) if isinstance(family, str) else family


def _effect_name(family):
    return "theta1" if family in ("tea-binomial", "tea-fisher") else "xi"


def _log_rho_prime(problem, p):
    if hasattr(problem, "log_roc_deriv"):
        return problem.log_roc_deriv(p)
    with np.errstate(divide="ignore"):
        return np.log(problem.roc_deriv(p))


def _l_D_values(fam, d, alphas, effects):
    out = np.empty((len(effects), len(alphas)))
    for i, x in enumerate(effects):
        prob = fam(float(x))
        out[i] = log_lambda_D(d, alphas, np.asarray(prob.roc(alphas), dtype=float))
    return out


def _l_P_values(fam, ps, effects):
    out = np.empty((len(effects), len(ps)))
    for i, x in enumerate(effects):
        out[i] = _log_rho_prime(fam(float(x)), ps)
    return out


def _check_interior(levels, name):
    lv = np.asarray(levels, dtype=float)
    if np.any((lv <= 0.0) | (lv >= 1.0)):
        raise DomainError(f"{name} must lie strictly inside (0, 1)")


def l_D_profile(family, d: int, alpha: float, xi_grid: Sequence[float] | None = None, n: int | None = None) -> ProfileGrid:
    """``l_D = d log(rho/alpha) + (1-d) log((1-rho)/(1-alpha))`` across effect sizes."""
    if d not in (0, 1):
        raise DomainError("decision must be 0 or 1")
    _check_interior(alpha, "alpha")
    effects = np.asarray(default_effect_grid(family) if xi_grid is None else xi_grid, dtype=float)
    alphas = np.array([float(alpha)])
    vals = _l_D_values(_family(family, n), d, alphas, effects)
    return ProfileGrid("l_D", _effect_name(family), effects, special.logit(alphas), vals, {"d": d, "n": n})


def l_P_profile(family, p: float, xi_grid: Sequence[float] | None = None, n: int | None = None) -> ProfileGrid:
    """``l_P = log rho'(p)`` across effect sizes (signed, not absolute)."""
    _check_interior(p, "p")
    effects = np.asarray(default_effect_grid(family) if xi_grid is None else xi_grid, dtype=float)
    ps = np.array([float(p)])
    vals = _l_P_values(_family(family, n), ps, effects)
    return ProfileGrid("l_P", _effect_name(family), effects, special.logit(ps), vals, {"n": n})


def logit_axis(logit_range, resolution: int) -> np.ndarray:
    lo, hi = map(float, logit_range)
    if not (hi > lo) or resolution < 2:
        raise DomainError("logit range must be nonempty with at least 2 points")
    axis = np.linspace(lo, hi, int(resolution))
    if lo <= LOGIT_05 <= hi and not np.any(np.isclose(axis, LOGIT_05, rtol=0.0, atol=1e-12)):
        axis = np.sort(np.append(axis, LOGIT_05))
    return axis


def contour_grid(family, n: int | None, xi_range, logit_range, resolution, d: int | None = None) -> ProfileGrid:
    """Dense grid of ``l_D`` (when ``d`` is given) or ``l_P`` over effect and logit level.

    ``resolution`` is an int or an ``(n_effect, n_logit)`` pair.  The reference
    level ``logit(.05)`` is inserted into the logit axis whenever it is in range.
    """
    r1, r2 = (resolution, resolution) if np.isscalar(resolution) else resolution
    lo, hi = map(float, xi_range)
    if not (hi > lo) or r1 < 2:
        raise DomainError("effect range must be nonempty with at least 2 points")
    effects = np.linspace(lo, hi, int(r1))
    logits = logit_axis(logit_range, r2)
    levels = special.expit(logits)
    fam = _family(family, n)
    if d is None:
        vals = _l_P_values(fam, levels, effects)
        kind = "l_P"
    else:
        if d not in (0, 1):
            raise DomainError("decision must be 0 or 1")
        vals = _l_D_values(fam, d, levels, effects)
        kind = "l_D"
    return ProfileGrid(kind, _effect_name(family), effects, logits, vals, {"d": d, "n": n})


# ---------------------------------------------------------------- P-value integrals


def p_expectation(problem, fn=None, weight=None, breaks=()):
    """``int_0^1 fn(log rho'(u)) weight(u) du`` for a problem's P-value density ratio.

    ``fn`` defaults to the identity, ``weight`` to 1 (so the default is the null
    expectation of ``log rho'(P)``).  Continuous problems are integrated on the
    statistic scale ``u = Pr0{S > q}``, which removes the endpoint singularities of
    ``log rho'``; finite problems are summed exactly over the support, each
    point owning the P-value interval ``(Pr0{S > s}, Pr0{S >= s}]``.
    """
    fn = (lambda v: v) if fn is None else fn
    if problem.discrete:
        total = 0.0
        for s in problem.support:
            lo = float(problem.null_tail(s))
            width = float(problem.null_point(s))
            p1 = float(problem.alt_point(s))
            if width == 0.0:
                continue
            val = fn(math.log(p1 / width)) if p1 > 0.0 else fn(-math.inf)
            if weight is None:
                mass = width
            else:
                pts = [b for b in breaks if lo < b < lo + width]
                mass = integrate.quad(weight, lo, lo + width, points=pts or None, limit=200)[0]
            if mass != 0.0:
                total += val * mass
        return total
    lo_q = float(problem.null_isf(1.0 - 1e-16))
    hi_q = float(problem.null_isf(1e-16))
    w = (lambda u: 1.0) if weight is None else weight

    def integrand(q):
        lr = float(problem.log_rho_prime_at(q)) if hasattr(problem, "log_rho_prime_at") else float(problem.log_likelihood_ratio(q))
        return fn(lr) * w(float(problem.null_tail(q))) * float(problem.null_pdf(q))

    pts = sorted(float(problem.null_isf(b)) for b in breaks if 0.0 < b < 1.0)
    edges = [lo_q, *pts, hi_q]
    return sum(integrate.quad(integrand, a, b, limit=200, epsabs=1e-13, epsrel=1e-11)[0] for a, b in zip(edges[:-1], edges[1:]))
