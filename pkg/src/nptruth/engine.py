"""Level-alpha most powerful rules, the P-functional and ROC functions.

Everything here works on the statistic scale: a ``TestProblem`` exposes the
null and alternative laws of a scalar statistic ``S`` whose likelihood ratio is
nondecreasing in ``S``, so "reject when the likelihood ratio is large" becomes
"reject when ``S`` is large" and the cutoff is a null quantile lookup.

Finite problems keep whatever number type their probability tables carry; built
from ``Fraction`` tables they give exact sizes, randomisation fractions and
P-values.
"""
from __future__ import annotations

import abc
import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DomainError


class Hypothesis(str, enum.Enum):
    H0 = "H0"
    H1 = "H1"

    @classmethod
    def coerce(cls, value) -> "Hypothesis":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).upper())
        except ValueError:
            raise DomainError(f"truth must be 'H0' or 'H1', got {value!r}") from None


def _check_open_unit(alpha, name="alpha"):
    a = np.asarray(alpha, dtype=float)
    if np.any(~((a > 0.0) & (a < 1.0))):
        raise DomainError(f"{name} must lie strictly inside (0, 1), got {alpha!r}")


class TestProblem(abc.ABC):
    """Simple null versus simple alternative, reduced to a scalar statistic."""

    __test__ = False  # keep pytest from collecting subclasses named Test*
    discrete: bool = False

    @abc.abstractmethod
    def null_tail(self, s):
        """``Pr0{S > s}``."""

    @abc.abstractmethod
    def alt_tail(self, s):
        """``Pr1{S > s}``."""

    def null_point(self, s):
        return 0.0

    def alt_point(self, s):
        return 0.0

    @abc.abstractmethod
    def sample_statistic(self, hypothesis, size, rng):
        """Draw ``size`` statistic values under ``hypothesis``."""

    def likelihood_ratio(self, s):
        return np.exp(self.log_likelihood_ratio(s))

    def log_likelihood_ratio(self, s):
        raise NotImplementedError(f"{type(self).__name__} has no closed-form likelihood ratio")

    # generic ROC machinery; models override with closed forms where they have them
    def roc(self, alpha):
        return _generic_roc(self, alpha)

    def roc_deriv(self, alpha):
        return _generic_roc_deriv(self, alpha)


class FiniteProblem(TestProblem):
    """Statistic with finite support and explicit probability tables."""

    discrete = True
    support: tuple
    null_pmf: tuple
    alt_pmf: tuple

    def _tail(self, table, s):
        return sum((p for v, p in zip(self.support, table) if v > s), start=0 * table[0])

    def _point(self, table, s):
        for v, p in zip(self.support, table):
            if v == s:
                return p
        return 0 * table[0]

    def null_tail(self, s):
        return self._tail(self.null_pmf, s)

    def alt_tail(self, s):
        return self._tail(self.alt_pmf, s)

    def null_point(self, s):
        return self._point(self.null_pmf, s)

    def alt_point(self, s):
        return self._point(self.alt_pmf, s)

    def log_likelihood_ratio(self, s):
        s = np.asarray(s)
        lut = {v: np.log(float(p1)) - np.log(float(p0)) for v, p0, p1 in zip(self.support, self.null_pmf, self.alt_pmf)}
        out = np.vectorize(lambda v: lut[int(v)], otypes=[float])(s)
        return out if out.ndim else float(out)

    def sample_statistic(self, hypothesis, size, rng):
        table = self.null_pmf if Hypothesis.coerce(hypothesis) is Hypothesis.H0 else self.alt_pmf
        probs = np.array([float(p) for p in table])
        return rng.choice(np.array(self.support), size=size, p=probs / probs.sum())


class ContinuousProblem(TestProblem):
    """Statistic with a continuous null law; no randomisation is ever needed."""

    discrete = False

    @abc.abstractmethod
    def null_isf(self, a):
        """Upper null quantile: ``c`` with ``Pr0{S > c} = a``."""

    @abc.abstractmethod
    def null_pdf(self, s):
        ...

    @abc.abstractmethod
    def alt_pdf(self, s):
        ...


@dataclass(frozen=True)
class DecisionRule:
    alpha: object
    c: object
    gamma: object
    power: object


@dataclass(frozen=True)
class RocCurve:
    alpha: np.ndarray
    rho: np.ndarray
    rho_prime: np.ndarray

    @property
    def grid(self):
        return list(zip(self.alpha, self.rho, self.rho_prime))


# ---------------------------------------------------------------- rules


def _finite_cutoff(problem: FiniteProblem, alpha):
    for s in problem.support:
        if problem.null_tail(s) <= alpha:
            return s
    return problem.support[-1]  # pragma: no cover - tail of the top point is 0


def build_rule(problem: TestProblem, alpha) -> DecisionRule:
    """The level-``alpha`` most powerful rule ``(c, gamma)`` and its power."""
    _check_open_unit(alpha)
    if problem.discrete:
        c = _finite_cutoff(problem, alpha)
        gamma = (alpha - problem.null_tail(c)) / problem.null_point(c)
        power = problem.alt_tail(c) + gamma * problem.alt_point(c)
        return DecisionRule(alpha, c, gamma, power)
    c = float(problem.null_isf(alpha))
    return DecisionRule(alpha, c, 0.0, float(problem.alt_tail(c)))


def decide(rule: DecisionRule, s, u):
    """1 rejects the null: ``s > c``, or ``s == c`` with ``u <= gamma``."""
    if np.ndim(s) or np.ndim(u):
        s_arr = np.asarray(s, dtype=float)
        u_arr = np.asarray(u, dtype=float)
        c, g = float(rule.c), float(rule.gamma)
        return ((s_arr > c) | ((s_arr == c) & (u_arr <= g))).astype(np.int8)
    if s > rule.c:
        return 1
    return int(s == rule.c and u <= rule.gamma)


def p_functional(problem: TestProblem, s, u=0):
    """Smallest level at which ``(s, u)`` rejects: ``Pr0{S > s} + u Pr0{S = s}``."""
    if problem.discrete:
        if np.ndim(s) or np.ndim(u):
            s_arr, u_arr = np.broadcast_arrays(np.asarray(s), np.asarray(u, dtype=float))
            tail = {v: float(problem.null_tail(v)) for v in problem.support}
            point = {v: float(problem.null_point(v)) for v in problem.support}
            flat = [tail[int(v)] + w * point[int(v)] for v, w in zip(s_arr.ravel(), u_arr.ravel())]
            return np.array(flat).reshape(s_arr.shape)
        return problem.null_tail(s) + u * problem.null_point(s)
    return problem.null_tail(s)


# ---------------------------------------------------------------- ROC


def roc_with_limits(alpha, inner):
    """Evaluate ``inner`` on the open unit interval, 0 at ``alpha <= 0`` and 1 at ``alpha >= 1``."""
    a = np.asarray(alpha, dtype=float)
    out = np.where(a <= 0.0, 0.0, 1.0)
    mask = (a > 0.0) & (a < 1.0)
    if np.any(mask):
        out[mask] = inner(a[mask])
    return out if out.ndim else float(out)


def _generic_roc(problem, alpha):
    if problem.discrete:
        a = np.asarray(alpha, dtype=float)
        out = np.array([_finite_roc_point(problem, float(x)) for x in a.ravel()]).reshape(a.shape)
        return out if out.ndim else float(out)
    return roc_with_limits(alpha, lambda a: problem.alt_tail(problem.null_isf(a)))


def _finite_roc_point(problem, a):
    if a <= 0.0:
        return 0.0
    if a >= 1.0:
        return 1.0
    return float(build_rule(problem, a).power)


def _generic_roc_deriv(problem, alpha):
    a = np.asarray(alpha, dtype=float)
    _check_open_unit(a)
    if problem.discrete:
        vals = []
        for x in a.ravel():
            c = _finite_cutoff(problem, float(x))
            vals.append(float(problem.alt_point(c)) / float(problem.null_point(c)))
        out = np.array(vals).reshape(a.shape)
    else:
        c = problem.null_isf(a)
        out = np.asarray(problem.alt_pdf(c) / problem.null_pdf(c), dtype=float)
    return out if out.ndim else float(out)


def roc(problem: TestProblem, alpha):
    """Power of the size-``alpha`` most powerful rule; 0 and 1 at the endpoints."""
    a = np.asarray(alpha, dtype=float)
    if np.any((a < 0.0) | (a > 1.0)) or np.any(np.isnan(a)):
        raise DomainError(f"alpha must lie in [0, 1], got {alpha!r}")
    return problem.roc(alpha)


def roc_deriv(problem: TestProblem, alpha):
    """Derivative of the ROC, which is the alternative density of the P-functional."""
    _check_open_unit(alpha)
    return problem.roc_deriv(alpha)


def roc_curve(problem: TestProblem, alphas: Sequence[float]) -> RocCurve:
    a = np.asarray(alphas, dtype=float)
    _check_open_unit(a)
    return RocCurve(a, np.asarray(roc(problem, a), dtype=float), np.asarray(roc_deriv(problem, a), dtype=float))


def mc_size_power(problem: TestProblem, alpha, reps: int, rng):
    """Monte Carlo estimates of the realised size and power of ``build_rule``."""
    if reps <= 0:
        raise DomainError("reps must be positive")
    rule = build_rule(problem, alpha)
    out = []
    for hyp in (Hypothesis.H0, Hypothesis.H1):
        s = problem.sample_statistic(hyp, reps, rng)
        u = rng.uniform(size=reps)
        out.append(float(np.mean(decide(rule, s, u))))
    return out[0], out[1]
