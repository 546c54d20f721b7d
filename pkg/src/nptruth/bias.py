"""Publication gates and what they do to accumulated evidence.

A ``DecisionGate`` publishes a study with probability ``eta1`` if it rejected
and ``eta0`` if it did not.  A ``PValueGate`` publishes with probability
``g(p)`` for a nonincreasing ``g``.  Unpublished studies never reach the
updater; the biased simulator still logs them, together with the belief an
unfiltered reader would have had.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .belief import Belief, p_expectation
from .errors import DomainError
from .roots import newton_bisect
from .sequential import SequentialConfig, Trajectory, _trajectory, simulate_stream, walk

# ---------------------------------------------------------------- gates


@dataclass(frozen=True)
class DecisionGate:
    """Publish with probability ``eta1`` after a rejection, ``eta0`` otherwise."""

    eta0: float
    eta1: float

    def __post_init__(self):
        if not (0.0 <= self.eta0 <= self.eta1 <= 1.0):
            raise DomainError("need 0 <= eta0 <= eta1 <= 1")
        if self.eta1 == 0.0:
            raise DomainError("eta0 = eta1 = 0 publishes nothing")

    @property
    def is_noop(self) -> bool:
        return self.eta0 == self.eta1 == 1.0

    def publish_prob(self, d, p=None):
        return np.where(np.asarray(d) == 1, self.eta1, self.eta0)


@dataclass(frozen=True)
class PValueGate:
    """Publish with probability ``g(p)``; ``g`` is a step, exponential or table.

    * ``step``: ``g(p) = 1{p <= cutoff}``
    * ``exponential``: ``g(p) = exp(-beta p)``
    * ``table``: ``g(p) = values[k]`` on the k-th cell of ``edges`` (left-closed
      at 0, cells ``(edges[k-1], edges[k]]``)
    """

    kind: str
    cutoff: float | None = None
    beta: float | None = None
    edges: tuple = ()
    values: tuple = ()

    def __post_init__(self):
        if self.kind == "step":
            if self.cutoff is None or not (0.0 < self.cutoff <= 1.0):
                raise DomainError("step gate needs a cutoff in (0, 1]")
            if self.cutoff == 1.0:
                raise DomainError("a step gate at 1 publishes everything; g must not be identically 1")
        elif self.kind == "exponential":
            if self.beta is None or not (self.beta > 0 and math.isfinite(self.beta)):
                raise DomainError("exponential gate needs beta > 0")
        elif self.kind == "table":
            e = np.asarray(self.edges, dtype=float)
            v = np.asarray(self.values, dtype=float)
            if v.size != e.size + 1 or e.size == 0:
                raise DomainError("table gate needs len(values) == len(edges) + 1")
            if np.any(np.diff(e) <= 0) or e[0] <= 0.0 or e[-1] >= 1.0:
                raise DomainError("table edges must increase strictly inside (0, 1)")
            if np.any((v < 0) | (v > 1)) or np.any(np.diff(v) > 0):
                raise DomainError("table values must be nonincreasing probabilities")
            if np.all(v == 1.0):
                raise DomainError("g must not be identically 1")
            if np.all(v == 0.0):
                raise DomainError("g is identically 0; nothing is ever published")
        else:
            raise DomainError(f"unknown gate kind {self.kind!r}")

    def g(self, p):
        p = np.asarray(p, dtype=float)
        if self.kind == "step":
            out = (p <= self.cutoff).astype(float)
        elif self.kind == "exponential":
            out = np.exp(-self.beta * p)
        else:
            idx = np.searchsorted(np.asarray(self.edges, dtype=float), p, side="left")
            out = np.asarray(self.values, dtype=float)[idx]
        return out if out.ndim else float(out)

    @property
    def mass(self) -> float:
        """``int_0^1 g``."""
        if self.kind == "step":
            return float(self.cutoff)
        if self.kind == "exponential":
            return float(-math.expm1(-self.beta) / self.beta)
        widths = np.diff(np.concatenate([[0.0], self.edges, [1.0]]))
        return float(np.dot(widths, self.values))

    @property
    def breaks(self) -> tuple:
        if self.kind == "step":
            return (float(self.cutoff),)
        if self.kind == "table":
            return tuple(float(e) for e in self.edges)
        return ()

    def publish_prob(self, d, p):
        return self.g(p)


def biased_size(gate: DecisionGate, alpha):
    """Null probability that a published decision is a rejection."""
    a = np.asarray(alpha, dtype=float)
    if np.any((a <= 0.0) | (a >= 1.0)):
        raise DomainError("alpha must lie strictly inside (0, 1)")
    out = a * gate.eta1 / (a * gate.eta1 + (1.0 - a) * gate.eta0)
    return out if out.ndim else float(out)


def biased_expected_V(gate: DecisionGate, alpha, rho):
    """Null mean of the decision log likelihood ratio among published studies."""
    a = np.asarray(alpha, dtype=float)
    r = np.asarray(rho, dtype=float)
    if np.any(r <= a) or np.any(r >= 1.0):
        raise DomainError("rho must lie in (alpha, 1)")
    s = np.asarray(biased_size(gate, a))
    out = s * np.log(r / a) + (1.0 - s) * np.log((1.0 - r) / (1.0 - a))
    return out if out.ndim else float(out)


def biased_p_density(gate: PValueGate):
    """Density ``g(p) / int g`` of published P-values under the null."""
    mass = gate.mass
    if not mass > 0.0:
        raise DomainError("g integrates to zero; nothing is ever published")
    return lambda p: gate.g(p) / mass


def biased_expected_logrho(gate: PValueGate, model) -> float:
    """``int_0^1 log rho'(p) gbar(p) dp`` for the given model."""
    return p_expectation(model, weight=biased_p_density(gate), breaks=gate.breaks)


def slope_crossing(model) -> float:
    """P-value at which the model's ROC slope equals one."""
    if hasattr(model, "crossing_level"):
        return model.crossing_level()
    if model.discrete:
        raise DomainError("the ROC slope of a finite problem is a step function; no crossing root")
    f = model.log_roc_deriv if hasattr(model, "log_roc_deriv") else (lambda a: math.log(model.roc_deriv(a)))
    return newton_bisect(lambda a: float(f(a)), 1e-12, 1.0 - 1e-12, xtol=1e-14).x


# ---------------------------------------------------------------- simulation


def run_biased_sequential(cfg: SequentialConfig, gate, truth, family, rng) -> Trajectory:
    """Sequential updating that only sees published studies.

    Extra columns: ``published`` (0/1) and ``kappa0_unbiased``, the belief of a
    reader who sees every study.  The stopping rule acts on the published path.
    """
    batch, channels, log_lr = simulate_stream(cfg, truth, family, rng)
    coins = rng.child(3).uniform(size=len(batch))
    published = (coins < gate.publish_prob(batch.d, batch.p)).astype(np.int8)
    seen = np.where(published == 1, log_lr, 0.0)
    start = Belief(cfg.kappa0_init).log_odds
    path, used = walk(start, seen, cfg.bound)
    with np.errstate(invalid="ignore"):
        counterfactual = start - np.cumsum(log_lr)
    extra = {"published": published, "kappa0_unbiased": expit(counterfactual)}
    traj = _trajectory(cfg, batch, channels, log_lr, path, used, truth, family, extra)
    traj.meta["published"] = int(published[:used].sum())
    traj.meta["gate"] = gate.__class__.__name__
    return traj
