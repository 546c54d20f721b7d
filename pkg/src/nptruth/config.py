"""Scenario schema for the command-line runner.

A scenario is one JSON document.  Unknown keys are rejected at every level so
that a typo fails loudly instead of silently falling back to a default.
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field

from .bias import DecisionGate, PValueGate
from .errors import DomainError
from .los import CostMatrix
from .models import (NormalFamily, OneSampleNormal, TeaBinomialFamily, TeaFisherFamily, TeaTastingBinomial,
                     TeaTastingFisher, TwoSampleFamily, TwoSampleT)
from .sequential import SequentialConfig


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class ModelSpec(_Strict):
    """``family`` plus its parameters.

    Normal models accept either ``xi`` or ``mu0``/``mu1``/``sigma``.  ``theta1``
    is only read by the tea-tasting families.
    """

    family: Literal["normal", "twosample", "tea-binomial", "tea-fisher"] = "normal"
    mu0: float = 0.0
    mu1: Optional[float] = None
    sigma: float = 1.0
    xi: Optional[float] = None
    n: int = 1
    theta1: float = 0.8

    @property
    def mean_shift(self) -> float:
        if self.xi is not None:
            return self.xi * self.sigma
        return (1.0 if self.mu1 is None else self.mu1) - self.mu0

    def problem(self, n: int | None = None):
        n = self.n if n is None else n
        if self.family == "normal":
            return OneSampleNormal(self.mu0, self.mu0 + self.mean_shift, self.sigma, n)
        if self.family == "twosample":
            return TwoSampleT(self.mu0, self.mu0 + self.mean_shift, self.sigma, n)
        if self.family == "tea-binomial":
            return TeaTastingBinomial(self.theta1)
        return TeaTastingFisher(self.theta1)

    def model_family(self):
        if self.family == "normal":
            if not self.sigma > 0:
                raise DomainError("sigma must be positive")
            return NormalFamily(self.mean_shift / self.sigma)
        if self.family == "twosample":
            return TwoSampleFamily(self.mu0, self.mu0 + self.mean_shift, self.sigma)
        if self.family == "tea-binomial":
            return TeaBinomialFamily(self.theta1)
        return TeaFisherFamily(self.theta1)


class RocBlock(_Strict):
    points: int = Field(101, ge=3)
    pdf_points: int = Field(201, ge=3)


class TeaBlock(_Strict):
    version: Literal[1, 2] = 1
    count: int = 6
    u: float = Field(0.973, ge=0.0, le=1.0)
    alpha: float = Field(0.05, gt=0.0, lt=1.0)
    theta_grid: Optional[list[float]] = None


class SequentialBlock(_Strict):
    epsilon: float = 1e-4
    kappa0_init: float = 0.5
    channel: str = "p"
    channel_cycle: list[str] = ["x", "d", "p"]
    channel_weights: list[float] = [1 / 3, 1 / 3, 1 / 3]
    alpha: float | list[float] = 0.05
    n: int = 1
    poisson_lambda: Optional[float] = None
    max_studies: int = 2000
    runs: int = Field(1, ge=1)

    def config(self) -> SequentialConfig:
        alpha = tuple(self.alpha) if isinstance(self.alpha, list) else self.alpha
        return SequentialConfig(self.epsilon, self.kappa0_init, self.channel, tuple(self.channel_cycle),
                                tuple(self.channel_weights), alpha, self.n, self.poisson_lambda, self.max_studies)


class ReplicateBlock(_Strict):
    scientists: int = Field(100, ge=1)
    lam: Optional[float] = None  # no default: every scenario must state it
    alpha: float = 0.05
    kappa0_init: float = 0.5
    runs: int = Field(1, ge=1)


class GateBlock(_Strict):
    kind: Literal["decision", "step", "exponential", "table"] = "decision"
    eta0: float = 0.0
    eta1: float = 1.0
    cutoff: Optional[float] = None
    beta: Optional[float] = None
    edges: list[float] = []
    values: list[float] = []

    def gate(self):
        if self.kind == "decision":
            return DecisionGate(self.eta0, self.eta1)
        return PValueGate(self.kind, self.cutoff, self.beta, tuple(self.edges), tuple(self.values))


class BiasBlock(_Strict):
    gate: GateBlock = GateBlock()
    sequential: SequentialBlock = SequentialBlock(channel="d")


class LosBlock(_Strict):
    C00: float = 0.0
    C01: float = 1.0
    C10: float = 1.0
    C11: float = 0.0
    kappa0: float = 0.5
    points: int = Field(101, ge=3)

    def costs(self) -> CostMatrix:
        return CostMatrix(self.C00, self.C01, self.C10, self.C11)


class SampleSizeBlock(_Strict):
    b: float = 6.0
    xi: Optional[float] = None
    mu_diff: Optional[float] = None
    sigma: float = 1.0
    method: Literal["discrimination", "minimax", "bayes"] = "discrimination"


class ProfileBlock(_Strict):
    effect_range: tuple[float, float] = (0.1, 3.0)
    logit_range: tuple[float, float] = (-7.0, 0.0)
    resolution: int = Field(60, ge=2)
    d: Optional[Literal[0, 1]] = None


class Scenario(_Strict):
    model: ModelSpec = ModelSpec()
    truth: Literal["H0", "H1"] = "H0"
    seed: int = Field(0, ge=0)
    out: str = "out"
    jobs: int = Field(1, ge=1)
    roc: RocBlock = RocBlock()
    tea: TeaBlock = TeaBlock()
    replicate: ReplicateBlock = ReplicateBlock()
    sequential: SequentialBlock = SequentialBlock()
    bias: BiasBlock = BiasBlock()
    los: LosBlock = LosBlock()
    sample_size: SampleSizeBlock = SampleSizeBlock()
    profile: ProfileBlock = ProfileBlock()


def _set_path(doc: dict, dotted: str, value) -> None:
    keys = dotted.split(".")
    node = doc
    for k in keys[:-1]:
        node = node.setdefault(k, {})
        if not isinstance(node, dict):
            raise DomainError(f"cannot set {dotted!r}: {k!r} is not a section")
    node[keys[-1]] = value


def parse_value(text: str):
    """JSON literal if it parses, otherwise the raw string."""
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def load_scenario(path=None, overrides: dict | None = None) -> Scenario:
    """Read the JSON scenario (or start from defaults) and apply dotted-key overrides."""
    doc = {}
    if path is not None:
        text = Path(path).read_text(encoding="utf-8")
        doc = json.loads(text)
        if not isinstance(doc, dict):
            raise DomainError("a scenario must be a JSON object")
    for key, value in (overrides or {}).items():
        if value is not None:
            _set_path(doc, key, value)
    return Scenario.model_validate(doc)
