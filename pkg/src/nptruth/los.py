"""Choosing the level of significance, and the sample size, from the ROC.

Three criteria, each generic over anything exposing ``roc`` and ``roc_deriv``:

* minimax: equalise the two risks, ``rho(a) + R1 a - R0 = 0``
* Bayes: minimise ``kappa0 R0 + (1 - kappa0) R1``, i.e. ``rho'(a) = R3``
* discrimination: maximise ``D(a) = (rho - a) log[rho (1 - a) / (a (1 - rho))]``,
  the gap between the alternative and null means of the decision log LR

The one-sample normal model has closed forms for the Bayes level, the
discrimination level and the sample size; those are used directly and the
generic solvers serve as cross-checks.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .distributions import norm_cdf, norm_quantile, norm_sf
from .errors import DomainError, SolverError
from .models import NormalFamily, OneSampleNormal
from .roots import golden_section_max, newton_bisect


@dataclass(frozen=True)
class CostMatrix:
    """``Cij`` is the cost of deciding for hypothesis j when hypothesis i is true."""

    C00: float = 0.0
    C01: float = 1.0
    C10: float = 1.0
    C11: float = 0.0

    def __post_init__(self):
        vals = (self.C00, self.C01, self.C10, self.C11)
        if any(not (math.isfinite(c) and c >= 0) for c in vals):
            raise DomainError("costs must be finite and nonnegative")
        if not self.C01 > self.C00:
            raise DomainError("need C01 > C00 (a false rejection must cost more than a correct acceptance)")
        if not self.C10 > self.C11:
            raise DomainError("need C10 > C11 (a missed effect must cost more than a detected one)")

    @property
    def R0(self) -> float:
        return (self.C10 - self.C00) / (self.C10 - self.C11)

    @property
    def R1(self) -> float:
        return (self.C01 - self.C00) / (self.C10 - self.C11)

    @property
    def R2(self) -> float:
        return (self.C01 - self.C11) / (self.C10 - self.C11)

    def R3(self, kappa0: float) -> float:
        if not (0.0 < kappa0 < 1.0):
            raise DomainError("kappa0 must lie strictly inside (0, 1)")
        return kappa0 / (1.0 - kappa0) * self.R1


@dataclass(frozen=True)
class LosSolution:
    alpha_star: float
    power_at_alpha: float
    method: str
    iterations: int = 0
    residual: float = 0.0
    flags: tuple = ()
    diagnostics: dict = field(default_factory=dict)


def _rho(roc, a):
    return float(roc.roc(a))


def _log_rho_prime(roc, a):
    if hasattr(roc, "log_roc_deriv"):
        return float(roc.log_roc_deriv(a))
    with np.errstate(divide="ignore"):
        return float(np.log(roc.roc_deriv(a)))


def check_concave(roc, points: int = 257, tol: float = 1e-12) -> bool:
    """Midpoint concavity of the ROC on a uniform grid (including the endpoints)."""
    a = np.linspace(0.0, 1.0, points)
    r = np.asarray(roc.roc(a), dtype=float)
    return bool(np.all(r[1:-1] + tol >= 0.5 * (r[:-2] + r[2:])))


# ---------------------------------------------------------------- minimax


def solve_minimax(roc, costs: CostMatrix, tol: float = 1e-10) -> LosSolution:
    """Level at which the null and alternative risks coincide."""
    if costs.C11 >= costs.C01:
        return LosSolution(1.0, 1.0, "minimax", flags=("boundary",))
    if costs.C00 >= costs.C10:
        return LosSolution(0.0, 0.0, "minimax", flags=("boundary",))
    if not check_concave(roc):
        raise SolverError("ROC is not concave; risk curves may cross more than once")
    R0, R1 = costs.R0, costs.R1

    def f(a):
        return _rho(roc, a) + R1 * a - R0

    fprime = None
    if not getattr(roc, "discrete", False):
        fprime = lambda a: float(roc.roc_deriv(a)) + R1 if 0.0 < a < 1.0 else float("nan")
    res = newton_bisect(f, 0.0, 1.0, fprime=fprime, xtol=1e-15)
    if abs(res.residual) > tol:
        raise SolverError("minimax residual above tolerance", alpha=res.x, residual=res.residual)
    return LosSolution(res.x, _rho(roc, res.x), "minimax", res.iterations, res.residual)


# ---------------------------------------------------------------- Bayes


_EDGE = 1e-15


def _bayes_step(roc, r3):
    """Finite problems: the Bayes risk is piecewise linear in the level, minimised at a kink."""
    kinks = sorted({float(roc.null_tail(s)) for s in roc.support} | {0.0, 1.0})
    best = None
    for lo, hi in zip(kinks[:-1], kinks[1:]):
        slope = float(roc.roc_deriv(0.5 * (lo + hi)))
        if slope < r3:
            best = lo
            break
    a = 1.0 if best is None else best
    return LosSolution(a, _rho(roc, a), "bayes", flags=("step",), diagnostics={"R3": r3})


def solve_bayes(roc, costs: CostMatrix, kappa0: float, tol: float = 1e-10) -> LosSolution:
    """Level where the ROC slope equals ``R3 = kappa0/(1-kappa0) R1``.

    Outside the slope range the Bayes risk is monotone and the answer is an
    endpoint; the solution is then flagged ``clamped``.
    """
    r3 = costs.R3(kappa0)
    log_r3 = math.log(r3)
    if getattr(roc, "discrete", False):
        return _bayes_step(roc, r3)
    hi_slope = _log_rho_prime(roc, _EDGE)
    lo_slope = _log_rho_prime(roc, 1.0 - _EDGE)
    if log_r3 >= hi_slope:
        return LosSolution(0.0, 0.0, "bayes", flags=("clamped",), diagnostics={"R3": r3, "slope_range": (lo_slope, hi_slope)})
    if log_r3 <= lo_slope:
        return LosSolution(1.0, 1.0, "bayes", flags=("clamped",), diagnostics={"R3": r3, "slope_range": (lo_slope, hi_slope)})
    g = lambda a: _log_rho_prime(roc, a) - log_r3
    res = newton_bisect(g, _EDGE, 1.0 - _EDGE, xtol=1e-16)
    generic = res.x
    flags = ()
    diag = {"R3": r3, "generic_alpha": generic}
    if isinstance(roc, OneSampleNormal) and roc.shift > 0:
        d = roc.shift
        a = float(norm_cdf(-0.5 * d - log_r3 / d))
        diag["closed_form_alpha"] = a
        flags = ("closed-form",)
    else:
        a = generic
    residual = abs(math.exp(_log_rho_prime(roc, a)) - r3)
    if residual > tol * max(1.0, r3):
        raise SolverError("Bayes slope equation not solved to tolerance", alpha=a, residual=residual)
    return LosSolution(a, _rho(roc, a), "bayes", res.iterations, residual, flags, diag)


# ---------------------------------------------------------------- discrimination


def discrimination(roc, alpha):
    """``D(a) = (rho - a) log[(rho/a)(1-a)/(1-rho)]``; zero at the endpoints."""
    a = np.asarray(alpha, dtype=float)
    r = np.asarray(roc.roc(a), dtype=float)
    # a power that rounded to exactly 0 or 1 is nudged inside so D stays finite near the ends
    r = np.where((r >= 1.0) & (a < 1.0), np.nextafter(1.0, 0.0), r)
    r = np.where((r <= 0.0) & (a > 0.0), np.nextafter(0.0, 1.0), r)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_or = np.log(r) - np.log(a) + np.log1p(-a) - np.log1p(-r)
        out = (r - a) * log_or
    out = np.where((a <= 0.0) | (a >= 1.0) | (r == a), 0.0, out)
    return out if out.ndim else float(out)


def discrimination_deriv(roc, alpha: float) -> float:
    a = float(alpha)
    r = _rho(roc, a)
    rp = float(roc.roc_deriv(a))
    log_or = math.log(r) - math.log(a) + math.log1p(-a) - math.log1p(-r)
    return (rp - 1.0) * log_or + (r - a) * (rp / (r * (1.0 - r)) - 1.0 / (a * (1.0 - a)))


_SCAN = np.unique(np.concatenate([np.logspace(-12, -3, 46), np.linspace(1e-3, 1 - 1e-3, 999)]))


def _search_discrimination(roc, xtol):
    vals = np.asarray(discrimination(roc, _SCAN))
    k = int(np.argmax(vals))
    if not vals[k] > 1e-14:
        raise SolverError("no discrimination: D is flat (the ROC equals the diagonal)", max_D=float(vals[k]))
    lo = _SCAN[max(k - 1, 0)]
    hi = _SCAN[min(k + 1, _SCAN.size - 1)]
    x, _, iters = golden_section_max(lambda a: float(discrimination(roc, a)), lo, hi, xtol=xtol)
    flags = ("golden",)
    if not getattr(roc, "discrete", False):
        dlo, dhi = discrimination_deriv(roc, lo), discrimination_deriv(roc, hi)
        if dlo > 0 > dhi:
            res = newton_bisect(lambda a: discrimination_deriv(roc, a), lo, hi, xtol=1e-16)
            x, iters, flags = res.x, iters + res.iterations, ("golden", "polished")
    return float(x), iters, flags


def solve_discrimination(roc, closed_form: bool = True, xtol: float = 1e-12) -> LosSolution:
    """Maximiser of ``D``: coarse scan, golden section, then a root polish of ``D'``.

    For the one-sample normal model (with ``closed_form``) the returned level is
    the stationary point ``Phi(-xi sqrt(n)/2)``, where the ROC slope is one.
    That point is the global maximiser only while ``xi sqrt(n)`` is below about
    4.1476; beyond it ``D`` turns bimodal, the stationary point becomes a local
    minimum and the solution carries the flag ``stationary-not-maximum`` with the
    searched maximiser in ``diagnostics['search_alpha']``.
    """
    x, iters, flags = _search_discrimination(roc, xtol)
    residual = abs(discrimination_deriv(roc, x)) if "polished" in flags else 0.0
    d_search = float(discrimination(roc, x))
    diag = {"D": d_search, "search_alpha": x}
    if closed_form and isinstance(roc, OneSampleNormal):
        a = roc.crossing_level()
        d_closed = float(discrimination(roc, a))
        diag.update(D=d_closed, closed_form_alpha=a, search_D=d_search)
        flags = ("closed-form",)
        if d_search > d_closed * (1.0 + 1e-12):
            flags += ("stationary-not-maximum",)
        return LosSolution(a, _rho(roc, a), "discrimination", iters, abs(discrimination_deriv(roc, a)), flags, diag)
    return LosSolution(x, _rho(roc, x), "discrimination", iters, residual, flags, diag)


# ---------------------------------------------------------------- risks


@dataclass
class RiskTable:
    alpha: np.ndarray
    R0: np.ndarray
    R1: np.ndarray
    bayes: np.ndarray
    kappa0: float

    def rows(self):
        return zip(self.alpha, self.R0, self.R1, self.bayes)


def risk_curves(roc, costs: CostMatrix, alpha_grid, kappa0: float = 0.5) -> RiskTable:
    """``R0 = C00(1-a) + C01 a``, ``R1 = C10(1-rho) + C11 rho`` and their kappa0-mixture."""
    a = np.asarray(alpha_grid, dtype=float)
    if np.any((a < 0.0) | (a > 1.0)):
        raise DomainError("alpha grid must lie in [0, 1]")
    if not (0.0 < kappa0 < 1.0):
        raise DomainError("kappa0 must lie strictly inside (0, 1)")
    r = np.asarray(roc.roc(a), dtype=float)
    r0 = costs.C00 * (1.0 - a) + costs.C01 * a
    r1 = costs.C10 * (1.0 - r) + costs.C11 * r
    return RiskTable(a, r0, r1, kappa0 * r0 + (1.0 - kappa0) * r1, kappa0)


# ---------------------------------------------------------------- sample size


@dataclass(frozen=True)
class SampleSizeResult:
    n_star: int
    n_bar: float | None
    alpha_design: float | None
    rho_design: float | None
    alpha_at_n: float
    rho_at_n: float
    log_odds_ratio_at_n: float
    method: str


def log_odds_ratio(alpha: float, rho: float) -> float:
    return math.log(rho) - math.log1p(-rho) - (math.log(alpha) - math.log1p(-alpha))


def _optimal_level(problem, method, costs, kappa0):
    if method == "discrimination":
        return solve_discrimination(problem).alpha_star
    if costs is None:
        raise DomainError(f"method {method!r} needs a cost matrix")
    if method == "minimax":
        return solve_minimax(problem, costs).alpha_star
    if method == "bayes":
        return solve_bayes(problem, costs, kappa0).alpha_star
    raise DomainError(f"unknown LoS method {method!r}")


def sample_size(b: float, xi: float | None = None, sigma: float = 1.0, mu_diff: float | None = None,
                family=None, method: str = "discrimination", costs: CostMatrix | None = None,
                kappa0: float = 0.5, n_max: int = 100_000) -> SampleSizeResult:
    """Smallest ``n`` whose optimal-level design reaches log odds ratio ``b``.

    Give the effect as ``xi`` or as ``mu_diff`` with ``sigma`` for the normal
    closed form (``method='discrimination'``), or a ``family`` (``n -> problem``)
    for the generic upward scan.
    """
    if not (b > 0 and math.isfinite(b)):
        raise DomainError("b must be positive")
    if family is None:
        if xi is None:
            if mu_diff is None:
                raise DomainError("give xi, mu_diff, or a model family")
            if not sigma > 0:
                raise DomainError("sigma must be positive")
            xi = mu_diff / sigma
        if not xi > 0:
            raise DomainError("the effect size must be positive")
        if method == "discrimination":
            e = math.exp(0.5 * b)
            rho_d = e / (1.0 + e)
            alpha_d = 1.0 / (1.0 + e)
            n_bar = 4.0 * norm_quantile(rho_d) ** 2 / xi**2
            n_star = max(1, math.ceil(n_bar))
            prob = OneSampleNormal.from_effect(xi, n_star)
            a_n = prob.crossing_level()
            r_n = float(norm_sf(-0.5 * prob.shift))
            return SampleSizeResult(n_star, n_bar, alpha_d, rho_d, a_n, r_n, log_odds_ratio(a_n, r_n), "closed-form")
        family = NormalFamily(xi)
    for n in range(1, int(n_max) + 1):
        try:
            prob = family(n)
        except DomainError:
            continue
        a = _optimal_level(prob, method, costs, kappa0)
        if not (0.0 < a < 1.0):
            continue
        r = _rho(prob, a)
        if r >= 1.0:
            return SampleSizeResult(n, None, None, None, a, r, math.inf, "scan")
        lor = log_odds_ratio(a, r)
        if lor >= b:
            return SampleSizeResult(n, None, None, None, a, r, lor, "scan")
    raise SolverError("sample-size scan passed n_max without reaching the bound", b=b, n_max=n_max)


# ---------------------------------------------------------------- Table 1


TABLE1_SETTINGS = [
    (i + 1, c01, 1.0, k0, n, xi)
    for i, (c01, k0, n, xi) in enumerate(
        (c01, k0, n, xi) for c01 in (1.0, 10.0) for k0 in (0.5, 0.25) for n in (1, 5) for xi in (0.5, 1.0, 2.0)
    )
]


def table1_row(setting: int, c01: float, c10: float, kappa0: float, n: int, xi: float) -> dict:
    prob = OneSampleNormal.from_effect(xi, n)
    costs = CostMatrix(0.0, c01, c10, 0.0)
    return {
        "setting": setting,
        "C01": c01,
        "C10": c10,
        "kappa0": kappa0,
        "n": n,
        "xi": xi,
        "alpha_M": solve_minimax(prob, costs).alpha_star,
        "alpha_B": solve_bayes(prob, costs, kappa0).alpha_star,
        "alpha_D": solve_discrimination(prob).alpha_star,
    }


TABLE1_COLUMNS = ("setting", "C01", "C10", "kappa0", "n", "xi", "alpha_M", "alpha_B", "alpha_D")


def table1(settings=None) -> list[dict]:
    return [table1_row(*s) for s in (settings or TABLE1_SETTINGS)]
