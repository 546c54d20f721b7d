"""Distribution numerics shared by every model.

Normal and central t functions lean on ``scipy.special``; the t quantile is a
bracketed bisection + Newton solve on the t tail, and the noncentral t is a
fixed Gauss-Legendre mixture over the chi variable ``s = sqrt(V)``::

    F(x; k, w) = E[ Phi(x * s / sqrt(k) - w) ],   s ~ chi_k

Counting distributions return exact ``Fraction`` values when the success
probability is rational (``Fraction`` or ``int``), floats otherwise.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from numbers import Rational

import numpy as np
from scipy import special

from . import _kernels
from .errors import DomainError

# ---------------------------------------------------------------- normal


def norm_cdf(z):
    return special.ndtr(z)


def norm_sf(z):
    return special.ndtr(np.negative(z))


def norm_pdf(z):
    z = np.asarray(z, dtype=float)
    out = np.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)
    return out if out.ndim else float(out)


def norm_quantile(p):
    """Inverse of ``norm_cdf`` on the open unit interval."""
    arr = np.asarray(p, dtype=float)
    if np.any((arr <= 0.0) | (arr >= 1.0)) or np.any(np.isnan(arr)):
        raise DomainError("norm_quantile requires p strictly inside (0, 1)")
    out = special.ndtri(arr)
    return out if out.ndim else float(out)


def norm_isf(a):
    """Upper-tail quantile: ``z`` with ``P(Z > z) = a``; accurate for tiny ``a``."""
    arr = np.asarray(a, dtype=float)
    if np.any((arr <= 0.0) | (arr >= 1.0)) or np.any(np.isnan(arr)):
        raise DomainError("norm_isf requires a strictly inside (0, 1)")
    out = -special.ndtri(arr)
    return out if out.ndim else float(out)


# ---------------------------------------------------------------- central t


def _check_df(df):
    arr = np.asarray(df, dtype=float)
    if not np.all(np.isfinite(arr) & (arr > 0)):
        raise DomainError(f"degrees of freedom must be positive and finite, got {df!r}")


def t_cdf(x, df):
    _check_df(df)
    out = special.stdtr(df, x)
    return out if np.ndim(out) else float(out)


def t_sf(x, df):
    _check_df(df)
    out = special.stdtr(df, -np.asarray(x, dtype=float))
    return out if np.ndim(out) else float(out)


def t_logpdf(x, df):
    _check_df(df)
    x = np.asarray(x, dtype=float)
    c = special.gammaln((df + 1) / 2) - special.gammaln(df / 2) - 0.5 * np.log(np.asarray(df, dtype=float) * math.pi)
    return c - (df + 1) / 2 * np.log1p(x * x / df)


def t_pdf(x, df):
    out = np.exp(t_logpdf(x, df))
    return out if out.ndim else float(out)


def _t_isf_solve(a, df, tol):
    """Vectorised solve of ``t_sf(x) = a`` for ``a`` in (0, 1/2], ``x >= 0``."""
    a = np.asarray(a, dtype=float)
    lo = np.zeros_like(a)
    hi = np.maximum(norm_isf(a) * 2.0, 1.0)
    while True:
        short = t_sf(hi, df) > a
        if not np.any(short):
            break
        hi = np.where(short, hi * 2.0, hi)
    for _ in range(40):
        mid = 0.5 * (lo + hi)
        above = t_sf(mid, df) > a
        lo = np.where(above, mid, lo)
        hi = np.where(above, hi, mid)
    x = 0.5 * (lo + hi)
    log_a = np.log(a)
    for _ in range(50):
        sf = t_sf(x, df)
        g = np.log(sf) - log_a
        step = g * sf / t_pdf(x, df)
        x_new = np.clip(x + step, lo, hi)
        done = np.all(np.abs(x_new - x) <= 4e-16 * (1.0 + np.abs(x)))
        x = x_new
        if done:
            break
    if np.any(np.abs(t_sf(x, df) - a) > tol * np.maximum(a, 1e-300) + tol * 1e-6):
        raise DomainError("t quantile solve did not converge")
    return x


def t_isf(a, df, tol=1e-10):
    """Upper-tail t quantile ``x`` with ``t_sf(x, df) = a``."""
    _check_df(df)
    arr = np.atleast_1d(np.asarray(a, dtype=float))
    if np.any((arr <= 0.0) | (arr >= 1.0)) or np.any(np.isnan(arr)):
        raise DomainError("t_isf requires a strictly inside (0, 1)")
    out = np.empty_like(arr)
    upper = arr <= 0.5
    if np.any(upper):
        out[upper] = _t_isf_solve(arr[upper], df, tol)
    if np.any(~upper):
        out[~upper] = -_t_isf_solve(1.0 - arr[~upper], df, tol)
    return out if np.ndim(a) else float(out[0])


def t_quantile(p, df, tol=1e-10):
    """Inverse of ``t_cdf``; ``t_cdf(t_quantile(p)) = p`` to ``tol``."""
    _check_df(df)
    arr = np.atleast_1d(np.asarray(p, dtype=float))
    if np.any((arr <= 0.0) | (arr >= 1.0)) or np.any(np.isnan(arr)):
        raise DomainError("t_quantile requires p strictly inside (0, 1)")
    out = np.empty_like(arr)
    low = arr < 0.5
    if np.any(low):
        out[low] = -_t_isf_solve(arr[low], df, tol)
    if np.any(~low):
        out[~low] = _t_isf_solve(1.0 - arr[~low], df, tol)
    return out if np.ndim(p) else float(out[0])


# ---------------------------------------------------------------- noncentral t


@dataclass(frozen=True)
class TDistParams:
    df: float
    ncp: float = 0.0

    def __post_init__(self):
        _check_df(self.df)
        if not np.isfinite(self.ncp):
            raise DomainError(f"noncentrality must be finite, got {self.ncp!r}")


_GL_ORDER = 48


@lru_cache(maxsize=256)
def _chi_nodes(df: float):
    """Quadrature nodes/weights for the chi_df law of ``s = sqrt(V)``."""
    root = math.sqrt(df)
    hi = root + 10.0
    lo = max(0.0, root - 10.0)
    if lo == 0.0:
        # geometric panels resolve s**(df-1) near the origin for small df
        edges = [0.0] + [hi * 2.0 ** -j for j in range(12, 0, -1)] + [hi]
        edges = sorted(set(edges))
    else:
        edges = list(np.linspace(lo, hi, 9))
    x, w = np.polynomial.legendre.leggauss(_GL_ORDER)
    nodes, weights = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        half = 0.5 * (b - a)
        nodes.append(a + half * (x + 1.0))
        weights.append(half * w)
    s = np.concatenate(nodes)
    w = np.concatenate(weights)
    log_f = (df - 1.0) * np.log(s) - 0.5 * s * s - (0.5 * df - 1.0) * math.log(2.0) - special.gammaln(0.5 * df)
    w = w * np.exp(log_f)
    w = w / w.sum()
    s.setflags(write=False)
    w.setflags(write=False)
    return s, w


def _as_params(params, ncp):
    if isinstance(params, TDistParams):
        return params
    return TDistParams(float(params), float(ncp))


def _mixture(kernel_name, x, params):
    s, w = _chi_nodes(float(params.df))
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    fn = getattr(_kernels.active(), kernel_name)
    out = fn(arr.ravel(), params.df, params.ncp, s, w).reshape(arr.shape)
    if kernel_name != "chi_mixture_pdf":
        out = np.clip(out, 0.0, 1.0)  # weight round-off can overshoot by an ulp
    return out if np.ndim(x) else float(out[0])


def nct_cdf(x, params, ncp=None):
    """Noncentral t cdf; ``params`` is a ``TDistParams`` or ``df`` with ``ncp`` given."""
    p = _as_params(params, ncp if ncp is not None else 0.0)
    return _mixture("chi_mixture_cdf", x, p)


def nct_sf(x, params, ncp=None):
    p = _as_params(params, ncp if ncp is not None else 0.0)
    return _mixture("chi_mixture_sf", x, p)


def nct_pdf(x, params, ncp=None):
    p = _as_params(params, ncp if ncp is not None else 0.0)
    return _mixture("chi_mixture_pdf", x, p)


# ---------------------------------------------------------------- counts


def _is_exact(theta):
    return isinstance(theta, Rational)


def binom_pmf(s: int, n: int, theta):
    if not (0 <= s <= n):
        raise DomainError(f"count {s} outside support 0..{n}")
    if not (0 <= theta <= 1):
        raise DomainError("theta must lie in [0, 1]")
    if _is_exact(theta):
        theta = Fraction(theta)
        return math.comb(n, s) * theta**s * (1 - theta) ** (n - s)
    return math.comb(n, s) * float(theta) ** s * (1.0 - float(theta)) ** (n - s)


def hypergeom4_pmf(t: int) -> Fraction:
    """Null law of the number of correctly chosen cups among four, as a ``Fraction``."""
    if not (0 <= t <= 4):
        raise DomainError(f"count {t} outside support 0..4")
    return Fraction(math.comb(4, t) * math.comb(4, 4 - t), math.comb(8, 4))


def theta_tea_pmf(t: int, theta):
    """Law of the cup count when each cup is judged correctly with probability ``theta``."""
    if not (0 <= t <= 4):
        raise DomainError(f"count {t} outside support 0..4")
    if not (0 <= theta <= 1):
        raise DomainError("theta must lie in [0, 1]")
    if _is_exact(theta):
        theta = Fraction(theta)
        one = Fraction(1)
    else:
        theta = float(theta)
        one = 1.0
    # common factor (1 - theta)^4 removed so that theta = 1 stays well defined
    terms = [math.comb(4, j) ** 2 * theta**j * (one - theta) ** (4 - j) for j in range(5)]
    return terms[t] / sum(terms)


def poisson_sample(lam: float, rng, size=None):
    if not (np.isfinite(lam) and lam > 0):
        raise DomainError(f"Poisson mean must be positive, got {lam!r}")
    return rng.poisson(lam, size)
