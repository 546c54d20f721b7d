"""Scalar root finding and maximisation on a bracket."""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import SolverError

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class RootResult:
    x: float
    residual: float
    iterations: int


def newton_bisect(f, lo, hi, fprime=None, xtol=1e-15, ftol=0.0, maxiter=200):
    """Root of ``f`` on ``[lo, hi]`` by safeguarded Newton (secant if no ``fprime``).

    ``f(lo)`` and ``f(hi)`` must differ in sign.  A Newton/secant step that
    leaves the current bracket, or fails to halve it every other step, is
    replaced by bisection, so convergence is never slower than bisection.
    """
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return RootResult(lo, 0.0, 0)
    if fhi == 0.0:
        return RootResult(hi, 0.0, 0)
    if math.isnan(flo) or math.isnan(fhi) or (flo > 0) == (fhi > 0):
        raise SolverError("root not bracketed", lo=lo, hi=hi, f_lo=flo, f_hi=fhi)
    rising = fhi > 0
    x = lo - flo * (hi - lo) / (fhi - flo)
    if not lo < x < hi:
        x = 0.5 * (lo + hi)
    prev_width = hi - lo
    fx = f(x)
    for it in range(1, maxiter + 1):
        if fx == 0.0 or abs(fx) <= ftol:
            return RootResult(x, abs(fx), it)
        if (fx > 0) == rising:
            hi, fhi = x, fx
        else:
            lo, flo = x, fx
        width = hi - lo
        if width <= xtol * max(1.0, abs(x)):
            return RootResult(x, abs(fx), it)
        step = None
        if fprime is not None:
            d = fprime(x)
            if d and math.isfinite(d):
                step = x - fx / d
        if step is None:
            step = lo - flo * (hi - lo) / (fhi - flo)
        if not (lo < step < hi) or width > 0.5 * prev_width:
            step = 0.5 * (lo + hi)
        prev_width = width
        if step == x:
            return RootResult(x, abs(fx), it)
        x = step
        fx = f(x)
    raise SolverError("root finder exhausted its iterations", x=x, residual=fx, lo=lo, hi=hi)


def golden_section_max(f, lo, hi, xtol=1e-12, maxiter=500):
    """Maximiser of a unimodal ``f`` on ``[lo, hi]``."""
    a, b = lo, hi
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    it = 0
    while b - a > xtol * max(1.0, abs(c)) and it < maxiter:
        it += 1
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
    x = c if fc >= fd else d
    return x, max(fc, fd), it
