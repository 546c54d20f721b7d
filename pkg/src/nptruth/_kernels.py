"""Hot numeric loops, each in two flavours.

The numba versions are used when numba imports cleanly and the environment
variable ``NPTRUTH_DISABLE_NUMBA`` is unset (or ``0``).  The numpy versions are
the reference path and must agree with the compiled ones to rounding.

Kernels
-------
chi_mixture_cdf / chi_mixture_sf / chi_mixture_pdf
    Noncentral t integrals written as finite mixtures over quadrature nodes
    of the chi variable ``s = sqrt(V)``.
pooled_t_rows
    Pooled two-sample t statistic for ragged rows of a padded sample matrix.
first_exit
    Running log-odds path and the first index where it leaves ``[-bound, bound]``.
"""
from __future__ import annotations

import math
import os

import numpy as np
from scipy import special

_SQRT2 = math.sqrt(2.0)
_INV_SQRT2PI = 1.0 / math.sqrt(2.0 * math.pi)


def _flag_disabled():
    return os.environ.get("NPTRUTH_DISABLE_NUMBA", "0").strip().lower() not in ("", "0", "false", "no")


# ---------------------------------------------------------------- numpy path


class numpy_impl:
    @staticmethod
    def chi_mixture_cdf(x, df, ncp, nodes, weights):
        z = np.multiply.outer(x, nodes) / math.sqrt(df) - ncp
        return (0.5 * special.erfc(-z / _SQRT2)) @ weights

    @staticmethod
    def chi_mixture_sf(x, df, ncp, nodes, weights):
        z = ncp - np.multiply.outer(x, nodes) / math.sqrt(df)
        return (0.5 * special.erfc(-z / _SQRT2)) @ weights

    @staticmethod
    def chi_mixture_pdf(x, df, ncp, nodes, weights):
        scale = nodes / math.sqrt(df)
        z = np.multiply.outer(x, scale) - ncp
        return (np.exp(-0.5 * z * z) * _INV_SQRT2PI * scale) @ weights

    @staticmethod
    def pooled_t_rows(x, y, n):
        n = np.asarray(n)
        mask = np.arange(x.shape[1])[None, :] < n[:, None]
        nf = n.astype(np.float64)
        mx = np.where(mask, x, 0.0).sum(axis=1) / nf
        my = np.where(mask, y, 0.0).sum(axis=1) / nf
        dx = np.where(mask, x - mx[:, None], 0.0)
        dy = np.where(mask, y - my[:, None], 0.0)
        s2 = 0.5 * ((dx * dx).sum(axis=1) + (dy * dy).sum(axis=1)) / (nf - 1.0)
        return (my - mx) / np.sqrt(s2 * 2.0 / nf)

    @staticmethod
    def first_exit(increments, start, bound):
        path = np.cumsum(np.concatenate(([start], increments)))[1:]
        hit = np.flatnonzero(np.abs(path) > bound)
        return path, (int(hit[0]) if hit.size else -1)


# ---------------------------------------------------------------- numba path

try:
    import numba as _nb
except ImportError:  # pragma: no cover - exercised only without numba
    _nb = None


if _nb is not None:

    @_nb.njit(cache=True)
    def _chi_mixture_cdf(x, df, ncp, nodes, weights):
        out = np.empty(x.shape[0])
        rk = 1.0 / math.sqrt(df)
        for i in range(x.shape[0]):
            acc = 0.0
            for j in range(nodes.shape[0]):
                z = x[i] * nodes[j] * rk - ncp
                acc += weights[j] * 0.5 * math.erfc(-z / _SQRT2)
            out[i] = acc
        return out

    @_nb.njit(cache=True)
    def _chi_mixture_sf(x, df, ncp, nodes, weights):
        out = np.empty(x.shape[0])
        rk = 1.0 / math.sqrt(df)
        for i in range(x.shape[0]):
            acc = 0.0
            for j in range(nodes.shape[0]):
                z = ncp - x[i] * nodes[j] * rk
                acc += weights[j] * 0.5 * math.erfc(-z / _SQRT2)
            out[i] = acc
        return out

    @_nb.njit(cache=True)
    def _chi_mixture_pdf(x, df, ncp, nodes, weights):
        out = np.empty(x.shape[0])
        rk = 1.0 / math.sqrt(df)
        for i in range(x.shape[0]):
            acc = 0.0
            for j in range(nodes.shape[0]):
                sc = nodes[j] * rk
                z = x[i] * sc - ncp
                acc += weights[j] * math.exp(-0.5 * z * z) * _INV_SQRT2PI * sc
            out[i] = acc
        return out

    @_nb.njit(cache=True)
    def _pooled_t_rows(x, y, n):
        m = x.shape[0]
        out = np.empty(m)
        for i in range(m):
            k = n[i]
            mx = 0.0
            my = 0.0
            for j in range(k):
                mx += x[i, j]
                my += y[i, j]
            mx /= k
            my /= k
            ssx = 0.0
            ssy = 0.0
            for j in range(k):
                ssx += (x[i, j] - mx) ** 2
                ssy += (y[i, j] - my) ** 2
            s2 = 0.5 * (ssx + ssy) / (k - 1.0)
            out[i] = (my - mx) / math.sqrt(s2 * 2.0 / k)
        return out

    @_nb.njit(cache=True)
    def _first_exit(increments, start, bound):
        path = np.empty(increments.shape[0])
        acc = start
        stop = -1
        for i in range(increments.shape[0]):
            acc += increments[i]
            path[i] = acc
            if stop < 0 and abs(acc) > bound:
                stop = i
        return path, stop

    class numba_impl:
        @staticmethod
        def chi_mixture_cdf(x, df, ncp, nodes, weights):
            return _chi_mixture_cdf(np.ascontiguousarray(x, dtype=np.float64), float(df), float(ncp), nodes, weights)

        @staticmethod
        def chi_mixture_sf(x, df, ncp, nodes, weights):
            return _chi_mixture_sf(np.ascontiguousarray(x, dtype=np.float64), float(df), float(ncp), nodes, weights)

        @staticmethod
        def chi_mixture_pdf(x, df, ncp, nodes, weights):
            return _chi_mixture_pdf(np.ascontiguousarray(x, dtype=np.float64), float(df), float(ncp), nodes, weights)

        @staticmethod
        def pooled_t_rows(x, y, n):
            return _pooled_t_rows(
                np.ascontiguousarray(x, dtype=np.float64),
                np.ascontiguousarray(y, dtype=np.float64),
                np.ascontiguousarray(n, dtype=np.int64),
            )

        @staticmethod
        def first_exit(increments, start, bound):
            path, stop = _first_exit(np.ascontiguousarray(increments, dtype=np.float64), float(start), float(bound))
            return path, int(stop)

else:  # pragma: no cover
    numba_impl = None


def backend_name():
    return "numpy" if (numba_impl is None or _flag_disabled()) else "numba"


def active():
    """The kernel namespace selected by the environment at call time."""
    return numpy_impl if backend_name() == "numpy" else numba_impl
