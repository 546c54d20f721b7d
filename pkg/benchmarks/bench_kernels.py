"""Time the numba kernels against the numpy reference path.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Each kernel is called once first so compilation is excluded from the timings.
Prints best-of-repeat wall time per call, the speedup and the largest absolute
difference between the two backends.
"""
import argparse
import timeit

import numpy as np

from nptruth import _kernels
from nptruth.distributions import _chi_nodes


def cases(rng):
    x = rng.normal(1.0, 2.0, 20_000)
    nodes, weights = _chi_nodes(18.0)
    n = rng.poisson(10, 5_000) + 5
    xs = rng.normal(0.0, 5.0, (n.size, n.max()))
    ys = rng.normal(2.0, 5.0, (n.size, n.max()))
    inc = rng.normal(-0.01, 0.3, 200_000)
    return {
        "chi_mixture_cdf": (x, 18.0, 1.4, nodes, weights),
        "chi_mixture_sf": (x, 18.0, 1.4, nodes, weights),
        "chi_mixture_pdf": (x, 18.0, 1.4, nodes, weights),
        "pooled_t_rows": (xs, ys, n),
        "first_exit": (inc, 0.0, 1e9),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if _kernels.numba_impl is None:
        print("numba is not importable; only the numpy path is available")
        return 1
    rng = np.random.default_rng(12345)
    print(f"{'kernel':<18}{'numpy ms':>12}{'numba ms':>12}{'speedup':>10}{'max |diff|':>14}")
    for name, call_args in cases(rng).items():
        ref = getattr(_kernels.numpy_impl, name)
        fast = getattr(_kernels.numba_impl, name)
        a, b = ref(*call_args), fast(*call_args)  # warm-up and compile
        if name == "first_exit":
            diff = float(np.max(np.abs(a[0] - b[0]))) if a[1] == b[1] else float("inf")
        else:
            diff = float(np.max(np.abs(np.asarray(a) - np.asarray(b))))
        t_ref = min(timeit.repeat(lambda: ref(*call_args), number=1, repeat=args.repeat)) * 1e3
        t_fast = min(timeit.repeat(lambda: fast(*call_args), number=1, repeat=args.repeat)) * 1e3
        print(f"{name:<18}{t_ref:>12.3f}{t_fast:>12.3f}{t_ref / t_fast:>10.1f}{diff:>14.2e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
