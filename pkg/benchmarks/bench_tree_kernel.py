#!/usr/bin/env python3
"""Benchmark the compiled tree-growth kernel against the numpy fallback.

The two implementations are bit-identical (verified here on every case);
the benchmark reports wall time per tree and the speedup at sizes typical
of the local GBT suite (a few hundred samples, <= 10 features).
"""

import argparse
import time

import numpy as np

from ghicast._core import treebuild_np

try:
    from ghicast._core import _treebuild_cy
except ImportError:
    _treebuild_cy = None


def time_impl(grow, x, r, depth, min_leaf, repeats):
    best = float("inf")
    result = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        result = grow(x, r, depth, min_leaf)
        best = min(best, time.perf_counter() - t0)
    return best, result


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", type=int, nargs="+", default=[100, 300, 600, 2000, 8000])
    parser.add_argument("--features", type=int, default=8)
    parser.add_argument("--depth", type=int, default=3)
    parser.add_argument("--min-leaf", type=int, default=20)
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    if _treebuild_cy is None:
        print("compiled kernel not built (pip install -e . --no-build-isolation); "
              "benchmarking fallback only")

    rng = np.random.default_rng(args.seed)
    print(f"{'n':>7} {'d':>3} {'numpy ms':>10} {'cython ms':>10} {'speedup':>8}  identical")
    for n in args.sizes:
        x = rng.normal(size=(n, args.features))
        r = rng.normal(size=n)
        t_np, out_np = time_impl(treebuild_np.grow_tree, x, r, args.depth, args.min_leaf,
                                 args.repeats)
        if _treebuild_cy is None:
            print(f"{n:>7} {args.features:>3} {t_np * 1e3:>10.2f} {'-':>10} {'-':>8}")
            continue
        t_cy, out_cy = time_impl(_treebuild_cy.grow_tree, x, r, args.depth, args.min_leaf,
                                 args.repeats)
        same = all(np.array_equal(a, b) for a, b in zip(out_np, out_cy))
        print(f"{n:>7} {args.features:>3} {t_np * 1e3:>10.2f} {t_cy * 1e3:>10.2f} "
              f"{t_np / t_cy:>7.1f}x  {same}")
        if not same:
            raise SystemExit("implementations diverged; do not trust the numbers")


if __name__ == "__main__":
    main()
