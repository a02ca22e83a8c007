#!/usr/bin/env python3
"""Benchmark the numba and numpy search-kernel lanes on identical tables.

Usage: python benchmarks/bench_kernels.py [--trials N] [--repeats R]

Builds the standard 5-level layout (248 measurement slots, 128 finest
pairs), fills random measurement tables, and times both lanes for the
exhaustive and hierarchical evaluations.  Outputs are checked to be
bit-identical before timing.
"""

import argparse
import time

import numpy as np

from beamalign import _kernels as kernels
from beamalign._engine import make_layout
from beamalign.arrays import AngleInterval, UniformLinearArray
from beamalign.codebook import build_hierarchical_codebook


def build(trials, rng):
    tx = build_hierarchical_codebook(UniformLinearArray(64),
                                     AngleInterval(-0.5, 0.5), [2, 4, 8, 16, 32])
    rx = build_hierarchical_codebook(UniformLinearArray(4),
                                     AngleInterval(-1.0, 1.0), [4])
    layout = make_layout(tx, rx)
    h = rng.standard_normal((trials, layout.total)) \
        + 1j * rng.standard_normal((trials, layout.total))
    zeta = (rng.standard_normal((trials, layout.total))
            + 1j * rng.standard_normal((trials, layout.total))) / np.sqrt(2)
    g = h.real ** 2 + h.imag ** 2
    return layout, h, zeta, g


def time_fn(fn, args, repeats):
    fn(*args)  # warm-up (JIT compile / cache priming)
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--trials", type=int, default=100_000)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    rng = np.random.default_rng(2024)
    layout, h, zeta, g = build(args.trials, rng)
    scales = np.linspace(0.5, 2.0, layout.num_levels)
    ex_args = (h, zeta, g, layout.top_offset, layout.top_pairs, 1.3)
    hi_args = (h, zeta, g, layout.offsets, layout.tx_sizes, layout.rx_sizes,
               layout.tx_ratios, layout.rx_ratios, scales)

    lanes = [("numpy", kernels.exhaustive_eval_numpy, kernels.hier_eval_numpy)]
    if kernels.HAVE_NUMBA:
        lanes.append(("numba", kernels.exhaustive_eval_numba, kernels.hier_eval_numba))
        for a, b in zip(kernels.exhaustive_eval_numpy(*ex_args),
                        kernels.exhaustive_eval_numba(*ex_args)):
            assert np.array_equal(a, b), "lane outputs differ"
        for a, b in zip(kernels.hier_eval_numpy(*hi_args),
                        kernels.hier_eval_numba(*hi_args)):
            assert np.array_equal(a, b), "lane outputs differ"
        print("lane outputs verified bit-identical")
    else:
        print("numba unavailable: timing numpy lane only")

    print(f"\ntrials={args.trials}, slots={layout.total}, "
          f"finest pairs={layout.top_pairs}, best of {args.repeats}")
    print(f"{'kernel':<14}{'lane':<8}{'time':>10}{'per trial':>14}")
    times = {}
    for lane, ex_fn, hi_fn in lanes:
        for kind, fn, fargs in (("exhaustive", ex_fn, ex_args),
                                ("hierarchical", hi_fn, hi_args)):
            dt = time_fn(fn, fargs, args.repeats)
            times[(kind, lane)] = dt
            print(f"{kind:<14}{lane:<8}{dt * 1e3:>8.2f}ms"
                  f"{dt / args.trials * 1e9:>10.1f} ns")
    if kernels.HAVE_NUMBA:
        for kind in ("exhaustive", "hierarchical"):
            speedup = times[(kind, "numpy")] / times[(kind, "numba")]
            print(f"{kind}: numba is {speedup:.1f}x the numpy lane")


if __name__ == "__main__":
    main()
