#!/usr/bin/env python3
"""Benchmark the compiled kernels against the NumPy fallback.

Times the three hot kernels (additive p-variation DP, Chen-corrected
second-level DP, exhaustive Chen-defect scan) on Brownian lifts of growing
size and prints one table row per (kernel, size) with the speedup.  Values
are cross-checked between the backends while timing.

    python benchmarks/bench_kernels.py [--quick]
"""

import argparse
import time

import numpy as np

from rough_llg import _kernels_py
from rough_llg.noise import piecewise_linear_lift, sample_bm
from rough_llg.rough import TimeGrid

try:
    from rough_llg import _kernels_cy

    HAVE_COMPILED = True
except ImportError:
    _kernels_cy = None
    HAVE_COMPILED = False


def prefix_data(N, seed=0, q=3):
    rp = piecewise_linear_lift(sample_bm(seed, TimeGrid(1.0, N), q))
    b, B = rp.prefixes
    return np.ascontiguousarray(b), np.ascontiguousarray(B.reshape(len(B), -1))


def timed(fn, *args, repeats=3):
    best = np.inf
    value = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        value = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return value, best


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--quick", action="store_true", help="smaller sizes, one repeat")
    args = parser.parse_args()
    repeats = 1 if args.quick else 3

    sizes_dp = [256, 1024] if args.quick else [256, 1024, 4096]
    sizes_scan = [128, 256] if args.quick else [256, 512, 1024]

    print(f"compiled extension available: {HAVE_COMPILED}")
    print(f"{'kernel':<26} {'N':>6} {'numpy [s]':>12} {'compiled [s]':>12} {'speedup':>8}")

    for N in sizes_dp:
        b, B = prefix_data(N)
        prefix = np.ascontiguousarray(np.cumsum(np.diff(b, axis=0), axis=0))
        prefix = np.concatenate([np.zeros((1, prefix.shape[1])), prefix])
        v_py, t_py = timed(_kernels_py.pvar_powersum_additive, prefix, 2.5, repeats=repeats)
        if HAVE_COMPILED:
            v_cy, t_cy = timed(_kernels_cy.pvar_powersum_additive, prefix, 2.5, repeats=repeats)
            assert abs(v_py - v_cy) <= 1e-9 * max(abs(v_py), 1.0)
            print(f"{'pvar_additive':<26} {N:>6} {t_py:>12.4f} {t_cy:>12.4f} {t_py / t_cy:>8.1f}")
        else:
            print(f"{'pvar_additive':<26} {N:>6} {t_py:>12.4f} {'-':>12} {'-':>8}")

    coord = np.ascontiguousarray(np.eye(9))
    for N in sizes_dp:
        b1, B1 = prefix_data(N, seed=1)
        b2, B2 = prefix_data(N, seed=2)
        v_py, t_py = timed(
            _kernels_py.pvar_powersum_chen_mode, b1, B1, b2, B2, coord, 1.25, repeats=repeats
        )
        if HAVE_COMPILED:
            v_cy, t_cy = timed(
                _kernels_cy.pvar_powersum_chen_mode, b1, B1, b2, B2, coord, 1.25, repeats=repeats
            )
            assert abs(v_py - v_cy) <= 1e-9 * max(abs(v_py), 1.0)
            print(f"{'pvar_chen_mode':<26} {N:>6} {t_py:>12.4f} {t_cy:>12.4f} {t_py / t_cy:>8.1f}")
        else:
            print(f"{'pvar_chen_mode':<26} {N:>6} {t_py:>12.4f} {'-':>12} {'-':>8}")

    for N in sizes_scan:
        b, B = prefix_data(N, seed=3)
        v_py, t_py = timed(_kernels_py.chen_defect_scan_mode, b, B, repeats=repeats)
        if HAVE_COMPILED:
            v_cy, t_cy = timed(_kernels_cy.chen_defect_scan_mode, b, B, repeats=repeats)
            assert abs(v_py - v_cy) <= 1e-15
            print(f"{'chen_defect_scan':<26} {N:>6} {t_py:>12.4f} {t_cy:>12.4f} {t_py / t_cy:>8.1f}")
        else:
            print(f"{'chen_defect_scan':<26} {N:>6} {t_py:>12.4f} {'-':>12} {'-':>8}")


if __name__ == "__main__":
    main()
