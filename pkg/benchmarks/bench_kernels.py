#!/usr/bin/env python3
"""Benchmark the jitted streaming kernel against the pure-numpy fallback.

Run:  python benchmarks/bench_kernels.py
The two paths consume identical inputs; the script reports their timings,
the speedup, and the maximum output deviation.
"""

from __future__ import annotations

import time

import numpy as np

from fedspike import kernels


def _case(n, p, r, seed, noise_scale):
    rng = np.random.default_rng(seed)
    xs = np.ascontiguousarray(rng.standard_normal((n, p)))
    v0 = np.ascontiguousarray(np.linalg.qr(rng.standard_normal((p, r)))[0])
    if noise_scale > 0:
        noise = rng.standard_normal((n, p, r))
    else:
        noise = np.zeros((1, p, r))
    return xs, v0, noise


def _time(fn, args, repeats):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main() -> None:
    if not kernels.using_numba():
        print("note: numba path inactive (FEDSPIKE_NO_NUMBA set or numba missing);")
        print("      both rows below run the interpreted kernel.\n")
    cases = [
        ("n=100000 p=50 r=1", 100_000, 50, 1, 0.5),
        ("n=20000  p=50 r=5", 20_000, 50, 5, 0.5),
        ("n=50000  p=50 r=1 no-noise", 50_000, 50, 1, 0.0),
    ]
    print(f"{'case':30s} {'numba (s)':>10s} {'numpy (s)':>10s} {'speedup':>8s} {'max|diff|':>10s}")
    for label, n, p, r, scale in cases:
        xs, v0, noise = _case(n, p, r, seed=0, noise_scale=scale)
        args = (xs, v0, 1.0, 1.0, 3.0 * np.sqrt(p + 10.0), scale, noise, 1)
        kernels.oja_stream(*args)  # warm-up / jit compile
        t_fast, out_fast = _time(kernels.oja_stream, args, repeats=3)
        t_slow, out_slow = _time(kernels.oja_stream_python, args, repeats=1)
        diff = float(np.max(np.abs(out_fast @ out_fast.T - out_slow @ out_slow.T)))
        print(f"{label:30s} {t_fast:10.3f} {t_slow:10.3f} {t_slow / t_fast:8.1f}x {diff:10.2e}")


if __name__ == "__main__":
    main()
