#!/usr/bin/env python3
"""Benchmark the compiled kernel core against the pure-Python fallback.

Run as ``python benchmarks/bench_kernels.py [--repeats N]``.  The numbers
that matter in practice: trajectory generation and the standard
hit-and-run sampler dominate ensemble experiments, the rollout dominates
long invariant-measure runs.
"""

import argparse
import time

import numpy as np

from goodweights._kernels import _ref

try:
    from goodweights._kernels import _core
except ImportError:
    _core = None


def timeit(fn, repeats):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench(repeats):
    from goodweights import dynamics, sampler

    train, _ = dynamics.generate_dataset(seed=0, n_train=20000, n_valid=10)
    corners = sampler.data_corners(train)
    rng = np.random.default_rng(1)

    n_rows, k = 2000, 10
    b0 = rng.uniform(0.4, 3.5, n_rows)
    normals = rng.standard_normal((n_rows, k, 4))
    chord = rng.random((n_rows, k))
    signs = np.where(rng.random(n_rows) < 0.5, -1.0, 1.0)

    d_r = 512
    w_in = rng.normal(scale=0.05, size=(d_r, 3))
    b_in = rng.uniform(0.5, 3.0, d_r)
    w_out = rng.normal(scale=0.04, size=(3, d_r))
    u0 = train.states[:, 0]

    cases = [
        ("lorenz_rk4 (20k samples x 10 substeps)",
         lambda impl: impl.lorenz_rk4(u0, 0.02, 10, 20000)),
        (f"standard hit-and-run ({n_rows} rows, K={k})",
         lambda impl: impl.standard_good_rows(
             corners.coord_min, corners.coord_max, 0.4, 3.5,
             b0, normals, chord, signs, 1e-10, 1.0, 1e3, 80)),
        (f"surrogate rollout (D_r={d_r}, 1500 steps)",
         lambda impl: impl.surrogate_rollout(w_in, b_in, w_out, u0, 1500)),
    ]

    print(f"{'kernel':45s} {'fallback':>10s} {'compiled':>10s} {'speedup':>8s}")
    for name, call in cases:
        t_ref = timeit(lambda: call(_ref), repeats)
        if _core is None:
            print(f"{name:45s} {t_ref * 1e3:9.1f}ms {'n/a':>10s} {'n/a':>8s}")
            continue
        t_core = timeit(lambda: call(_core), repeats)
        print(f"{name:45s} {t_ref * 1e3:9.1f}ms {t_core * 1e3:9.1f}ms "
              f"{t_ref / t_core:7.1f}x")


if __name__ == "__main__":
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()
    if _core is None:
        print("NOTE: compiled core not importable; timing fallback only")
    bench(args.repeats)
