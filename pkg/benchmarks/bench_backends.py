#!/usr/bin/env python3
"""Benchmark the compiled kernel core against the pure-Python fallback.

Times the four hot kernels on harness-scale inputs and prints a table with
the speedup. Run from the repository root:

    python benchmarks/bench_backends.py [--repeats 5]
"""

import argparse
import time

import numpy as np

from phycov._backend import available_backends


def make_inputs(n_fine=108_000, n_obs=3600, kn=9):
    rng = np.random.default_rng(0)
    mesh = 1.0 / n_fine
    m = np.concatenate(([0.0], np.cumsum(0.02 * np.sqrt(mesh) * rng.standard_normal(n_fine))))
    bn = 1.0 / n_obs
    s = np.sort(np.concatenate(([0.0], rng.random(n_obs))))
    t = np.sort(np.concatenate(([0.0], rng.random(n_obs))))
    return {
        "barrier_scan": (m, mesh, np.full(n_fine, 0.02**2 * mesh),
                         np.full(n_fine + 1024, 0.01 * np.sqrt(bn)),
                         np.full(n_fine + 1024, 0.04 * np.sqrt(bn)),
                         rng.random(n_fine), rng.random(n_fine)),
        "phy_pair_sum": (s, t, rng.standard_normal(s.size - kn + 1),
                         rng.standard_normal(t.size - kn + 1), kn, np.inf),
        "refresh_merge": (s, t),
        "msrv_sum": (np.cumsum(rng.standard_normal(n_obs + 1)),
                     rng.standard_normal(40)),
    }


def bench(fn, args, repeats):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeats", type=int, default=5)
    opts = ap.parse_args()
    backends = available_backends()
    inputs = make_inputs()
    print(f"{'kernel':<16}" + "".join(f"{name + ' (s)':>14}" for name in backends)
          + f"{'speedup':>10}")
    for kernel, args in inputs.items():
        times = {}
        for name, mod in backends.items():
            times[name] = bench(getattr(mod, kernel), args, opts.repeats)
        row = f"{kernel:<16}" + "".join(f"{times[n]:>14.5f}" for n in backends)
        if "cython" in times:
            row += f"{times['python'] / times['cython']:>9.0f}x"
        print(row)


if __name__ == "__main__":
    main()
