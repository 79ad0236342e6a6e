"""Benchmark the numba kernels against their pure-numpy fallbacks.

Run: python benchmarks/bench_kernels.py

Set WAVEMINE_NO_NUMBA=1 to confirm the package itself falls back cleanly;
this script always times both backends side by side.
"""
import time

import numpy as np

from wavemine._kernels import (
    concordance_counts_nb,
    concordance_counts_py,
    cox_suffix_sums_nb,
    cox_suffix_sums_py,
)


def _time(fn, *args, repeat=5):
    fn(*args)  # warm-up (and JIT compile for the numba path)
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def bench_concordance():
    rng = np.random.default_rng(0)
    print("concordance pair counts (O(n^2))")
    print(f"{'n':>8} {'numpy (ms)':>12} {'numba (ms)':>12} {'speedup':>9}")
    for n in (500, 2000, 5000):
        scores = rng.normal(size=n)
        times = rng.integers(1, 8, size=n).astype(float)
        events = rng.random(n) < 0.2
        assert concordance_counts_py(scores, times, events) == concordance_counts_nb(
            scores, times, events
        )
        t_py = _time(concordance_counts_py, scores, times, events)
        t_nb = _time(concordance_counts_nb, scores, times, events)
        print(f"{n:>8} {t_py * 1e3:>12.2f} {t_nb * 1e3:>12.2f} {t_py / t_nb:>8.1f}x")


def bench_cox_sums():
    rng = np.random.default_rng(1)
    print("\ncox risk-set suffix sums")
    print(f"{'n x p':>12} {'numpy (ms)':>12} {'numba (ms)':>12} {'speedup':>9}")
    for n, p in ((2000, 10), (2000, 100), (10000, 25)):
        w = np.exp(rng.normal(size=n))
        x = rng.normal(size=(n, p))
        s_py = cox_suffix_sums_py(w, x)
        s_nb = cox_suffix_sums_nb(w, x)
        assert np.allclose(s_py[0], s_nb[0]) and np.allclose(s_py[1], s_nb[1])
        t_py = _time(cox_suffix_sums_py, w, x)
        t_nb = _time(cox_suffix_sums_nb, w, x)
        print(f"{f'{n}x{p}':>12} {t_py * 1e3:>12.2f} {t_nb * 1e3:>12.2f} {t_py / t_nb:>8.1f}x")


if __name__ == "__main__":
    bench_concordance()
    bench_cox_sums()
