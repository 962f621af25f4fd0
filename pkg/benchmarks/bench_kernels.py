"""Benchmark the numba kernels against the pure-numpy fallback.

Usage: python benchmarks/bench_kernels.py

Sizes mirror the real workloads: a multi-year crypto panel's worth of
daily estimator batches, and the Newey-West S-matrix over a stacked panel
the size of the paper's crypto sample (~48k rows).
"""

import time

import numpy as np

from volharness import kernels


def _time(fn, *args, repeats=5):
    fn(*args)  # warm-up (JIT compile / cache touch)
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - start)
    return best


def bench_day_measures(rng):
    n_days = 50_000
    n_ret = 287
    flat = rng.standard_normal(n_days * n_ret)
    offsets = np.arange(n_days + 1, dtype=np.int64) * n_ret
    args = (flat, offsets, 4, True)
    rows = [("batch_day_measures", f"{n_days} days x {n_ret} returns")]
    t_np = _time(kernels.batch_day_measures_numpy, *args)
    rows.append(("  numpy", f"{t_np * 1e3:9.1f} ms"))
    if kernels.batch_day_measures_numba is not None:
        t_nb = _time(kernels.batch_day_measures_numba, *args)
        rows.append(("  numba", f"{t_nb * 1e3:9.1f} ms  ({t_np / t_nb:4.1f}x)"))
    return rows


def bench_nw_s_matrix(rng):
    n_entities, rows_each, k, lag = 87, 550, 7, 11
    n = n_entities * rows_each
    scores = rng.standard_normal((n, k))
    starts = np.arange(n_entities + 1, dtype=np.int64) * rows_each
    args = (scores, starts, lag)
    rows = [("nw_s_matrix", f"{n} rows, k={k}, lag={lag}, {n_entities} blocks")]
    t_np = _time(kernels.nw_s_matrix_numpy, *args)
    rows.append(("  numpy", f"{t_np * 1e3:9.1f} ms"))
    if kernels.nw_s_matrix_numba is not None:
        t_nb = _time(kernels.nw_s_matrix_numba, *args)
        rows.append(("  numba", f"{t_nb * 1e3:9.1f} ms  ({t_np / t_nb:4.1f}x)"))
    return rows


def main():
    rng = np.random.default_rng(0)
    print(f"active backend: {kernels.active_backend()}")
    for bench in (bench_day_measures, bench_nw_s_matrix):
        for name, detail in bench(rng):
            print(f"{name:<22}{detail}")
        print()


if __name__ == "__main__":
    main()
