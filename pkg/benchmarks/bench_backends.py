#!/usr/bin/env python3
"""Benchmark the two kernel backends against each other.

Run:  python benchmarks/bench_backends.py

Two comparisons:

* regression-forest build/predict: numba @njit (production default) against
  the pure-numpy fallback (RNNSEARCH_DISABLE_NUMBA=1). Both must produce
  bit-identical trees; numba should win by a wide margin on predict.
* scoring forward pass of the stacked recurrent net: the production
  vectorized-numpy path against a straightforward @njit translation. Without
  SVML, numba lowers tanh to scalar libm calls, which is why numpy wins here
  and why the production LSTM kernels are numpy.
"""

import time

import numpy as np

from rnnsearch.kernels import forest_numba, forest_numpy, lstm  # sets numba env first

from numba import njit


def timeit(fn, repeats=5):
    fn()
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def bench_forest():
    rng = np.random.default_rng(0)
    n, d, n_trees = 120, 7, 100
    X = rng.integers(0, 100, size=(n, d)).astype(np.float64)
    y = rng.standard_normal(n)
    boot = rng.integers(0, n, size=(n_trees, n)).astype(np.int64)
    seeds = rng.integers(1, 2**62, size=n_trees, dtype=np.int64)
    queries = rng.integers(0, 100, size=(2000, d)).astype(np.float64)

    built_nb = forest_numba.build_forest(X, y, boot, seeds, 2, 6)
    built_np = forest_numpy.build_forest(X, y, boot, seeds, 2, 6)
    for a, b in zip(built_nb, built_np):
        assert np.array_equal(a, b), "backends must grow identical trees"
    mean_nb, sd_nb = forest_numba.predict_forest(*built_nb, queries)
    mean_np, sd_np = forest_numpy.predict_forest(*built_np, queries)
    assert np.array_equal(mean_nb, mean_np) and np.array_equal(sd_nb, sd_np)

    t_build_nb = timeit(lambda: forest_numba.build_forest(X, y, boot, seeds, 2, 6))
    t_build_np = timeit(lambda: forest_numpy.build_forest(X, y, boot, seeds, 2, 6))
    t_pred_nb = timeit(lambda: forest_numba.predict_forest(*built_nb, queries))
    t_pred_np = timeit(lambda: forest_numpy.predict_forest(*built_np, queries))

    print("forest (120 points, 7 dims, 100 trees; 2000-point predict)")
    print(f"  build   numba {t_build_nb * 1e3:8.1f} ms   numpy {t_build_np * 1e3:8.1f} ms   numpy/numba {t_build_np / t_build_nb:5.1f}x")
    print(f"  predict numba {t_pred_nb * 1e3:8.1f} ms   numpy {t_pred_np * 1e3:8.1f} ms   numpy/numba {t_pred_np / t_pred_nb:5.1f}x")


@njit(cache=True)
def _njit_lstm_last(wx, wh, b, x_seq):
    T, n, F = x_seq.shape
    H = wh.shape[0]
    h = np.zeros((n, H), dtype=x_seq.dtype)
    c = np.zeros((n, H), dtype=x_seq.dtype)
    for t in range(T):
        z = x_seq[t] @ wx + h @ wh + b
        for r in range(n):
            for k in range(H):
                i = 0.5 + 0.5 * np.tanh(0.5 * z[r, k])
                f = 0.5 + 0.5 * np.tanh(0.5 * z[r, H + k])
                g = np.tanh(z[r, 2 * H + k])
                o = 0.5 + 0.5 * np.tanh(0.5 * z[r, 3 * H + k])
                c[r, k] = f * c[r, k] + i * g
                h[r, k] = o * np.tanh(c[r, k])
    return h


def bench_lstm():
    rng = np.random.default_rng(1)
    H, F, T, n = 64, 1, 20, 771
    # contractive weight scale: float32 ulp noise would otherwise grow
    # chaotically through the recurrence and defeat the agreement check
    wx = (0.25 * rng.standard_normal((F, 4 * H))).astype(np.float32)
    wh = (0.25 * rng.standard_normal((H, 4 * H))).astype(np.float32)
    b = (0.25 * rng.standard_normal(4 * H)).astype(np.float32)
    x = rng.standard_normal((T, n, F)).astype(np.float32)

    h_np = lstm.lstm_layer_forward(wx, wh, b, x)[-1]
    h_nb = _njit_lstm_last(wx, wh, b, x)
    assert np.allclose(h_np, h_nb, atol=1e-4), "paths disagree"

    t_np = timeit(lambda: lstm.lstm_layer_forward(wx, wh, b, x))
    t_nb = timeit(lambda: _njit_lstm_last(wx, wh, b, x))
    print("stacked-net forward (H=64, T=20, batch 771, float32)")
    print(f"  numpy {t_np * 1e3:8.1f} ms   njit {t_nb * 1e3:8.1f} ms   njit/numpy {t_nb / t_np:5.1f}x")
    print("  (the production path is numpy: no SVML here, so njit tanh is scalar libm)")


if __name__ == "__main__":
    bench_forest()
    bench_lstm()
