"""Hot numeric kernels.

Two families live here:

* recurrent-network kernels (forward pass and truncated backprop through
  time): vectorized numpy. On this class of hardware numpy's SIMD tanh plus
  BLAS GEMMs beat an njit translation by an order of magnitude because numba
  lowers tanh to scalar libm calls when SVML is absent; see
  benchmarks/bench_backends.py for the numbers.
* regression-forest kernels (tree growing and batch traversal): branchy
  integer work where numba wins big. The numba build is the default; set
  ``RNNSEARCH_DISABLE_NUMBA=1`` (or run without numba installed) to select
  the pure-numpy fallback. Both backends grow bit-identical trees from the
  same seeds.
"""

import os

from .lstm import (
    activation_grad,
    apply_activation,
    lstm_layer_forward,
    lstm_layer_forward_train,
    lstm_layer_backward,
    param_count,
    param_shapes,
    param_views,
    predict_batch,
    score_mae_samples,
)

_flag = os.environ.get("RNNSEARCH_DISABLE_NUMBA", "").strip().lower()
NUMBA_DISABLED = _flag in ("1", "true", "yes", "on")

if not NUMBA_DISABLED:
    try:
        # skip numba's TBB probe (stale TBB builds warn); omp then workqueue
        os.environ.setdefault("NUMBA_THREADING_LAYER_PRIORITY", "omp workqueue tbb")
        from .forest_numba import build_forest, predict_forest

        BACKEND = "numba"
    except ImportError:  # numba missing: quiet fallback
        from .forest_numpy import build_forest, predict_forest

        BACKEND = "numpy"
else:
    from .forest_numpy import build_forest, predict_forest

    BACKEND = "numpy"

__all__ = [
    "BACKEND",
    "NUMBA_DISABLED",
    "activation_grad",
    "apply_activation",
    "build_forest",
    "lstm_layer_forward",
    "lstm_layer_forward_train",
    "lstm_layer_backward",
    "param_count",
    "param_shapes",
    "param_views",
    "predict_batch",
    "predict_forest",
    "score_mae_samples",
]
