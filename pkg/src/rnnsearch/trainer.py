"""Adam training of a decoded architecture with backprop truncated to the window.

Every window is an independent sample; the unroll horizon equals the
architecture's look-back and all steps share parameters. The training loss is
the reported metric itself (MAE, subgradient 0 at exact zero residual).
Dropout masks the stacked inter-layer connections only; recurrent paths, the
raw inputs and the dense-head input stay intact, and evaluation never drops.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import kernels
from .encoding import Architecture
from .exceptions import DimensionMismatch, NumericalDivergence, ZeroTarget
from .mrs import OutputActivation, SupervisedSet, WeightSet, mrs
from .seeding import sub_rng


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 200
    batch_size: int = 32
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    dropout: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 0 or self.batch_size < 1:
            raise ValueError("epochs must be >= 0 and batch_size >= 1")
        if not (self.learning_rate > 0 and np.isfinite(self.learning_rate)):
            raise ValueError("learning_rate must be positive and finite")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must lie in [0, 1)")


@dataclass
class TrainReport:
    weights: WeightSet
    loss_curve: list
    test_mae: float
    test_mape: Optional[float]
    wall_seconds: float


def mape(predictions, targets) -> float:
    """100 * mean(|pred - target| / |target|); undefined on any zero target."""
    p = np.asarray(predictions, dtype=np.float64)
    t = np.asarray(targets, dtype=np.float64)
    if p.shape != t.shape:
        raise DimensionMismatch(f"shape mismatch {p.shape} vs {t.shape}")
    if np.any(t == 0.0):
        raise ZeroTarget("a target component is exactly zero")
    return float(100.0 * np.mean(np.abs(p - t) / np.abs(t)))


def init_params(arch: Architecture, n_features: int, n_outputs: int, rng: np.random.Generator) -> np.ndarray:
    """Fan-in-scaled uniform weights, zero biases, packed flat."""
    shapes = kernels.param_shapes(arch.layer_sizes, n_features, n_outputs)
    parts = []
    for s in shapes:
        if len(s) == 1:
            parts.append(np.zeros(s[0]))
        else:
            limit = 1.0 / np.sqrt(s[0])
            parts.append(rng.uniform(-limit, limit, size=s).ravel())
    return np.concatenate(parts)


def loss_and_gradient(arch, flat_params, x_seq, targets, act, dropout_masks=None):
    """MAE loss and its gradient w.r.t. the flat parameter vector.

    `x_seq` is time-major (T, n, F). `dropout_masks`, when given, holds one
    pre-scaled mask per stacked gap (layer output 0..L-2).
    """
    layer_sizes = arch.layer_sizes
    n_features = x_seq.shape[2]
    n_outputs = targets.shape[1]
    layers, wy, by = kernels.param_views(flat_params, layer_sizes, n_features, n_outputs)
    n_layers = len(layer_sizes)

    inputs = []
    caches = []
    inp = x_seq
    for li, (wx, wh, b) in enumerate(layers):
        inputs.append(inp)
        cache = kernels.lstm_layer_forward_train(wx, wh, b, inp)
        caches.append(cache)
        h_seq = cache[0]
        if li < n_layers - 1 and dropout_masks is not None:
            inp = h_seq * dropout_masks[li]
        else:
            inp = h_seq

    h_last = caches[-1][0][-1]
    pre = h_last @ wy + by
    pred = kernels.apply_activation(pre, act.value)
    resid = pred - targets
    loss = float(np.mean(np.abs(resid)))

    grad = np.zeros_like(flat_params)
    glayers, gwy, gby = kernels.param_views(grad, layer_sizes, n_features, n_outputs)

    dpre = (np.sign(resid) / resid.size) * kernels.activation_grad(pred, act.value)
    gwy += h_last.T @ dpre
    gby += dpre.sum(axis=0)

    T, n, _ = x_seq.shape
    dh_above = np.zeros((T, n, layer_sizes[-1]))
    dh_above[-1] = dpre @ wy.T
    for li in range(n_layers - 1, -1, -1):
        wx, wh, _ = layers[li]
        h_seq, i_seq, f_seq, g_seq, o_seq, c_seq, tc_seq = caches[li]
        dwx, dwh, db, dx_seq = kernels.lstm_layer_backward(
            wx, wh, inputs[li], h_seq, i_seq, f_seq, g_seq, o_seq, c_seq, tc_seq, dh_above
        )
        gwx, gwh, gb = glayers[li]
        gwx += dwx
        gwh += dwh
        gb += db
        if li > 0:
            dh_above = dx_seq
            if dropout_masks is not None:
                dh_above = dh_above * dropout_masks[li - 1]
    return loss, grad


def predict(arch, flat_params, data: SupervisedSet, act: OutputActivation) -> np.ndarray:
    x_seq = data.time_major(arch.lookback)
    return kernels.predict_batch(
        flat_params, arch.layer_sizes, data.n_features, data.n_outputs, x_seq, act.value
    )


def train(
    arch: Architecture,
    train_set: SupervisedSet,
    test_set: SupervisedSet,
    act: OutputActivation,
    cfg: TrainConfig,
    init_weights: Optional[WeightSet] = None,
) -> TrainReport:
    """Adam over minibatches of windows; returns weights, loss curve and test metrics."""
    t0 = time.perf_counter()
    if train_set.n_features != test_set.n_features or train_set.n_outputs != test_set.n_outputs:
        raise DimensionMismatch("train and test sets disagree on features/outputs")
    n_features = train_set.n_features
    n_outputs = train_set.n_outputs
    if init_weights is not None:
        params = init_weights.flatten().astype(np.float64)
        expected = kernels.param_count(arch.layer_sizes, n_features, n_outputs)
        if params.shape != (expected,):
            raise DimensionMismatch("init_weights do not match the architecture")
    else:
        params = init_params(arch, n_features, n_outputs, sub_rng(cfg.seed, "init"))

    x_tm = train_set.time_major(arch.lookback)
    targets = train_set.targets
    n = train_set.n_samples
    T = arch.lookback
    rng_shuffle = sub_rng(cfg.seed, "shuffle")
    rng_drop = sub_rng(cfg.seed, "dropout")
    n_gaps = len(arch.layer_sizes) - 1
    keep = 1.0 - cfg.dropout

    m = np.zeros_like(params)
    v = np.zeros_like(params)
    step = 0
    curve = []
    for _ in range(cfg.epochs):
        perm = rng_shuffle.permutation(n)
        epoch_abs = 0.0
        for s in range(0, n, cfg.batch_size):
            bidx = perm[s : s + cfg.batch_size]
            xb = np.ascontiguousarray(x_tm[:, bidx, :])
            yb = targets[bidx]
            masks = None
            if cfg.dropout > 0.0 and n_gaps > 0:
                masks = [
                    (rng_drop.random((T, len(bidx), h)) >= cfg.dropout) / keep
                    for h in arch.layer_sizes[:-1]
                ]
            loss, grad = loss_and_gradient(arch, params, xb, yb, act, masks)
            if not np.isfinite(loss):
                report = TrainReport(
                    weights=WeightSet.from_flat(params.copy(), arch, n_features, n_outputs),
                    loss_curve=curve,
                    test_mae=float("nan"),
                    test_mape=None,
                    wall_seconds=time.perf_counter() - t0,
                )
                raise NumericalDivergence("training loss became non-finite", report=report)
            epoch_abs += loss * len(bidx)
            step += 1
            m += (1.0 - cfg.beta1) * (grad - m)
            v += (1.0 - cfg.beta2) * (grad * grad - v)
            m_hat = m / (1.0 - cfg.beta1**step)
            v_hat = v / (1.0 - cfg.beta2**step)
            params -= cfg.learning_rate * m_hat / (np.sqrt(v_hat) + cfg.epsilon)
        curve.append(epoch_abs / n)

    test_pred = predict(arch, params, test_set, act)
    test_mae = float(np.mean(np.abs(test_pred - test_set.targets)))
    try:
        test_mape = mape(test_pred, test_set.targets)
    except ZeroTarget:
        test_mape = None
    return TrainReport(
        weights=WeightSet.from_flat(params.copy(), arch, n_features, n_outputs),
        loss_curve=curve,
        test_mae=test_mae,
        test_mape=test_mape,
        wall_seconds=time.perf_counter() - t0,
    )


@dataclass(frozen=True)
class TimingRow:
    arch: Architecture
    mrs_seconds: float
    adam_seconds: float


@dataclass
class TimingTable:
    rows: list
    summary: dict

    @staticmethod
    def _stats(xs) -> dict:
        a = np.asarray(xs, dtype=np.float64)
        return {
            "mean": float(a.mean()),
            "median": float(np.median(a)),
            "max": float(a.max()),
            "min": float(a.min()),
            "sd": float(a.std(ddof=1)) if a.size > 1 else 0.0,
        }


def time_comparison(
    archs,
    train_set: SupervisedSet,
    test_set: SupervisedSet,
    act: OutputActivation,
    q: int = 100,
    epochs_short: int = 10,
    seed: int = 0,
) -> TimingTable:
    """Wall-clock MRS score vs short Adam training, sequential, same process."""
    if not archs:
        raise ValueError("archs must be non-empty")
    rows = []
    for i, arch in enumerate(archs):
        t0 = time.perf_counter()
        mrs(train_set, arch, 0.01, q, act, sub_rng(seed, "timecmp-mrs", i))
        t_mrs = time.perf_counter() - t0
        cfg = TrainConfig(epochs=epochs_short, seed=int(sub_rng(seed, "timecmp-train", i).integers(2**31)))
        t0 = time.perf_counter()
        train(arch, train_set, test_set, act, cfg)
        t_adam = time.perf_counter() - t0
        rows.append(TimingRow(arch=arch, mrs_seconds=t_mrs, adam_seconds=t_adam))
    summary = {
        "mrs": TimingTable._stats([r.mrs_seconds for r in rows]),
        "adam": TimingTable._stats([r.adam_seconds for r in rows]),
    }
    return TimingTable(rows=rows, summary=summary)
