"""Training-free architecture scoring by mean-absolute-error random sampling.

An architecture is scored by drawing Q independent standard-normal weight
sets, measuring the forecast MAE of each on the supplied data, fitting a
normal to the Q errors and reporting the mass of that normal, truncated to
[0, inf), that lies below a threshold. High score = random weights already
land near good solutions, which correlates with trainability.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.special import log_ndtr, ndtr

from . import kernels
from .encoding import Architecture
from .exceptions import DegenerateSample, DimensionMismatch


class OutputActivation(Enum):
    TANH = "tanh"
    SIGMOID = "sigmoid"
    LINEAR = "linear"


@dataclass(frozen=True, eq=False)
class SupervisedSet:
    """Windowed supervised samples: inputs (n, lookback, features), targets (n, outputs)."""

    inputs: np.ndarray
    targets: np.ndarray

    def __post_init__(self):
        inputs = np.asarray(self.inputs, dtype=np.float64)
        targets = np.asarray(self.targets, dtype=np.float64)
        if inputs.ndim != 3:
            raise DimensionMismatch(f"inputs must be (n, lookback, features), got {inputs.shape}")
        if targets.ndim != 2:
            raise DimensionMismatch(f"targets must be (n, outputs), got {targets.shape}")
        if inputs.shape[0] != targets.shape[0] or inputs.shape[0] < 1:
            raise DimensionMismatch("inputs and targets must pair up, at least one sample")
        object.__setattr__(self, "inputs", inputs)
        object.__setattr__(self, "targets", targets)

    @property
    def n_samples(self) -> int:
        return self.inputs.shape[0]

    @property
    def lookback(self) -> int:
        return self.inputs.shape[1]

    @property
    def n_features(self) -> int:
        return self.inputs.shape[2]

    @property
    def n_outputs(self) -> int:
        return self.targets.shape[1]

    def time_major(self, lookback: int, dtype=np.float64) -> np.ndarray:
        """(lookback, n, features) view of the most recent `lookback` steps."""
        if lookback > self.lookback:
            raise DimensionMismatch(
                f"architecture needs lookback {lookback}, windows only hold {self.lookback}"
            )
        suffix = self.inputs[:, self.lookback - lookback :, :]
        return np.ascontiguousarray(suffix.transpose(1, 0, 2), dtype=dtype)


@dataclass(frozen=True)
class LayerWeights:
    wx: np.ndarray
    wh: np.ndarray
    b: np.ndarray


@dataclass(frozen=True)
class WeightSet:
    """Gate weights per stacked layer plus the dense output head."""

    layers: tuple
    head_w: np.ndarray
    head_b: np.ndarray

    def flatten(self) -> np.ndarray:
        parts = []
        for lw in self.layers:
            parts += [lw.wx.ravel(), lw.wh.ravel(), lw.b.ravel()]
        parts += [self.head_w.ravel(), self.head_b.ravel()]
        return np.concatenate(parts)

    @staticmethod
    def from_flat(flat: np.ndarray, arch: Architecture, n_features: int, n_outputs: int) -> "WeightSet":
        layers, wy, by = kernels.param_views(np.asarray(flat), arch.layer_sizes, n_features, n_outputs)
        return WeightSet(tuple(LayerWeights(*lw) for lw in layers), wy, by)


@dataclass(frozen=True)
class MrsResult:
    mu: float
    sigma: float
    prob: float
    q_used: int


def _check_weights(arch: Architecture, w: WeightSet, n_features: int, n_outputs: int):
    expected = kernels.param_shapes(arch.layer_sizes, n_features, n_outputs)
    got = []
    for lw in w.layers:
        got += [lw.wx.shape, lw.wh.shape, lw.b.shape]
    got += [w.head_w.shape, w.head_b.shape]
    if got != expected:
        raise DimensionMismatch(f"weight shapes {got} do not match architecture {expected}")


def sample_weights(arch: Architecture, n_features: int, n_outputs: int, rng: np.random.Generator) -> WeightSet:
    """Standard-normal draw for every gate matrix, gate bias and head entry."""
    if n_features < 1 or n_outputs < 1:
        raise ValueError("n_features and n_outputs must be >= 1")
    layers = []
    fan = n_features
    for h in arch.layer_sizes:
        layers.append(
            LayerWeights(
                rng.standard_normal((fan, 4 * h)),
                rng.standard_normal((h, 4 * h)),
                rng.standard_normal(4 * h),
            )
        )
        fan = h
    return WeightSet(tuple(layers), rng.standard_normal((fan, n_outputs)), rng.standard_normal(n_outputs))


def forward(arch: Architecture, w: WeightSet, window: np.ndarray, act: OutputActivation) -> np.ndarray:
    """Run the stacked network over one window from zero state; (n_outputs,) vector."""
    window = np.asarray(window, dtype=np.float64)
    if window.ndim != 2:
        raise DimensionMismatch(f"window must be 2-D, got shape {window.shape}")
    if window.shape[0] != arch.lookback:
        raise DimensionMismatch(
            f"window has {window.shape[0]} steps, architecture expects {arch.lookback}"
        )
    n_features = window.shape[1]
    n_outputs = w.head_w.shape[1]
    _check_weights(arch, w, n_features, n_outputs)
    x_seq = np.ascontiguousarray(window[:, None, :])
    preds = kernels.predict_batch(
        w.flatten(), arch.layer_sizes, n_features, n_outputs, x_seq, act.value
    )
    return preds[0]


def mae(arch: Architecture, w: WeightSet, data: SupervisedSet, act: OutputActivation) -> float:
    """Mean absolute error of the network over every sample and output."""
    _check_weights(arch, w, data.n_features, data.n_outputs)
    x_seq = data.time_major(arch.lookback)
    preds = kernels.predict_batch(
        w.flatten(), arch.layer_sizes, data.n_features, data.n_outputs, x_seq, act.value
    )
    return float(np.mean(np.abs(preds - data.targets)))


def truncated_normal_prob(mu: float, sigma: float, p_m: float) -> float:
    """Mass below p_m of a Normal(mu, sigma^2) truncated to [0, inf).

    Tails evaluate in log space; the result is clamped to [0, 1] against
    round-off. sigma must be positive: a zero-spread sample raises
    DegenerateSample and the caller maps it to 1 (mu below threshold) or 0.
    """
    if sigma == 0.0:
        raise DegenerateSample("zero sample spread; probability is a step at mu")
    if sigma < 0.0 or not np.isfinite(sigma):
        raise ValueError("sigma must be positive and finite")
    if p_m <= 0.0:
        raise ValueError("threshold must be positive")
    if p_m == np.inf:
        return 1.0
    a = (p_m - mu) / sigma
    b = -mu / sigma
    log_phi_a = float(log_ndtr(a))
    if log_phi_a == -np.inf:
        return 0.0
    numer = -np.expm1(float(log_ndtr(b)) - log_phi_a) * np.exp(log_phi_a)
    denom = float(ndtr(mu / sigma))
    prob = numer / denom
    return float(min(1.0, max(0.0, prob)))


def fit_probability(mu: float, sigma: float, p_m: float) -> float:
    """Truncated-normal mass below p_m with the zero-spread limit folded in."""
    try:
        return truncated_normal_prob(mu, sigma, p_m)
    except DegenerateSample:
        return 1.0 if mu < p_m else 0.0


def mrs(
    data: SupervisedSet,
    arch: Architecture,
    p_m: float,
    q: int,
    act: OutputActivation,
    rng: np.random.Generator,
) -> MrsResult:
    """Score `arch` on `data`: Q random-weight MAE samples -> truncated-normal mass below p_m.

    The Q forward passes run in float32 (the score is a Monte-Carlo probe, and
    SIMD float32 math is what makes it cheap); the error reduction and the
    normal fit are float64 with the unbiased (Q-1) deviation.
    """
    if q < 2:
        raise ValueError("q must be >= 2 to fit a deviation")
    x_seq = data.time_major(arch.lookback, dtype=np.float32)
    targets = np.ascontiguousarray(data.targets, dtype=np.float32)
    n_params = kernels.param_count(arch.layer_sizes, data.n_features, data.n_outputs)
    draws = rng.standard_normal((q, n_params), dtype=np.float32)
    maes = kernels.score_mae_samples(
        draws, arch.layer_sizes, data.n_features, data.n_outputs, x_seq, targets, act.value
    )
    mu = float(np.mean(maes))
    sigma = float(np.std(maes, ddof=1))
    return MrsResult(mu=mu, sigma=sigma, prob=fit_probability(mu, sigma, p_m), q_used=q)
