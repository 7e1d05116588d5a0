"""Random-forest regression surrogate over genotypes.

Supplies the prediction mean and a cross-tree spread used as the uncertainty
by the acquisition function. Genotype slots are plain ordinal integers; splits
test midpoints between consecutive distinct observed values. Training rows
are canonicalized (sorted lexicographically, ties by target) before the
bootstrap so that refitting a permuted copy of the same data with the same
seed yields the identical model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .encoding import Genotype
from .exceptions import DimensionMismatch, InsufficientData


@dataclass(frozen=True)
class ForestConfig:
    n_trees: int = 100
    min_samples_leaf: int = 2
    bootstrap: bool = True
    max_features: float = 5.0 / 6.0

    def __post_init__(self):
        if self.n_trees < 1 or self.min_samples_leaf < 1:
            raise ValueError("n_trees and min_samples_leaf must be positive")
        if not 0.0 < self.max_features <= 1.0:
            raise ValueError("max_features must lie in (0, 1]")


@dataclass
class ForestModel:
    """Immutable once built; predict is read-only and thread-safe."""

    feat: np.ndarray
    thr: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    counts: np.ndarray
    n_points: int
    n_dims: int

    def predict_batch(self, X: np.ndarray):
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_dims:
            raise DimensionMismatch(f"expected (*, {self.n_dims}) queries, got {X.shape}")
        return kernels.predict_forest(self.feat, self.thr, self.left, self.right, self.value, self.counts, X)


def _as_matrix(genotypes) -> np.ndarray:
    rows = [g.values if isinstance(g, Genotype) else tuple(g) for g in genotypes]
    lengths = {len(r) for r in rows}
    if len(lengths) != 1:
        raise DimensionMismatch(f"genotypes have mixed lengths {sorted(lengths)}")
    return np.asarray(rows, dtype=np.float64)


def fit(X, Y, cfg: ForestConfig, rng: np.random.Generator) -> ForestModel:
    """Grow the forest on (genotypes, objectives)."""
    M = _as_matrix(X)
    y = np.asarray(Y, dtype=np.float64)
    if M.shape[0] != y.shape[0]:
        raise DimensionMismatch("X and Y lengths differ")
    if M.shape[0] < 2:
        raise InsufficientData("need at least 2 training points")
    if not np.all(np.isfinite(y)):
        raise ValueError("objectives must be finite")
    n, d = M.shape
    # canonical row order: permutation-invariant fitting
    order = np.lexsort((y,) + tuple(M[:, j] for j in range(d - 1, -1, -1)))
    M = np.ascontiguousarray(M[order])
    y = np.ascontiguousarray(y[order])
    seeds = rng.integers(1, 2**62, size=cfg.n_trees, dtype=np.int64)
    if cfg.bootstrap:
        boot = rng.integers(0, n, size=(cfg.n_trees, n), dtype=np.int64)
    else:
        boot = np.tile(np.arange(n, dtype=np.int64), (cfg.n_trees, 1))
    k_feats = max(1, min(d, math.ceil(cfg.max_features * d)))
    feat, thr, left, right, value, counts = kernels.build_forest(
        M, y, boot, seeds, cfg.min_samples_leaf, k_feats
    )
    return ForestModel(feat, thr, left, right, value, counts, n_points=n, n_dims=d)


def predict(model: ForestModel, g) -> tuple:
    """(mean, sd) at one genotype: cross-tree average and population spread."""
    values = g.values if isinstance(g, Genotype) else tuple(g)
    mean, sd = model.predict_batch(np.asarray([values], dtype=np.float64))
    return float(mean[0]), float(sd[0])
