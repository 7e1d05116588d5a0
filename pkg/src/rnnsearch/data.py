"""Problem construction: series generation, CSV ingestion, windowing, splits."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .exceptions import DimensionMismatch, EmptySplit, LookbackTooLarge, ParseError, RaggedRows
from .mrs import SupervisedSet


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """Rows are time steps, columns are features."""

    values: np.ndarray
    feature_names: tuple = ()
    target_columns: tuple = ()

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim == 1:
            values = values[:, None]
        if values.ndim != 2 or values.shape[0] < 2:
            raise DimensionMismatch(f"series must be (steps >= 2, features), got {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("series entries must be finite")
        names = tuple(self.feature_names) or tuple(f"f{i}" for i in range(values.shape[1]))
        if len(names) != values.shape[1]:
            raise DimensionMismatch("feature_names length does not match columns")
        targets = tuple(self.target_columns) or tuple(range(values.shape[1]))
        if any(not 0 <= c < values.shape[1] for c in targets):
            raise ValueError("target column out of range")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "feature_names", names)
        object.__setattr__(self, "target_columns", targets)

    @property
    def length(self) -> int:
        return self.values.shape[0]

    @property
    def n_features(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class NormalizationParams:
    mean: np.ndarray
    sd: np.ndarray
    constant_columns: tuple

    def inverse(self, values: np.ndarray) -> np.ndarray:
        return values * self.sd + self.mean


def gen_sine(
    amplitude: float = 1.0,
    frequency: float = 1.0,
    phase: float = 0.0,
    t_start: float = 0.0,
    t_end: float = 100.0,
    rate: float = 10.0,
) -> TimeSeries:
    """Sample amplitude * sin(2*pi*frequency*t + phase) at `rate` points per unit time.

    Samples land on t_start + k/rate for k = 0 .. floor((t_end - t_start) * rate),
    both endpoints included when they align with the grid.
    """
    if rate <= 0:
        raise ValueError("rate must be positive")
    if t_end <= t_start:
        raise ValueError("t_end must exceed t_start")
    k = np.arange(math.floor((t_end - t_start) * rate) + 1)
    t = t_start + k / rate
    y = amplitude * np.sin(2.0 * math.pi * frequency * t + phase)
    return TimeSeries(y[:, None], feature_names=("y",))


def load_csv(path, delimiter: str = ",", has_header: bool = True) -> TimeSeries:
    """Read a rectangular numeric CSV; rows are time steps."""
    rows = []
    names: Optional[tuple] = None
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        for r, record in enumerate(reader):
            if not record or (len(record) == 1 and record[0].strip() == ""):
                continue
            if r == 0 and has_header:
                names = tuple(c.strip() for c in record)
                continue
            parsed = []
            for c, cell in enumerate(record):
                try:
                    parsed.append(float(cell))
                except ValueError:
                    raise ParseError(f"{path}: non-numeric cell at row {r}, column {c}: {cell!r}") from None
            rows.append(parsed)
    if not rows:
        raise ParseError(f"{path}: no data rows")
    width = len(rows[0])
    for r, parsed in enumerate(rows):
        if len(parsed) != width:
            raise RaggedRows(f"{path}: row {r} has {len(parsed)} columns, expected {width}")
    if names is not None and len(names) != width:
        raise RaggedRows(f"{path}: header has {len(names)} columns, data rows have {width}")
    return TimeSeries(np.asarray(rows, dtype=np.float64), feature_names=names or ())


def normalize_zscore(
    ts: TimeSeries, stats_rows: Optional[int] = None, ddof: int = 0
) -> tuple:
    """Per-feature (x - mean) / sd. Constant columns pass through and are flagged.

    When `stats_rows` is given, only the first `stats_rows` rows feed the
    statistics (training-split discipline); the transform still covers the
    whole series.
    """
    ref = ts.values if stats_rows is None else ts.values[:stats_rows]
    if ref.shape[0] < 2:
        raise ValueError("need at least 2 rows to estimate spread")
    mean = ref.mean(axis=0)
    sd = ref.std(axis=0, ddof=ddof)
    constant = tuple(int(i) for i in np.nonzero(sd == 0.0)[0])
    safe_sd = sd.copy()
    safe_mean = mean.copy()
    for i in constant:
        safe_sd[i] = 1.0
        safe_mean[i] = 0.0
    out = (ts.values - safe_mean) / safe_sd
    params = NormalizationParams(mean=safe_mean, sd=safe_sd, constant_columns=constant)
    return (
        TimeSeries(out, feature_names=ts.feature_names, target_columns=ts.target_columns),
        params,
    )


def make_windows(
    ts: TimeSeries, lookback: int, horizon: int = 1, targets: Optional[Sequence[int]] = None
) -> SupervisedSet:
    """Sliding windows: sample i reads rows [i, i+lookback), predicts row i+lookback+horizon-1."""
    if lookback < 1 or horizon < 1:
        raise ValueError("lookback and horizon must be >= 1")
    n = ts.length - lookback - horizon + 1
    if n < 1:
        raise LookbackTooLarge(
            f"lookback {lookback} + horizon {horizon} leaves no window in {ts.length} rows"
        )
    cols = tuple(targets) if targets is not None else ts.target_columns
    idx = np.arange(n)[:, None] + np.arange(lookback)[None, :]
    inputs = ts.values[idx]
    target_rows = np.arange(n) + lookback + horizon - 1
    out = ts.values[target_rows][:, list(cols)]
    return SupervisedSet(inputs=inputs, targets=out)


def split(
    ts: TimeSeries, test_fraction: Optional[float] = None, test_rows: Optional[int] = None
) -> tuple:
    """Chronological split; the test side is the final segment, no shuffling."""
    if (test_fraction is None) == (test_rows is None):
        raise ValueError("give exactly one of test_fraction or test_rows")
    if test_fraction is not None:
        if not 0.0 < test_fraction < 1.0:
            raise ValueError("test_fraction must lie in (0, 1)")
        test_rows = int(ts.length * test_fraction)
    if test_rows < 1 or test_rows >= ts.length:
        raise EmptySplit(f"test_rows {test_rows} leaves an empty side of {ts.length} rows")
    cut = ts.length - test_rows
    if cut < 2 or test_rows < 2:
        raise EmptySplit("both sides need at least 2 rows")
    train = TimeSeries(ts.values[:cut], ts.feature_names, ts.target_columns)
    test = TimeSeries(ts.values[cut:], ts.feature_names, ts.target_columns)
    return train, test
