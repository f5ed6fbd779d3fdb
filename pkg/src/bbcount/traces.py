"""Trace CSV ingest, per-block series, split protocols, and normalization.

The trace CSV schema is ``app,kernel_id,bb_id,p0,...,pK,count`` with one
row per (parameter assignment, kernel, block), UTF-8, LF line endings.
When a file mixes apps of different arity the narrower apps are padded
with trailing zero columns; ingest trims trailing all-zero columns per
app to recover the true arity (or takes an explicit arity map).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence, Union

import numpy as np

LABEL_TRAIN = "train"
LABEL_TEST = "test"
LABEL_DISCARDED = "discarded"


class TraceParseError(Exception):
    """A trace CSV row failed to parse; carries the 1-based line number."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class TraceSchemaError(Exception):
    """Trace rows are structurally inconsistent (header, arity)."""


class SplitError(Exception):
    pass


class ConstantFeatureError(SplitError):
    """A range-based split needs max > min for every feature."""


class DegenerateSplitError(SplitError):
    """A split produced an empty partition; names which one."""

    def __init__(self, partition: str, detail: str = ""):
        suffix = f" ({detail})" if detail else ""
        super().__init__(f"empty {partition} partition{suffix}")
        self.partition = partition


def trace_header(arity: int) -> list[str]:
    return ["app", "kernel_id", "bb_id", *[f"p{i}" for i in range(arity)], "count"]


@dataclass(frozen=True)
class TraceRecord:
    app: str
    kernel_id: int
    bb_id: int
    params: tuple[int, ...]
    count: int


@dataclass(frozen=True)
class BbSeries:
    """All observations of one (app, kernel, block): features X, counts y."""

    key: tuple[str, int, int]
    X: np.ndarray
    y: np.ndarray
    duplicates_collapsed: int = 0

    def __post_init__(self):
        if self.X.ndim != 2 or self.y.ndim != 1 or len(self.X) != len(self.y):
            raise ValueError("X must be (n, arity) and y (n,) with matching n")

    def __len__(self) -> int:
        return len(self.y)

    @property
    def arity(self) -> int:
        return self.X.shape[1]

    def take(self, indices: Sequence[int]) -> "BbSeries":
        idx = np.asarray(indices, dtype=int)
        return BbSeries(self.key, self.X[idx], self.y[idx])


def read_trace_csv(source: Union[str, Path, Iterable[str]]) -> list[TraceRecord]:
    """Parse a trace CSV into records, trimming per-app zero padding.

    Raises TraceParseError with the offending line number for malformed
    rows and TraceSchemaError for a bad header.
    """
    if isinstance(source, (str, Path)):
        with open(source, encoding="utf-8", newline="") as handle:
            return _read_records(handle)
    return _read_records(source)


def _read_records(lines: Iterable[str]) -> list[TraceRecord]:
    reader = csv.reader(lines)
    try:
        header = next(reader)
    except StopIteration:
        raise TraceSchemaError("empty trace file") from None
    n_params = len(header) - 4
    if (
        n_params < 1
        or header[:3] != ["app", "kernel_id", "bb_id"]
        or header[-1] != "count"
        or header[3:-1] != [f"p{i}" for i in range(n_params)]
    ):
        raise TraceSchemaError(f"unexpected trace header {header}")
    raw: list[TraceRecord] = []
    for line_no, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise TraceParseError(
                line_no, f"expected {len(header)} columns, got {len(row)}"
            )
        try:
            kernel_id = int(row[1])
            bb_id = int(row[2])
            params = tuple(int(v) for v in row[3:-1])
            count = int(row[-1])
        except ValueError as exc:
            raise TraceParseError(line_no, f"non-integer field: {exc}") from exc
        if kernel_id < 0 or bb_id < 0:
            raise TraceParseError(line_no, "negative kernel or block id")
        if count < 0:
            raise TraceParseError(line_no, f"negative count {count}")
        raw.append(TraceRecord(row[0], kernel_id, bb_id, params, count))
    return _trim_padding(raw)


def _trim_padding(records: list[TraceRecord]) -> list[TraceRecord]:
    arity: dict[str, int] = {}
    for record in records:
        used = 1
        for i, value in enumerate(record.params):
            if value != 0:
                used = i + 1
        arity[record.app] = max(arity.get(record.app, 1), used)
    return [
        r if len(r.params) == arity[r.app] else
        TraceRecord(r.app, r.kernel_id, r.bb_id, r.params[: arity[r.app]], r.count)
        for r in records
    ]


def group_series(
    records: Iterable[TraceRecord],
    arity: Optional[Mapping[str, int]] = None,
) -> list[BbSeries]:
    """Group records into one series per (app, kernel, block).

    Duplicate parameter vectors within a series collapse (last wins) and
    are tallied in ``duplicates_collapsed``.  Inconsistent arity within an
    app raises TraceSchemaError.
    """
    seen_arity: dict[str, int] = {}
    grouped: dict[tuple[str, int, int], dict[tuple[int, ...], int]] = {}
    totals: dict[tuple[str, int, int], int] = {}
    for record in records:
        params = record.params
        if arity is not None and record.app in arity:
            params = params[: arity[record.app]]
        expected = seen_arity.setdefault(record.app, len(params))
        if len(params) != expected:
            raise TraceSchemaError(
                f"app {record.app!r} mixes arity {expected} and {len(params)}"
            )
        key = (record.app, record.kernel_id, record.bb_id)
        grouped.setdefault(key, {})[params] = record.count
        totals[key] = totals.get(key, 0) + 1
    series = []
    for key in sorted(grouped):
        by_params = grouped[key]
        X = np.array(list(by_params.keys()), dtype=float)
        y = np.array(list(by_params.values()), dtype=float)
        series.append(BbSeries(key, X, y, duplicates_collapsed=totals[key] - len(by_params)))
    return series


def ingest(source: Union[str, Path, Iterable[str]]) -> list[BbSeries]:
    """Read a trace CSV and group it into per-block series."""
    return group_series(read_trace_csv(source))


# ---------------------------------------------------------------------------
# Split protocols
# ---------------------------------------------------------------------------


class SplitMode(Enum):
    HIGH_LOW = "high-low"
    MIXED_HIGH_LOW = "mixed-high-low"
    RANDOM = "random"


@dataclass(frozen=True)
class SplitSpec:
    mode: SplitMode
    fraction: float = 0.7
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.fraction < 1.0:
            raise ValueError(f"fraction must be in (0, 1), got {self.fraction}")


def classify(series: BbSeries, spec: SplitSpec) -> np.ndarray:
    """Label every sample train/test/discarded without materializing splits.

    Range modes put a per-feature threshold at min + fraction * (max - min);
    a sample is LOW when every feature is at or below its threshold, HIGH
    when every feature is above, MIXED otherwise.  Random mode shuffles
    with the seed and sends the first ceil(fraction * n) samples to train.
    """
    n = len(series)
    if n == 0:
        raise DegenerateSplitError(LABEL_TRAIN, "series is empty")
    labels = np.full(n, LABEL_DISCARDED, dtype=object)
    if spec.mode is SplitMode.RANDOM:
        order = np.random.default_rng(spec.seed).permutation(n)
        n_train = math.ceil(spec.fraction * n)
        labels[order[:n_train]] = LABEL_TRAIN
        labels[order[n_train:]] = LABEL_TEST
        return labels
    mins = series.X.min(axis=0)
    maxs = series.X.max(axis=0)
    flat = np.flatnonzero(maxs <= mins)
    if flat.size:
        raise ConstantFeatureError(
            f"features {flat.tolist()} are constant; range split undefined for {series.key}"
        )
    theta = mins + spec.fraction * (maxs - mins)
    low = (series.X <= theta).all(axis=1)
    high = (series.X > theta).all(axis=1)
    labels[high] = LABEL_TEST
    if spec.mode is SplitMode.HIGH_LOW:
        labels[low] = LABEL_TRAIN
    else:  # MIXED_HIGH_LOW: mixed samples join the training side
        labels[~high] = LABEL_TRAIN
    return labels


def split(series: BbSeries, spec: SplitSpec) -> tuple[BbSeries, BbSeries]:
    """Partition a series; raises DegenerateSplitError when a side is empty."""
    labels = classify(series, spec)
    train_idx = np.flatnonzero(labels == LABEL_TRAIN)
    test_idx = np.flatnonzero(labels == LABEL_TEST)
    if train_idx.size == 0:
        raise DegenerateSplitError(LABEL_TRAIN, f"{series.key} under {spec.mode.value}")
    if test_idx.size == 0:
        raise DegenerateSplitError(LABEL_TEST, f"{series.key} under {spec.mode.value}")
    return series.take(train_idx), series.take(test_idx)


# ---------------------------------------------------------------------------
# Min-max normalization (training statistics only)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Normalizer:
    """Per-feature and target min-max maps fitted on the training split.

    Features and targets map to [0, 1] on training data.  Test data may
    map outside [0, 1] (that is the extrapolation signal) and is never
    clamped.  A constant dimension maps to 0 and inverts to the constant.
    """

    x_min: np.ndarray
    x_max: np.ndarray
    y_min: float
    y_max: float

    @property
    def constant_target(self) -> bool:
        return self.y_max <= self.y_min

    @property
    def constant_features(self) -> tuple[int, ...]:
        return tuple(np.flatnonzero(self.x_max <= self.x_min).tolist())

    def transform_features(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        span = self.x_max - self.x_min
        safe = np.where(span > 0, span, 1.0)
        out = (X - self.x_min) / safe
        if X.ndim == 2:
            out[:, span <= 0] = 0.0
        else:
            out = np.where(span > 0, out, 0.0)
        return out

    def transform_targets(self, y: np.ndarray) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        span = self.y_max - self.y_min
        if span <= 0:
            return np.zeros_like(y)
        return (y - self.y_min) / span

    def inverse_targets(self, y_norm: np.ndarray) -> np.ndarray:
        y_norm = np.asarray(y_norm, dtype=float)
        return y_norm * (self.y_max - self.y_min) + self.y_min


def fit_normalizer(train: BbSeries) -> Normalizer:
    if len(train) == 0:
        raise ValueError("cannot fit a normalizer on an empty series")
    return Normalizer(
        x_min=train.X.min(axis=0),
        x_max=train.X.max(axis=0),
        y_min=float(train.y.min()),
        y_max=float(train.y.max()),
    )
