"""Evaluation metrics: MSE, Pearson/Spearman, KDE curves, heatmap data.

Correlations return None (an explicit undefined marker) instead of NaN
when an input vector is constant, so reports can say "undefined" rather
than silently propagating.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np


class MetricShapeError(ValueError):
    """Metric inputs have mismatched or unusable shapes."""


class BandwidthError(ValueError):
    """KDE bandwidth cannot be derived (zero variance) and none was given."""


def _pair(a, b) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.ndim != 1 or b.ndim != 1 or a.shape != b.shape:
        raise MetricShapeError(f"expected equal-length vectors, got {a.shape} and {b.shape}")
    return a, b


def mse(pred, actual) -> float:
    """Mean squared error, (1/n) * sum((pred_i - actual_i)^2)."""
    pred, actual = _pair(pred, actual)
    if pred.size == 0:
        raise MetricShapeError("mse of empty vectors")
    return float(np.mean((pred - actual) ** 2))


def pearson(a, b) -> Optional[float]:
    """Sample Pearson coefficient; None when either vector is constant."""
    a, b = _pair(a, b)
    if a.size < 2:
        raise MetricShapeError("pearson needs length >= 2")
    da = a - a.mean()
    db = b - b.mean()
    denom = math.sqrt(float(da @ da)) * math.sqrt(float(db @ db))
    if denom == 0.0:
        return None
    r = float(da @ db) / denom
    return max(-1.0, min(1.0, r))


def rankdata(a) -> np.ndarray:
    """Fractional ranks starting at 1; ties receive the average rank."""
    a = np.asarray(a, dtype=float)
    order = np.argsort(a, kind="stable")
    ranks = np.empty(a.size, dtype=float)
    i = 0
    while i < a.size:
        j = i
        while j + 1 < a.size and a[order[j + 1]] == a[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def spearman(a, b) -> Optional[float]:
    """Pearson correlation of the fractional ranks; None on zero rank variance."""
    a, b = _pair(a, b)
    if a.size < 2:
        raise MetricShapeError("spearman needs length >= 2")
    return pearson(rankdata(a), rankdata(b))


def accuracy_percent(avg_mse: float) -> float:
    """Report-style accuracy, 100 * (1 - avg normalized MSE), clamped to [0, 100]."""
    return max(0.0, min(100.0, 100.0 * (1.0 - avg_mse)))


# ---------------------------------------------------------------------------
# Distribution summaries
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class KdeCurve:
    grid: np.ndarray
    density: np.ndarray
    bandwidth: float


def kde(
    counts, bandwidth: Optional[float] = None, grid_points: int = 256
) -> KdeCurve:
    """Gaussian-kernel density estimate on an even grid.

    Default bandwidth is Scott's rule, n^(-1/5) * sample std; explicit
    bandwidth is required when the data has no spread.
    """
    x = np.asarray(counts, dtype=float)
    if x.ndim != 1 or x.size < 1:
        raise MetricShapeError("kde needs a nonempty vector")
    if bandwidth is None:
        sigma = float(np.std(x, ddof=1)) if x.size > 1 else 0.0
        if sigma <= 0.0:
            raise BandwidthError(
                "data has zero variance; pass an explicit bandwidth"
            )
        bandwidth = x.size ** (-1.0 / 5.0) * sigma
    if bandwidth <= 0.0:
        raise BandwidthError(f"bandwidth must be positive, got {bandwidth}")
    grid = np.linspace(x.min() - 3.0 * bandwidth, x.max() + 3.0 * bandwidth, grid_points)
    z = (grid[:, None] - x[None, :]) / bandwidth
    density = np.exp(-0.5 * z**2).sum(axis=1) / (x.size * bandwidth * math.sqrt(2.0 * math.pi))
    return KdeCurve(grid, density, float(bandwidth))


@dataclass(frozen=True)
class HeatmapData:
    """Square-binned joint histogram of predicted vs actual raw counts.

    ``counts[i, j]`` holds the points with prediction in bin i and actual
    in bin j; bins i == j sit on the identity line.  The bins cover
    [0, max(all values)] on both axes, so points outside (e.g. negative
    regression predictions) fall out of the histogram.
    """

    edges: np.ndarray
    counts: np.ndarray

    @property
    def bins(self) -> int:
        return len(self.edges) - 1

    def diagonal_mass(self) -> float:
        total = self.counts.sum()
        if total == 0:
            return 0.0
        return float(np.trace(self.counts)) / float(total)


def heatmap_data(pred, actual, bins: int) -> HeatmapData:
    pred, actual = _pair(pred, actual)
    if pred.size == 0:
        raise MetricShapeError("heatmap of empty vectors")
    if bins < 2:
        raise MetricShapeError(f"heatmap needs bins >= 2, got {bins}")
    hi = float(max(pred.max(), actual.max()))
    if hi <= 0.0:
        hi = 1.0
    edges = np.linspace(0.0, hi, bins + 1)
    counts, _, _ = np.histogram2d(pred, actual, bins=(edges, edges))
    return HeatmapData(edges, counts.astype(int))
