"""The three train/test protocols: range-based high-low (extrapolation),
high-low with mixed samples kept in training, and seeded random splits."""

import numpy as np

from bbcount.traces import BbSeries, SplitMode, SplitSpec, classify, fit_normalizer

# a 2-D series whose samples cover low, high, and mixed corners
X = np.array([[n, m] for n in range(1, 11) for m in range(1, 11)], dtype=float)
series = BbSeries(("demo", 0, 0), X, (X[:, 0] * X[:, 1]))

for mode in (SplitMode.HIGH_LOW, SplitMode.MIXED_HIGH_LOW, SplitMode.RANDOM):
    spec = SplitSpec(mode, fraction=0.7, seed=0)
    labels = classify(series, spec)
    sizes = {label: int((labels == label).sum()) for label in set(labels)}
    print(f"{mode.value:15s} -> {sizes}")

# per-feature threshold: theta = min + 0.7 * (max - min) = 1 + 0.7 * 9 = 7.3,
# so a sample is LOW only when BOTH features are <= 7.3
spec = SplitSpec(SplitMode.HIGH_LOW, 0.7, 0)
labels = classify(series, spec)
print("\nclassification of a few samples under high-low:")
for probe in ([1, 1], [8, 8], [2, 9], [7, 7], [7, 8]):
    idx = np.where((X == probe).all(axis=1))[0][0]
    print(f"  {probe}: {labels[idx]}")

# normalization statistics come from the training portion only, so test
# samples land outside [0, 1] exactly when they extrapolate the range
train_idx = np.where(labels == "train")[0]
test_idx = np.where(labels == "test")[0]
norm = fit_normalizer(series.take(train_idx))
test_targets = norm.transform_targets(series.y[test_idx])
print(
    f"\nnormalized test targets span {test_targets.min():.2f}..{test_targets.max():.2f}"
    " (beyond 1.0 = extrapolation)"
)
