import io

import numpy as np
import pytest

from bbcount.traces import (
    BbSeries,
    ConstantFeatureError,
    DegenerateSplitError,
    LABEL_DISCARDED,
    LABEL_TEST,
    LABEL_TRAIN,
    SplitMode,
    SplitSpec,
    TraceParseError,
    TraceRecord,
    TraceSchemaError,
    classify,
    fit_normalizer,
    group_series,
    ingest,
    read_trace_csv,
    split,
)


def csv_lines(*rows, arity=1):
    header = "app,kernel_id,bb_id," + ",".join(f"p{i}" for i in range(arity)) + ",count"
    return io.StringIO("\n".join([header, *rows]) + "\n")


def series_1d(values, counts=None):
    X = np.array(values, dtype=float).reshape(-1, 1)
    y = np.arange(len(values), dtype=float) if counts is None else np.array(counts, dtype=float)
    return BbSeries(("a", 0, 0), X, y)


class TestIngest:
    def test_grouping(self):
        # 3 sweep points x 3 blocks -> 3 series of 3 samples
        rows = [
            f"app,0,{bb},{p},{p * (bb + 1)}"
            for p in (10, 20, 30)
            for bb in (0, 1, 2)
        ]
        series = ingest(csv_lines(*rows))
        assert len(series) == 3
        assert all(len(s) == 3 for s in series)
        assert [s.key for s in series] == [("app", 0, 0), ("app", 0, 1), ("app", 0, 2)]

    def test_duplicate_collapses_last_wins(self):
        series = ingest(csv_lines("a,0,0,10,5", "a,0,0,20,6", "a,0,0,10,7"))
        assert len(series) == 1
        s = series[0]
        assert len(s) == 2
        assert s.duplicates_collapsed == 1
        by_param = dict(zip(s.X.ravel().tolist(), s.y.tolist()))
        assert by_param[10.0] == 7.0  # last value won

    def test_malformed_row_names_line(self):
        with pytest.raises(TraceParseError) as err:
            read_trace_csv(csv_lines("a,0,1,10,abc"))
        assert err.value.line == 2

    def test_wrong_column_count(self):
        with pytest.raises(TraceParseError):
            read_trace_csv(csv_lines("a,0,1,10"))

    def test_negative_count_rejected(self):
        with pytest.raises(TraceParseError):
            read_trace_csv(csv_lines("a,0,1,10,-4"))

    def test_bad_header(self):
        with pytest.raises(TraceSchemaError):
            read_trace_csv(io.StringIO("foo,bar\n1,2\n"))

    def test_zero_padding_trimmed_per_app(self):
        # "wide" is 2-parameter, "slim" is 1-parameter padded with zeros
        lines = csv_lines(
            "wide,0,0,3,4,12",
            "wide,0,0,5,6,30",
            "slim,0,0,7,0,7",
            "slim,0,0,9,0,9",
            arity=2,
        )
        series = {s.key[0]: s for s in ingest(lines)}
        assert series["wide"].arity == 2
        assert series["slim"].arity == 1

    def test_inconsistent_arity_rejected(self):
        records = [
            TraceRecord("a", 0, 0, (1, 2), 3),
            TraceRecord("a", 0, 0, (1,), 3),
        ]
        with pytest.raises(TraceSchemaError):
            group_series(records)


class TestSplit:
    def test_threshold_arithmetic_1d(self):
        # values 10..100 step 10, fraction 0.7 -> theta 73
        s = series_1d(range(10, 101, 10))
        train, test = split(s, SplitSpec(SplitMode.HIGH_LOW, 0.7, 0))
        assert sorted(train.X.ravel()) == [10, 20, 30, 40, 50, 60, 70]
        assert sorted(test.X.ravel()) == [80, 90, 100]

    def test_tie_at_threshold_goes_low(self):
        # values 0..10, fraction 0.7 -> theta exactly 7
        s = series_1d(range(0, 11))
        labels = classify(s, SplitSpec(SplitMode.HIGH_LOW, 0.7, 0))
        assert labels[list(s.X.ravel()).index(7.0)] == LABEL_TRAIN

    def test_mixed_sample_classification(self):
        X = np.array([[1, 1], [10, 10], [1, 10], [10, 1]], dtype=float)
        s = BbSeries(("a", 0, 0), X, np.arange(4, dtype=float))
        spec = SplitSpec(SplitMode.HIGH_LOW, 0.7, 0)
        labels = classify(s, spec)
        assert list(labels) == [LABEL_TRAIN, LABEL_TEST, LABEL_DISCARDED, LABEL_DISCARDED]
        spec = SplitSpec(SplitMode.MIXED_HIGH_LOW, 0.7, 0)
        labels = classify(s, spec)
        assert list(labels) == [LABEL_TRAIN, LABEL_TEST, LABEL_TRAIN, LABEL_TRAIN]

    def test_partition_property(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            n = int(rng.integers(4, 40))
            X = rng.integers(0, 50, size=(n, 2)).astype(float)
            X[0] = 0.0
            X[1] = 50.0  # force spread in both features
            s = BbSeries(("a", 0, 0), X, rng.integers(0, 9, n).astype(float))
            labels = classify(s, SplitSpec(SplitMode.HIGH_LOW, 0.7, 0))
            assert len(labels) == n
            n_train = (labels == LABEL_TRAIN).sum()
            n_test = (labels == LABEL_TEST).sum()
            n_mixed = (labels == LABEL_DISCARDED).sum()
            assert n_train + n_test + n_mixed == n

    def test_threshold_monotonicity(self):
        rng = np.random.default_rng(4)
        X = rng.integers(0, 100, size=(60, 2)).astype(float)
        X[0] = 0.0
        X[1] = 100.0
        s = BbSeries(("a", 0, 0), X, np.zeros(60))
        prev_train = None
        for fraction in (0.3, 0.5, 0.7, 0.9):
            labels = classify(s, SplitSpec(SplitMode.HIGH_LOW, fraction, 0))
            train = {i for i, l in enumerate(labels) if l == LABEL_TRAIN}
            if prev_train is not None:
                assert prev_train <= train
            prev_train = train

    def test_random_split_sizes_and_determinism(self):
        s = series_1d(range(10))
        spec = SplitSpec(SplitMode.RANDOM, 0.7, 42)
        train1, test1 = split(s, spec)
        train2, test2 = split(s, spec)
        assert len(train1) == 7 and len(test1) == 3
        assert np.array_equal(train1.X, train2.X)
        assert np.array_equal(test1.y, test2.y)
        other = split(s, SplitSpec(SplitMode.RANDOM, 0.7, 43))[0]
        assert not np.array_equal(train1.X, other.X)

    def test_random_disjoint_union(self):
        s = series_1d(range(23))
        train, test = split(s, SplitSpec(SplitMode.RANDOM, 0.7, 1))
        both = np.concatenate([train.X.ravel(), test.X.ravel()])
        assert sorted(both.tolist()) == list(range(23))

    def test_degenerate_split_names_partition(self):
        # no sample is high in BOTH features -> empty test partition
        X = np.array([[1, 10], [10, 1], [2, 2]], dtype=float)
        s = BbSeries(("a", 0, 0), X, np.arange(3, dtype=float))
        with pytest.raises(DegenerateSplitError) as err:
            split(s, SplitSpec(SplitMode.HIGH_LOW, 0.7, 0))
        assert err.value.partition == LABEL_TEST
        # random split of a 2-sample series at 0.9 sends everything to train
        with pytest.raises(DegenerateSplitError) as err:
            split(series_1d([1, 2]), SplitSpec(SplitMode.RANDOM, 0.9, 0))
        assert err.value.partition == LABEL_TEST

    def test_constant_feature_rejected_for_range_modes(self):
        X = np.ones((5, 1))
        s = BbSeries(("a", 0, 0), X, np.arange(5, dtype=float))
        with pytest.raises(ConstantFeatureError):
            classify(s, SplitSpec(SplitMode.HIGH_LOW, 0.7, 0))

    def test_fraction_validation(self):
        with pytest.raises(ValueError):
            SplitSpec(SplitMode.RANDOM, 1.0, 0)
        with pytest.raises(ValueError):
            SplitSpec(SplitMode.RANDOM, 0.0, 0)


class TestNormalizer:
    def test_targets_map_to_unit_interval(self):
        s = series_1d([1, 2, 3], counts=[0, 50, 100])
        norm = fit_normalizer(s)
        np.testing.assert_allclose(norm.transform_targets(s.y), [0.0, 0.5, 1.0])

    def test_extrapolated_target_beyond_one(self):
        s = series_1d([1, 2, 3], counts=[0, 50, 100])
        norm = fit_normalizer(s)
        assert norm.transform_targets(np.array([150.0]))[0] == pytest.approx(1.5)

    def test_features_not_clamped(self):
        s = series_1d([10, 20], counts=[1, 2])
        norm = fit_normalizer(s)
        out = norm.transform_features(np.array([[25.0]]))
        assert out[0, 0] == pytest.approx(1.5)

    def test_round_trip_identity(self):
        rng = np.random.default_rng(9)
        for _ in range(25):
            y = rng.uniform(-100, 1000, size=12)
            s = BbSeries(("a", 0, 0), rng.uniform(0, 9, (12, 2)), y)
            norm = fit_normalizer(s)
            back = norm.inverse_targets(norm.transform_targets(y))
            np.testing.assert_allclose(back, y, rtol=1e-12, atol=1e-9)

    def test_constant_target_flagged_and_inverts_to_constant(self):
        s = series_1d([1, 2, 3], counts=[7, 7, 7])
        norm = fit_normalizer(s)
        assert norm.constant_target
        np.testing.assert_array_equal(norm.transform_targets(s.y), [0, 0, 0])
        np.testing.assert_array_equal(norm.inverse_targets(np.array([0.0, 0.3])), [7, 7])

    def test_train_only_statistics(self):
        # refitting on train + test must move the stats when test extends the range
        train = series_1d([1, 2, 3], counts=[10, 20, 30])
        test = series_1d([4, 5], counts=[40, 50])
        norm_train = fit_normalizer(train)
        combined = BbSeries(
            ("a", 0, 0),
            np.vstack([train.X, test.X]),
            np.concatenate([train.y, test.y]),
        )
        norm_all = fit_normalizer(combined)
        assert norm_all.y_max != norm_train.y_max
        assert norm_all.x_max[0] != norm_train.x_max[0]
