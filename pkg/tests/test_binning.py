"""Binning: midpoint thresholds, equal-frequency bins, monotonicity."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cbboost.binning import BinMap, build_bins
from cbboost.datasets import Dataset, FeatureMatrix, LabelBlock, Task
from cbboost.errors import ParameterError


def dataset_from(values):
    values = np.asarray(values, dtype=np.float64)
    y = np.zeros(len(values), dtype=np.int8)
    y[: len(values) // 2] = 1
    return Dataset(FeatureMatrix(values), LabelBlock(Task.binary(), y))


class TestThresholds:
    def test_midpoints_for_few_distinct_values(self):
        d = dataset_from([[1.0], [2.0], [3.0]])
        bins = build_bins(d, [0, 1, 2], max_bin=256)
        np.testing.assert_array_equal(bins.thresholds[0], [1.5, 2.5])
        assert bins.n_bins[0] == 3

    def test_constant_feature_single_bin(self):
        d = dataset_from([[7.0]] * 5)
        bins = build_bins(d, range(5), max_bin=64)
        assert len(bins.thresholds[0]) == 0
        codes = bins.codes(d.features.values)
        assert set(codes[:, 0]) == {0}

    def test_equal_frequency_bins_within_one(self):
        rng = np.random.default_rng(0)
        values = rng.uniform(0, 1, (10000, 1))
        d = dataset_from(values)
        bins = build_bins(d, range(10000), max_bin=64)
        codes = bins.codes(values)[:, 0]
        counts = np.bincount(codes, minlength=64)
        assert len(bins.thresholds[0]) == 63
        assert counts.min() >= 10000 // 64
        assert counts.max() <= 10000 // 64 + 1

    def test_exact_binning_when_distinct_fits(self):
        rng = np.random.default_rng(1)
        distinct = rng.normal(size=50)
        values = rng.choice(distinct, size=(400, 1))
        d = dataset_from(values)
        bins = build_bins(d, range(400), max_bin=64)
        codes = bins.codes(values)[:, 0]
        # Same value always lands in the same bin and distinct values never share.
        mapping = {}
        for v, c in zip(values[:, 0], codes):
            mapping.setdefault(v, set()).add(c)
        assert all(len(s) == 1 for s in mapping.values())
        assert len({next(iter(s)) for s in mapping.values()}) == len(mapping)

    def test_thresholds_computed_from_training_rows_only(self):
        d = dataset_from([[v] for v in [0.0, 1.0, 2.0, 3.0, 100.0]])
        bins = build_bins(d, [0, 1, 2, 3], max_bin=256)
        np.testing.assert_array_equal(bins.thresholds[0], [0.5, 1.5, 2.5])
        # The held-out extreme value still gets a (top) code.
        assert bins.codes(d.features.values)[4, 0] == 3

    def test_max_bin_validation(self):
        d = dataset_from([[1.0], [2.0]])
        with pytest.raises(ParameterError):
            build_bins(d, [0, 1], max_bin=1)


class TestCodes:
    def test_missing_values_get_dedicated_code(self):
        values = np.array([[1.0], [np.nan], [2.0]])
        d = dataset_from(values)
        bins = build_bins(d, [0, 2], max_bin=16)
        codes = bins.codes(values)
        assert codes[1, 0] == bins.missing_code(0) == bins.n_bins[0]

    def test_bin_count_respects_max_bin(self):
        rng = np.random.default_rng(2)
        values = rng.normal(size=(5000, 3))
        d = dataset_from(values)
        for max_bin in (2, 16, 64, 256):
            bins = build_bins(d, range(5000), max_bin=max_bin)
            assert all(nb <= max_bin for nb in bins.n_bins)

    @settings(max_examples=50, deadline=None)
    @given(
        st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=2, max_size=200),
        st.integers(2, 32),
    )
    def test_binning_is_order_preserving(self, raw, max_bin):
        values = np.asarray(raw, dtype=np.float64).reshape(-1, 1)
        d = dataset_from(values)
        bins = build_bins(d, range(len(values)), max_bin=max_bin)
        codes = bins.codes(values)[:, 0]
        order = np.argsort(values[:, 0], kind="stable")
        assert np.all(np.diff(codes[order]) >= 0)

    def test_strictly_increasing_threshold_invariant(self):
        with pytest.raises(ParameterError):
            BinMap([np.array([1.0, 1.0, 2.0])])
