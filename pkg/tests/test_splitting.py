"""Split plans: sizes, determinism, stratification bounds, serialization."""

import numpy as np
import pytest

from cbboost.datasets import Dataset, FeatureMatrix, LabelBlock, Task
from cbboost.errors import SplitError
from cbboost.splitting import SplitPlan, make_split_plan


def binary_dataset(n=100, pos_rate=0.3, seed=0):
    rng = np.random.default_rng(seed)
    y = (rng.random(n) < pos_rate).astype(np.int8)
    y[0] = 0
    y[1] = 1
    return Dataset(FeatureMatrix(rng.normal(size=(n, 2))), LabelBlock(Task.binary(), y))


def multiclass_dataset(n=120, k=3, seed=0):
    rng = np.random.default_rng(seed)
    y = rng.integers(0, k, n)
    y[:k] = np.arange(k)
    return Dataset(FeatureMatrix(rng.normal(size=(n, 2))), LabelBlock(Task.multiclass(k), y))


class TestPlanShape:
    def test_exact_sizes_for_100_samples(self):
        d = binary_dataset(100)
        plan = make_split_plan(d, seed=7)
        assert len(plan.test) == 20
        assert len(plan.train) == 80
        assert [len(v) for _, v in plan.folds] == [16] * 5
        for fit, valid in plan.folds:
            assert len(fit) == 64

    def test_partition_properties(self):
        d = binary_dataset(83)
        plan = make_split_plan(d, seed=3, test_fraction=0.25, k=4)
        assert len(np.intersect1d(plan.train, plan.test)) == 0
        assert len(np.union1d(plan.train, plan.test)) == 83
        all_valid = np.concatenate([v for _, v in plan.folds])
        np.testing.assert_array_equal(np.sort(all_valid), plan.train)
        for fit, valid in plan.folds:
            assert len(np.intersect1d(fit, valid)) == 0
            np.testing.assert_array_equal(np.union1d(fit, valid), plan.train)

    def test_determinism(self):
        d = binary_dataset(100)
        a = make_split_plan(d, seed=7)
        b = make_split_plan(d, seed=7)
        assert a.to_json() == b.to_json()

    def test_different_seeds_differ(self):
        d = binary_dataset(100)
        a = make_split_plan(d, seed=7)
        b = make_split_plan(d, seed=8)
        assert a.to_json() != b.to_json()


class TestStratification:
    def test_binary_fold_proportions_within_one_sample(self):
        d = binary_dataset(200, pos_rate=0.2, seed=1)
        plan = make_split_plan(d, seed=2)
        y = d.labels.y
        train_pos_rate = y[plan.train].mean()
        for fit, valid in plan.folds:
            pos = y[valid].sum()
            expected = train_pos_rate * len(valid)
            assert abs(pos - expected) <= 1.0

    def test_test_split_proportions_within_one_sample(self):
        d = multiclass_dataset(300, k=4, seed=2)
        plan = make_split_plan(d, seed=5)
        y = d.labels.y
        for c in range(4):
            total = (y == c).sum()
            got = (y[plan.test] == c).sum()
            assert abs(got - total * 0.2) <= 1.0

    def test_multilabel_folds_partition(self):
        rng = np.random.default_rng(3)
        y = rng.integers(0, 2, (90, 4))
        y[:, 3] = 0
        y[:6, 3] = 1  # one rare label
        d = Dataset(FeatureMatrix(rng.normal(size=(90, 2))), LabelBlock(Task.multilabel(4), y))
        plan = make_split_plan(d, seed=1, k=3)
        all_valid = np.concatenate([v for _, v in plan.folds])
        np.testing.assert_array_equal(np.sort(all_valid), plan.train)

    def test_rare_class_suggests_non_stratified(self):
        rng = np.random.default_rng(4)
        y = rng.integers(0, 2, 10)
        y[:] = [0, 1, 2, 0, 1, 0, 1, 0, 1, 0][:10]
        d = Dataset(FeatureMatrix(rng.normal(size=(10, 1))), LabelBlock(Task.multiclass(3), y))
        with pytest.raises(SplitError, match="stratify=False"):
            make_split_plan(d, seed=0, k=5)

    def test_non_stratified_mode_accepts_rare_class(self):
        rng = np.random.default_rng(4)
        y = np.array([0, 1, 2, 0, 1, 0, 1, 0, 1, 0])
        d = Dataset(FeatureMatrix(rng.normal(size=(10, 1))), LabelBlock(Task.multiclass(3), y))
        plan = make_split_plan(d, seed=0, k=5, stratify=False)
        assert plan.k == 5


class TestSerialization:
    def test_json_round_trip(self, tmp_path):
        d = binary_dataset(60)
        plan = make_split_plan(d, seed=11, k=3)
        path = tmp_path / "plan.json"
        plan.save(path)
        again = SplitPlan.load(path)
        assert again.to_json() == plan.to_json()
        np.testing.assert_array_equal(again.train, plan.train)
        for (f1, v1), (f2, v2) in zip(again.folds, plan.folds):
            np.testing.assert_array_equal(f1, f2)
            np.testing.assert_array_equal(v1, v2)

    def test_bad_version_rejected(self):
        with pytest.raises(SplitError):
            SplitPlan.from_json('{"format_version": 99}')


class TestErrors:
    def test_tiny_dataset_rejected(self):
        d = binary_dataset(6)
        with pytest.raises(SplitError):
            make_split_plan(d, seed=0, k=5)

    def test_bad_fraction(self):
        d = binary_dataset(100)
        with pytest.raises(SplitError):
            make_split_plan(d, seed=0, test_fraction=1.5)
