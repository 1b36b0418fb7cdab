"""Loaders, label contracts, imbalance ratio, CSV round trip."""

import numpy as np
import pytest

from cbboost.datasets import (
    Dataset,
    FeatureMatrix,
    LabelBlock,
    Task,
    imbalance_ratio,
    load_csv,
    load_libsvm,
    load_matrix_csv,
    save_csv,
)
from cbboost.errors import DataError, LabelError, TaskError


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return str(path)


class TestLoadCsv:
    def test_small_binary_file(self, tmp_path):
        p = write(tmp_path / "d.csv", "a,b,label\n1,2,0\n3,4,1\n5,6,0\n")
        d = load_csv(p, "label", "binary")
        assert d.n_samples == 3 and d.n_features == 2
        assert d.task == Task.binary()
        np.testing.assert_array_equal(d.labels.y, [0, 1, 0])
        np.testing.assert_array_equal(d.features.values, [[1, 2], [3, 4], [5, 6]])

    def test_multilabel_emotions_shape(self, tmp_path):
        # 72 features and 6 label columns, the shape of a small music dataset.
        rng = np.random.default_rng(0)
        n, m, k = 20, 72, 6
        header = ",".join([f"f{i}" for i in range(m)] + [f"label_{j}" for j in range(k)])
        rows = []
        for i in range(n):
            feats = rng.normal(size=m)
            labels = rng.integers(0, 2, k)
            rows.append(",".join([repr(float(v)) for v in feats] + [str(int(v)) for v in labels]))
        p = write(tmp_path / "ml.csv", header + "\n" + "\n".join(rows) + "\n")
        d = load_csv(p, [f"label_{j}" for j in range(k)], "multilabel")
        assert d.n_features == 72
        assert d.task == Task.multilabel(6)

    def test_binary_label_two_rejected(self, tmp_path):
        p = write(tmp_path / "d.csv", "a,label\n1,0\n2,2\n")
        with pytest.raises(LabelError):
            load_csv(p, "label", "binary")

    def test_unparseable_cell_names_row_and_column(self, tmp_path):
        p = write(tmp_path / "d.csv", "a,b,label\n1,2,0\n3,oops,1\n")
        with pytest.raises(DataError, match="row 2.*'b'"):
            load_csv(p, "label", "binary")

    def test_missing_cells_become_nan(self, tmp_path):
        p = write(tmp_path / "d.csv", "a,b,label\n1,,0\n,4,1\n")
        d = load_csv(p, "label", "binary")
        assert np.isnan(d.features.values[0, 1])
        assert np.isnan(d.features.values[1, 0])
        assert d.features.missing_mask.sum() == 2

    def test_label_by_index(self, tmp_path):
        p = write(tmp_path / "d.csv", "x,y,z\n1,2,0\n3,4,1\n")
        d = load_csv(p, 2, "binary")
        np.testing.assert_array_equal(d.labels.y, [0, 1])

    def test_multiclass_requires_dense_indices(self, tmp_path):
        p = write(tmp_path / "d.csv", "a,label\n1,0\n2,2\n")  # class 1 missing
        with pytest.raises(LabelError):
            load_csv(p, "label", "multiclass")

    def test_multiclass_single_class_rejected(self, tmp_path):
        p = write(tmp_path / "d.csv", "a,label\n1,0\n2,0\n")
        with pytest.raises(TaskError):
            load_csv(p, "label", "multiclass")

    def test_missing_label_cell_rejected(self, tmp_path):
        p = write(tmp_path / "d.csv", "a,label\n1,\n2,1\n")
        with pytest.raises(LabelError):
            load_csv(p, "label", "binary")


class TestLoadLibsvm:
    def test_sparse_row_with_inferred_width(self, tmp_path):
        p = write(tmp_path / "d.svm", "1 1:0.5 3:2.0\n0 2:1.0\n")
        d = load_libsvm(p, "binary")
        assert d.n_features == 3
        np.testing.assert_array_equal(d.features.values[0], [0.5, 0.0, 2.0])
        np.testing.assert_array_equal(d.labels.y, [1, 0])

    def test_empty_feature_list_is_zero_row(self, tmp_path):
        p = write(tmp_path / "d.svm", "1 1:0.5 2:1.5\n0\n")
        d = load_libsvm(p, "binary")
        np.testing.assert_array_equal(d.features.values[1], [0.0, 0.0])

    def test_non_increasing_indices_rejected(self, tmp_path):
        p = write(tmp_path / "d.svm", "1 3:0.5 2:2.0\n")
        with pytest.raises(DataError, match="strictly increasing"):
            load_libsvm(p, "binary")

    def test_comments_ignored(self, tmp_path):
        p = write(tmp_path / "d.svm", "# a comment\n1 1:2.0 # trailing\n0 1:1.0\n")
        d = load_libsvm(p, "binary")
        assert d.n_samples == 2

    def test_multilabel_comma_separated_labels(self, tmp_path):
        p = write(tmp_path / "d.svm", "0,2 1:1.0\n1 2:1.0\n 1:0.5\n")
        d = load_libsvm(p, "multilabel")
        assert d.task == Task.multilabel(3)
        np.testing.assert_array_equal(d.labels.y, [[1, 0, 1], [0, 1, 0], [0, 0, 0]])

    def test_multiclass_labels(self, tmp_path):
        p = write(tmp_path / "d.svm", "0 1:1\n2 1:2\n1 1:3\n")
        d = load_libsvm(p, "multiclass")
        assert d.task == Task.multiclass(3)


class TestImbalanceRatio:
    def test_ecoli_like_counts(self):
        y = np.array([0] * 301 + [1] * 35)
        d = Dataset(FeatureMatrix(np.zeros((336, 1))), LabelBlock(Task.binary(), y))
        assert imbalance_ratio(d) == pytest.approx(8.6, abs=0.01)

    def test_balanced_is_one(self):
        y = np.array([0, 1] * 10)
        d = Dataset(FeatureMatrix(np.zeros((20, 1))), LabelBlock(Task.binary(), y))
        assert imbalance_ratio(d) == 1.0

    def test_multilabel_uses_label_counts(self):
        y = np.zeros((50, 2), dtype=np.int8)
        y[:10, 0] = 1
        y[:40, 1] = 1
        d = Dataset(FeatureMatrix(np.zeros((50, 1))), LabelBlock(Task.multilabel(2), y))
        assert imbalance_ratio(d) == 4.0

    def test_empty_class_rejected(self):
        y = np.zeros(10, dtype=np.int8)
        d = Dataset(FeatureMatrix(np.zeros((10, 1))), LabelBlock(Task.binary(), y))
        with pytest.raises(LabelError):
            imbalance_ratio(d)


class TestRoundTrip:
    @pytest.mark.parametrize("task_kind", ["binary", "multiclass", "multilabel"])
    def test_save_then_load_is_identical(self, tmp_path, task_kind):
        rng = np.random.default_rng(5)
        n, m = 40, 3
        X = rng.normal(size=(n, m)) * 1e3
        X[rng.random((n, m)) < 0.1] = np.nan
        if task_kind == "binary":
            labels = LabelBlock(Task.binary(), rng.integers(0, 2, n))
        elif task_kind == "multiclass":
            y = rng.integers(0, 4, n)
            y[:4] = [0, 1, 2, 3]
            labels = LabelBlock(Task.multiclass(4), y)
        else:
            labels = LabelBlock(Task.multilabel(3), rng.integers(0, 2, (n, 3)))
        d = Dataset(FeatureMatrix(X), labels)
        path = tmp_path / "out.csv"
        save_csv(d, path)
        if task_kind == "multilabel":
            spec = [f"label_{j}" for j in range(3)]
        else:
            spec = "label"
        again = load_csv(str(path), spec, task_kind)
        np.testing.assert_array_equal(again.labels.y, d.labels.y)
        np.testing.assert_array_equal(again.features.values, d.features.values)

    def test_load_matrix_csv(self, tmp_path):
        p = write(tmp_path / "m.csv", "a,b\n1.5,2\n,3\n")
        m = load_matrix_csv(p)
        assert m.n_samples == 2 and m.n_features == 2
        assert np.isnan(m.values[1, 0])


class TestValidation:
    def test_infinite_feature_rejected(self):
        with pytest.raises(DataError):
            FeatureMatrix(np.array([[1.0, np.inf]]))

    def test_length_mismatch_rejected(self):
        with pytest.raises(DataError):
            Dataset(FeatureMatrix(np.zeros((3, 1))), LabelBlock(Task.binary(), [0, 1]))

    def test_task_needs_two_classes(self):
        with pytest.raises(TaskError):
            Task("multiclass", 1)

    def test_unknown_task_kind(self):
        with pytest.raises(TaskError):
            Task("ranking", 3)
