"""Tabular dataset containers and loaders for the three classification tasks.

Features are dense float64 matrices where NaN marks a missing cell.  Labels
are 0/1 vectors (binary), class indices (multi-class) or 0/1 matrices
(multi-label).  Loaders exist for headered CSV and sparse LibSVM text files.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, LabelError, TaskError

BINARY = "binary"
MULTICLASS = "multiclass"
MULTILABEL = "multilabel"
TASK_KINDS = (BINARY, MULTICLASS, MULTILABEL)


@dataclass(frozen=True)
class Task:
    """Classification task kind plus the number of classes/labels K."""

    kind: str
    n_classes: int = 2

    def __post_init__(self):
        if self.kind not in TASK_KINDS:
            raise TaskError(f"unknown task kind {self.kind!r}; expected one of {TASK_KINDS}")
        if self.n_classes < 2:
            raise TaskError(f"task {self.kind!r} needs at least 2 classes/labels, got {self.n_classes}")

    @classmethod
    def binary(cls) -> "Task":
        return cls(BINARY, 2)

    @classmethod
    def multiclass(cls, n_classes: int) -> "Task":
        return cls(MULTICLASS, n_classes)

    @classmethod
    def multilabel(cls, n_labels: int) -> "Task":
        return cls(MULTILABEL, n_labels)

    @property
    def n_outputs(self) -> int:
        """Width of the raw-score vector the model must produce."""
        return 1 if self.kind == BINARY else self.n_classes


class FeatureMatrix:
    """Dense row-major feature table; NaN entries are treated as missing."""

    def __init__(self, values):
        values = np.asarray(values, dtype=np.float64)
        if values.ndim != 2:
            raise DataError(f"feature matrix must be 2-D, got shape {values.shape}")
        n, m = values.shape
        if n < 1 or m < 1:
            raise DataError(f"feature matrix needs at least one row and one column, got {values.shape}")
        if np.isinf(values).any():
            r, c = np.argwhere(np.isinf(values))[0]
            raise DataError(f"non-finite feature value at row {r}, column {c}")
        self.values = values

    @property
    def n_samples(self) -> int:
        return self.values.shape[0]

    @property
    def n_features(self) -> int:
        return self.values.shape[1]

    @property
    def missing_mask(self) -> np.ndarray:
        return np.isnan(self.values)


class LabelBlock:
    """Labels of one dataset, validated against the declared task."""

    def __init__(self, task: Task, y):
        y = np.asarray(y)
        if task.kind == BINARY:
            y = self._check_01(y, expected_ndim=1)
        elif task.kind == MULTILABEL:
            y = self._check_01(y, expected_ndim=2)
            if y.shape[1] != task.n_classes:
                raise LabelError(f"expected {task.n_classes} label columns, got {y.shape[1]}")
        else:
            if y.ndim != 1:
                raise LabelError(f"multi-class labels must be a vector, got shape {y.shape}")
            if not np.issubdtype(y.dtype, np.integer):
                yf = np.asarray(y, dtype=np.float64)
                if np.any(yf != np.round(yf)):
                    raise LabelError("multi-class labels must be integer class indices")
                y = yf.astype(np.int64)
            else:
                y = y.astype(np.int64)
            if y.min(initial=0) < 0 or y.max(initial=0) >= task.n_classes:
                bad = y[(y < 0) | (y >= task.n_classes)][0]
                raise LabelError(f"class index {bad} outside [0, {task.n_classes})")
        self.task = task
        self.y = y

    @staticmethod
    def _check_01(y, expected_ndim):
        if y.ndim != expected_ndim:
            raise LabelError(f"expected {expected_ndim}-D labels, got shape {y.shape}")
        yf = np.asarray(y, dtype=np.float64)
        bad = (yf != 0.0) & (yf != 1.0)
        if bad.any():
            raise LabelError(f"label value {yf[bad].flat[0]!r} is not 0 or 1")
        return yf.astype(np.int8)

    @property
    def n_samples(self) -> int:
        return self.y.shape[0]

    def class_counts(self, index=None) -> np.ndarray:
        """Per-class (or per-label positive) sample counts, optionally on a row subset."""
        y = self.y if index is None else self.y[np.asarray(index)]
        if self.task.kind == BINARY:
            pos = int(y.sum())
            return np.array([len(y) - pos, pos], dtype=np.int64)
        if self.task.kind == MULTICLASS:
            return np.bincount(y, minlength=self.task.n_classes).astype(np.int64)
        return y.sum(axis=0).astype(np.int64)

    def onehot(self, index=None) -> np.ndarray:
        """Labels as an (n, K_out) float matrix in raw-score layout."""
        y = self.y if index is None else self.y[np.asarray(index)]
        if self.task.kind == BINARY:
            return np.asarray(y, dtype=np.float64).reshape(-1, 1)
        if self.task.kind == MULTICLASS:
            out = np.zeros((len(y), self.task.n_classes))
            out[np.arange(len(y)), y] = 1.0
            return out
        return np.asarray(y, dtype=np.float64)


@dataclass
class Dataset:
    """Feature matrix plus labels; the unit every other module consumes."""

    features: FeatureMatrix
    labels: LabelBlock
    feature_names: list[str] | None = None
    name: str = ""

    def __post_init__(self):
        if self.features.n_samples != self.labels.n_samples:
            raise DataError(
                f"{self.features.n_samples} feature rows but {self.labels.n_samples} label rows"
            )
        if self.feature_names is not None and len(self.feature_names) != self.features.n_features:
            raise DataError("feature_names length does not match feature count")

    @property
    def task(self) -> Task:
        return self.labels.task

    @property
    def n_samples(self) -> int:
        return self.features.n_samples

    @property
    def n_features(self) -> int:
        return self.features.n_features


def _parse_cell(text: str, row: int, col: str) -> float:
    text = text.strip()
    if text == "":
        return np.nan
    try:
        return float(text)
    except ValueError:
        raise DataError(f"cannot parse {text!r} as a number at row {row}, column {col!r}") from None


def _resolve_label_columns(header, label_spec):
    """Map a column-name/index spec (scalar or list) to header positions."""
    if isinstance(label_spec, (str, int)):
        label_spec = [label_spec]
    cols = []
    for item in label_spec:
        if isinstance(item, int):
            if not -len(header) <= item < len(header):
                raise DataError(f"label column index {item} out of range for {len(header)} columns")
            cols.append(item % len(header))
        else:
            if item not in header:
                raise DataError(f"label column {item!r} not found in header {header}")
            cols.append(header.index(item))
    if len(set(cols)) != len(cols):
        raise DataError(f"duplicate label columns in {label_spec!r}")
    return cols


def _labels_from_raw(raw: np.ndarray, task_kind: str) -> LabelBlock:
    if np.isnan(raw).any():
        raise LabelError("missing values are not allowed in label columns")
    if task_kind == BINARY:
        if raw.shape[1] != 1:
            raise LabelError(f"binary task expects one label column, got {raw.shape[1]}")
        return LabelBlock(Task.binary(), raw[:, 0])
    if task_kind == MULTICLASS:
        if raw.shape[1] != 1:
            raise LabelError(f"multi-class task expects one label column, got {raw.shape[1]}")
        y = raw[:, 0]
        if np.any(y != np.round(y)) or y.min() < 0:
            raise LabelError("multi-class labels must be non-negative integer class indices")
        y = y.astype(np.int64)
        k = int(y.max()) + 1
        if k < 2:
            raise TaskError("multi-class data contains fewer than 2 classes")
        present = np.bincount(y, minlength=k)
        if (present == 0).any():
            missing = int(np.flatnonzero(present == 0)[0])
            raise LabelError(f"class index {missing} never occurs; indices must cover [0, K)")
        return LabelBlock(Task.multiclass(k), y)
    if raw.shape[1] < 2:
        raise TaskError("multi-label task expects at least 2 label columns")
    return LabelBlock(Task.multilabel(raw.shape[1]), raw)


def load_csv(path, label_spec, task_kind: str, name: str = "") -> Dataset:
    """Load a headered CSV file.

    `label_spec` names the label column(s) by header name or position; every
    remaining column is a feature.  Empty feature cells become missing values;
    empty label cells are an error.
    """
    if task_kind not in TASK_KINDS:
        raise TaskError(f"unknown task kind {task_kind!r}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file, expected a header row") from None
        header = [h.strip() for h in header]
        label_cols = _resolve_label_columns(header, label_spec)
        feature_cols = [i for i in range(len(header)) if i not in label_cols]
        if not feature_cols:
            raise DataError(f"{path}: no feature columns left after removing labels")
        rows, label_rows = [], []
        for rownum, record in enumerate(reader, start=1):
            if len(record) != len(header):
                raise DataError(f"{path}: row {rownum} has {len(record)} cells, header has {len(header)}")
            rows.append([_parse_cell(record[i], rownum, header[i]) for i in feature_cols])
            label_rows.append([_parse_cell(record[i], rownum, header[i]) for i in label_cols])
    if not rows:
        raise DataError(f"{path}: no data rows")
    features = FeatureMatrix(np.asarray(rows))
    labels = _labels_from_raw(np.asarray(label_rows), task_kind)
    return Dataset(features, labels, feature_names=[header[i] for i in feature_cols], name=name)


def load_matrix_csv(path) -> FeatureMatrix:
    """Load a headered CSV file of features only (used by prediction)."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file, expected a header row") from None
        rows = []
        for rownum, record in enumerate(reader, start=1):
            if len(record) != len(header):
                raise DataError(f"{path}: row {rownum} has {len(record)} cells, header has {len(header)}")
            rows.append([_parse_cell(c, rownum, header[i]) for i, c in enumerate(record)])
    if not rows:
        raise DataError(f"{path}: no data rows")
    return FeatureMatrix(np.asarray(rows))


def save_csv(dataset: Dataset, path) -> None:
    """Write a dataset back to CSV with exact float64 round-trip formatting."""
    names = dataset.feature_names or [f"x{i}" for i in range(dataset.n_features)]
    task = dataset.task
    if task.kind == MULTILABEL:
        label_names = [f"label_{k}" for k in range(task.n_classes)]
        label_matrix = dataset.labels.y
    else:
        label_names = ["label"]
        label_matrix = dataset.labels.y.reshape(-1, 1)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(names) + label_names)
        for i in range(dataset.n_samples):
            cells = []
            for v in dataset.features.values[i]:
                cells.append("" if np.isnan(v) else repr(float(v)))
            cells.extend(str(int(v)) for v in label_matrix[i])
            writer.writerow(cells)


def _parse_libsvm_labels(token: str, task_kind: str, line_no: int):
    parts = token.split(",") if token else []
    if task_kind == MULTILABEL:
        out = []
        for p in parts:
            try:
                out.append(int(p))
            except ValueError:
                raise DataError(f"line {line_no}: bad label {p!r}") from None
            if out[-1] < 0:
                raise LabelError(f"line {line_no}: negative label index {out[-1]}")
        return out
    if len(parts) != 1:
        raise DataError(f"line {line_no}: expected a single label, got {token!r}")
    try:
        value = float(parts[0])
    except ValueError:
        raise DataError(f"line {line_no}: bad label {parts[0]!r}") from None
    return value


def load_libsvm(path, task_kind: str, name: str = "") -> Dataset:
    """Load a sparse LibSVM text file (1-based feature indices, `#` comments).

    Multi-label lines carry a comma-separated list of 0-based label indices
    before the feature list; an empty list means no positive labels.
    """
    if task_kind not in TASK_KINDS:
        raise TaskError(f"unknown task kind {task_kind!r}")
    entries, labels_raw, max_feature = [], [], 0
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            tokens = line.split()
            label_token = tokens[0]
            feat_tokens = tokens[1:]
            if ":" in label_token:
                # Line starts directly with features: an empty label list.
                feat_tokens = tokens
                label_token = ""
            labels_raw.append(_parse_libsvm_labels(label_token, task_kind, line_no))
            row = {}
            prev_idx = 0
            for tok in feat_tokens:
                if ":" not in tok:
                    raise DataError(f"line {line_no}: expected index:value, got {tok!r}")
                idx_s, val_s = tok.split(":", 1)
                try:
                    idx = int(idx_s)
                    val = float(val_s)
                except ValueError:
                    raise DataError(f"line {line_no}: bad feature entry {tok!r}") from None
                if idx < 1:
                    raise DataError(f"line {line_no}: feature indices are 1-based, got {idx}")
                if idx <= prev_idx:
                    raise DataError(f"line {line_no}: feature indices must be strictly increasing")
                prev_idx = idx
                row[idx - 1] = val
                max_feature = max(max_feature, idx)
            entries.append(row)
    if not entries:
        raise DataError(f"{path}: no data lines")
    if max_feature == 0:
        raise DataError(f"{path}: no feature entries on any line")
    values = np.zeros((len(entries), max_feature))
    for i, row in enumerate(entries):
        for j, v in row.items():
            values[i, j] = v
    if task_kind == MULTILABEL:
        k = max((max(r) for r in labels_raw if r), default=-1) + 1
        if k < 2:
            raise TaskError("multi-label data must reference at least 2 labels")
        y = np.zeros((len(entries), k), dtype=np.int8)
        for i, r in enumerate(labels_raw):
            y[i, r] = 1
        labels = LabelBlock(Task.multilabel(k), y)
    else:
        labels = _labels_from_raw(np.asarray(labels_raw, dtype=np.float64).reshape(-1, 1), task_kind)
    return Dataset(FeatureMatrix(values), labels, name=name)


def imbalance_ratio(dataset: Dataset) -> float:
    """Most-frequent to least-frequent class (or label) count ratio, >= 1."""
    counts = dataset.labels.class_counts()
    if counts.min() < 1:
        raise LabelError("imbalance ratio needs every class/label to occur at least once")
    return float(counts.max()) / float(counts.min())
