"""Deterministic train/test + k-fold split plans with optional stratification.

A plan fixes every index set up front and serializes to JSON so an experiment
can be replayed exactly.  Stratification keeps per-class fold proportions
within one sample of the global proportions; multi-label datasets use
iterative per-label assignment ordered by label rarity.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .datasets import BINARY, MULTICLASS, MULTILABEL, Dataset
from .errors import SplitError

PLAN_FORMAT_VERSION = 1


@dataclass
class SplitPlan:
    seed: int
    test_fraction: float
    k: int
    stratify: bool
    train: np.ndarray
    test: np.ndarray
    folds: list[tuple[np.ndarray, np.ndarray]]  # (fit, validation) per fold

    def validation_fold_of(self, fold: int) -> np.ndarray:
        return self.folds[fold][1]

    def to_json(self) -> str:
        doc = {
            "format_version": PLAN_FORMAT_VERSION,
            "seed": self.seed,
            "test_fraction": self.test_fraction,
            "k": self.k,
            "stratify": self.stratify,
            "train": self.train.tolist(),
            "test": self.test.tolist(),
            "folds": [{"fit": f.tolist(), "valid": v.tolist()} for f, v in self.folds],
        }
        return json.dumps(doc)

    @classmethod
    def from_json(cls, text: str) -> "SplitPlan":
        doc = json.loads(text)
        if doc.get("format_version") != PLAN_FORMAT_VERSION:
            raise SplitError(f"unsupported split plan version {doc.get('format_version')!r}")
        return cls(
            seed=doc["seed"],
            test_fraction=doc["test_fraction"],
            k=doc["k"],
            stratify=doc["stratify"],
            train=np.asarray(doc["train"], dtype=np.int64),
            test=np.asarray(doc["test"], dtype=np.int64),
            folds=[
                (np.asarray(f["fit"], dtype=np.int64), np.asarray(f["valid"], dtype=np.int64))
                for f in doc["folds"]
            ],
        )

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_json())

    @classmethod
    def load(cls, path) -> "SplitPlan":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(fh.read())


def _rng(seed: int, *stream) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, *stream])))


def _class_groups(dataset: Dataset, index: np.ndarray) -> list[np.ndarray]:
    """Index subsets per class, for binary / multi-class stratification."""
    y = dataset.labels.y[index]
    if dataset.task.kind == BINARY:
        return [index[y == 0], index[y == 1]]
    return [index[y == c] for c in range(dataset.task.n_classes)]


def _split_sizes(n: int, k: int) -> np.ndarray:
    sizes = np.full(k, n // k, dtype=np.int64)
    sizes[: n % k] += 1
    return sizes


def _stratified_two_way(groups: list[np.ndarray], n_second: int, rng) -> tuple[list[int], list[int]]:
    """Split class groups into two parts with the second part exactly n_second.

    Per-class takes are the proportional floor; the global deficit is handed
    to the classes with the largest fractional remainders, keeping every
    class within one sample of exact proportionality.
    """
    total = sum(len(g) for g in groups)
    exact = np.array([len(g) * n_second / total for g in groups])
    take = np.floor(exact).astype(np.int64)
    deficit = n_second - int(take.sum())
    order = np.lexsort((np.arange(len(groups)), -(exact - take)))
    take[order[:deficit]] += 1
    first, second = [], []
    for g, t in zip(groups, take):
        perm = rng.permutation(g)
        second.extend(perm[: int(t)].tolist())
        first.extend(perm[int(t) :].tolist())
    return first, second


def _stratified_folds(groups: list[np.ndarray], k: int, rng) -> list[list[int]]:
    """Deal each class round-robin into k folds with a continuing cursor.

    The cursor spreads per-class leftovers across different folds, so fold
    totals stay within one of each other while each fold's per-class count
    is within one of count/k.
    """
    parts = [[] for _ in range(k)]
    cursor = 0
    for group in groups:
        perm = rng.permutation(group)
        q, r = divmod(len(group), k)
        pos = 0
        for j in range(k):
            fold = (cursor + j) % k
            cnt = q + (1 if j < r else 0)
            parts[fold].extend(perm[pos : pos + cnt].tolist())
            pos += cnt
        cursor = (cursor + r) % k
    return parts


def _multilabel_parts(dataset: Dataset, index: np.ndarray, weights: np.ndarray, rng) -> list[list[int]]:
    """Iterative multi-label assignment: rarest label first, each of its still
    unassigned samples goes to the part furthest below its positive quota."""
    y = dataset.labels.y[index]
    n, k_labels = y.shape
    total = weights.sum()
    desired_pos = np.outer(weights / total, y.sum(axis=0).astype(np.float64))  # (parts, labels)
    desired_n = weights / total * n
    got_pos = np.zeros_like(desired_pos)
    got_n = np.zeros(len(weights))
    assignment = np.full(n, -1, dtype=np.int64)
    label_order = np.argsort(y.sum(axis=0), kind="stable")  # ascending count = descending rarity
    for lbl in label_order:
        holders = np.flatnonzero((y[:, lbl] == 1) & (assignment == -1))
        for i in rng.permutation(holders):
            need = desired_pos[:, lbl] - got_pos[:, lbl]
            best = np.flatnonzero(need == need.max())
            if len(best) > 1:
                slack = desired_n[best] - got_n[best]
                best = best[np.flatnonzero(slack == slack.max())]
            part = int(best[0])
            assignment[i] = part
            got_pos[part] += y[i]
            got_n[part] += 1
    rest = np.flatnonzero(assignment == -1)
    for i in rng.permutation(rest):
        need = desired_n - got_n
        part = int(np.argmax(need))
        assignment[i] = part
        got_n[part] += 1
    return [index[assignment == p].tolist() for p in range(len(weights))]


def make_split_plan(
    dataset: Dataset,
    seed: int,
    test_fraction: float = 0.2,
    k: int = 5,
    stratify: bool = True,
) -> SplitPlan:
    """Build the 80/20 + k-fold plan used throughout training and tuning."""
    if not 0.0 < test_fraction < 1.0:
        raise SplitError(f"test_fraction must be in (0, 1), got {test_fraction}")
    if k < 2:
        raise SplitError(f"k must be at least 2, got {k}")
    n = dataset.n_samples
    n_test = int(round(n * test_fraction))
    if n_test < 1 or n - n_test < k:
        raise SplitError(f"dataset of {n} samples is too small for test_fraction={test_fraction}, k={k}")
    task = dataset.task
    all_index = np.arange(n, dtype=np.int64)

    rng = _rng(seed, 0)
    if stratify and task.kind in (BINARY, MULTICLASS):
        groups = _class_groups(dataset, all_index)
        counts = np.array([len(g) for g in groups])
        if counts.min() < 1:
            raise SplitError("every class needs at least one sample")
        train_list, test_list = _stratified_two_way(groups, n_test, rng)
        train = np.sort(np.asarray(train_list, dtype=np.int64))
        test = np.sort(np.asarray(test_list, dtype=np.int64))
    elif stratify and task.kind == MULTILABEL:
        parts = _multilabel_parts(dataset, all_index, np.array([float(n - n_test), float(n_test)]), rng)
        train = np.sort(np.asarray(parts[0], dtype=np.int64))
        test = np.sort(np.asarray(parts[1], dtype=np.int64))
    else:
        perm = rng.permutation(all_index)
        test = np.sort(perm[:n_test])
        train = np.sort(perm[n_test:])

    rng = _rng(seed, 1)
    if stratify and task.kind in (BINARY, MULTICLASS):
        groups = _class_groups(dataset, train)
        counts = np.array([len(g) for g in groups])
        if counts.min() < k:
            smallest = int(np.argmin(counts))
            raise SplitError(
                f"class {smallest} has only {counts.min()} training samples, fewer than k={k}; "
                "use stratify=False"
            )
        fold_lists = _stratified_folds(groups, k, rng)
    elif stratify and task.kind == MULTILABEL:
        fold_weights = _split_sizes(len(train), k).astype(np.float64)
        fold_lists = _multilabel_parts(dataset, train, fold_weights, rng)
    else:
        perm = rng.permutation(train)
        bounds = np.cumsum(_split_sizes(len(train), k))[:-1]
        fold_lists = [p.tolist() for p in np.split(perm, bounds)]

    folds = []
    for fold_id in range(k):
        valid = np.sort(np.asarray(fold_lists[fold_id], dtype=np.int64))
        fit = np.sort(np.asarray([i for f, part in enumerate(fold_lists) if f != fold_id for i in part], dtype=np.int64))
        folds.append((fit, valid))
    return SplitPlan(seed=seed, test_fraction=test_fraction, k=k, stratify=stratify, train=train, test=test, folds=folds)
