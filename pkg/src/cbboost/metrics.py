"""F1 scoring on the percent scale plus best-of-grid improvement arithmetic.

Probabilities become decisions by 0.5 threshold (binary / per label) or row
argmax (multi-class).  A class with no positive predictions and no positives
in the truth has undefined F1; it is reported as 0 and flagged.  Improvement
compares the best baseline run against the best class-balanced run.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .datasets import BINARY, MULTICLASS, MULTILABEL, LabelBlock
from .errors import ParameterError, ShapeError

AVERAGING_MODES = ("binary", "macro", "micro")


@dataclass
class ConfusionCounts:
    """Per class/label TP, FP, FN, TN count vectors."""

    tp: np.ndarray
    fp: np.ndarray
    fn: np.ndarray
    tn: np.ndarray

    @property
    def n_samples(self) -> np.ndarray:
        return self.tp + self.fp + self.fn + self.tn


@dataclass
class MetricReport:
    """One metric value with its per-class breakdown, on the 0..100 scale."""

    metric: str
    averaging: str
    per_class: np.ndarray
    aggregate: float
    undefined_classes: list[int] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "metric": self.metric,
            "averaging": self.averaging,
            "per_class": [float(v) for v in self.per_class],
            "aggregate": float(self.aggregate),
            "undefined_classes": list(self.undefined_classes),
        }


def decide(prob: np.ndarray, labels: LabelBlock, threshold: float = 0.5) -> np.ndarray:
    """Turn a probability matrix into 0/1 decisions in one-hot layout."""
    prob = np.asarray(prob, dtype=np.float64)
    task = labels.task
    if prob.ndim == 1:
        prob = prob.reshape(-1, 1)
    if prob.shape[0] != labels.n_samples:
        raise ShapeError(f"{prob.shape[0]} prediction rows for {labels.n_samples} labels")
    if task.kind == BINARY:
        if prob.shape[1] != 1:
            raise ShapeError(f"binary predictions need one column, got {prob.shape[1]}")
        return (prob >= threshold).astype(np.int8)
    if prob.shape[1] != task.n_classes:
        raise ShapeError(f"expected {task.n_classes} prediction columns, got {prob.shape[1]}")
    if task.kind == MULTICLASS:
        out = np.zeros_like(prob, dtype=np.int8)
        out[np.arange(len(prob)), prob.argmax(axis=1)] = 1
        return out
    return (prob >= threshold).astype(np.int8)


def confusion_counts(prob: np.ndarray, labels: LabelBlock, threshold: float = 0.5) -> ConfusionCounts:
    pred = decide(prob, labels, threshold)
    truth = labels.onehot().astype(np.int8)
    tp = ((pred == 1) & (truth == 1)).sum(axis=0)
    fp = ((pred == 1) & (truth == 0)).sum(axis=0)
    fn = ((pred == 0) & (truth == 1)).sum(axis=0)
    tn = ((pred == 0) & (truth == 0)).sum(axis=0)
    return ConfusionCounts(tp=tp, fp=fp, fn=fn, tn=tn)


def _f1_from_counts(tp, fp, fn):
    denom = 2 * tp + fp + fn
    with np.errstate(invalid="ignore"):
        return np.where(denom > 0, 2 * tp / np.where(denom > 0, denom, 1), 0.0)


def f1(prob: np.ndarray, labels: LabelBlock, threshold: float = 0.5, averaging: str | None = None) -> MetricReport:
    """F1 in percent; averaging defaults to the task's reporting convention.

    Binary tasks report the positive class, multi-class and multi-label tasks
    report the unweighted macro mean over classes/labels.
    """
    task = labels.task
    if averaging is None:
        averaging = "binary" if task.kind == BINARY else "macro"
    if averaging not in AVERAGING_MODES:
        raise ParameterError(f"averaging must be one of {AVERAGING_MODES}, got {averaging!r}")
    if averaging == "binary" and task.kind != BINARY:
        raise ParameterError("binary averaging only applies to binary tasks")
    counts = confusion_counts(prob, labels, threshold)
    per_class = 100.0 * _f1_from_counts(counts.tp.astype(np.float64), counts.fp, counts.fn)
    undefined = np.flatnonzero(2 * counts.tp + counts.fp + counts.fn == 0).tolist()
    if averaging == "binary":
        # Binary predictions are a single positive-class column.
        aggregate = float(per_class[0])
    elif averaging == "macro":
        aggregate = float(per_class.mean())
    else:
        tp, fp, fn = counts.tp.sum(), counts.fp.sum(), counts.fn.sum()
        aggregate = float(100.0 * _f1_from_counts(np.float64(tp), np.float64(fp), np.float64(fn)))
    return MetricReport(
        metric="f1",
        averaging=averaging,
        per_class=per_class,
        aggregate=aggregate,
        undefined_classes=undefined,
    )


def recall_positive(prob: np.ndarray, labels: LabelBlock, threshold: float = 0.5) -> float:
    """Minority-oriented helper: recall of the positive class, in percent."""
    if labels.task.kind != BINARY:
        raise ParameterError("positive-class recall is defined for binary tasks")
    counts = confusion_counts(prob, labels, threshold)
    tp, fn = int(counts.tp[0]), int(counts.fn[0])
    if tp + fn == 0:
        return 0.0
    return 100.0 * tp / (tp + fn)


class Improvement(NamedTuple):
    bmp: float
    cmp: float
    delta: float


def improvement(bmp_runs, cmp_runs) -> Improvement:
    """Best baseline score, best class-balanced score, and their difference."""
    bmp_runs = [float(v) for v in bmp_runs]
    cmp_runs = [float(v) for v in cmp_runs]
    if not bmp_runs or not cmp_runs:
        raise ParameterError("improvement needs at least one run on each side")
    bmp = max(bmp_runs)
    cmp_ = max(cmp_runs)
    return Improvement(bmp=bmp, cmp=cmp_, delta=cmp_ - bmp)
