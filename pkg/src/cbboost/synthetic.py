"""Seeded synthetic datasets for demos, tests and the desk-scale experiments."""

from __future__ import annotations

import numpy as np

from .datasets import Dataset, FeatureMatrix, LabelBlock, Task


def gaussian_blobs_binary(
    n: int = 2000,
    imbalance_ratio: float = 20.0,
    separation: float = 2.0,
    seed: int = 0,
    n_features: int = 2,
) -> Dataset:
    """Two unit-variance Gaussian clouds with the given class count ratio.

    The positive (minority) mean sits `separation` away from the negative
    mean along the first axis.
    """
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, 101])))
    n_pos = max(2, int(round(n / (imbalance_ratio + 1.0))))
    n_neg = n - n_pos
    X = rng.normal(size=(n, n_features))
    X[n_neg:, 0] += separation
    y = np.zeros(n, dtype=np.int8)
    y[n_neg:] = 1
    perm = rng.permutation(n)
    return Dataset(
        FeatureMatrix(X[perm]),
        LabelBlock(Task.binary(), y[perm]),
        name=f"gauss_ir{imbalance_ratio:g}",
    )


def block_multilabel(
    n: int = 800,
    n_labels: int = 4,
    seed: int = 0,
    noise: float = 0.25,
) -> Dataset:
    """Multi-label data where label j depends only on features 2j and 2j+1.

    The disjoint feature blocks make per-label problems fully separable from
    each other, which is what the one-tree-per-output equivalence checks need.
    """
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, 103])))
    X = rng.normal(size=(n, 2 * n_labels))
    y = np.zeros((n, n_labels), dtype=np.int8)
    for j in range(n_labels):
        margin = X[:, 2 * j] + 0.5 * X[:, 2 * j + 1] + noise * rng.normal(size=n)
        y[:, j] = (margin > 0.3 * (j + 1) - 0.6).astype(np.int8)
        if y[:, j].sum() == 0:
            y[rng.integers(n), j] = 1
        if y[:, j].sum() == n:
            y[rng.integers(n), j] = 0
    return Dataset(FeatureMatrix(X), LabelBlock(Task.multilabel(n_labels), y), name="blocks")


def gaussian_multiclass(
    n: int = 900,
    n_classes: int = 4,
    separation: float = 2.5,
    seed: int = 0,
    class_weights=None,
) -> Dataset:
    """Gaussian clouds on a circle; optional per-class weights for imbalance."""
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, 107])))
    weights = np.ones(n_classes) if class_weights is None else np.asarray(class_weights, float)
    weights = weights / weights.sum()
    counts = np.maximum(1, np.round(weights * n).astype(int))
    counts[0] += n - counts.sum()
    X_parts, y_parts = [], []
    for c in range(n_classes):
        angle = 2 * np.pi * c / n_classes
        center = separation * np.array([np.cos(angle), np.sin(angle)])
        X_parts.append(rng.normal(size=(counts[c], 2)) + center)
        y_parts.append(np.full(counts[c], c, dtype=np.int64))
    X = np.vstack(X_parts)
    y = np.concatenate(y_parts)
    perm = rng.permutation(len(y))
    return Dataset(FeatureMatrix(X[perm]), LabelBlock(Task.multiclass(n_classes), y[perm]), name="gauss_mc")


def plateau_binary(n: int = 300, seed: int = 404) -> Dataset:
    """A two-valued signal feature plus a pure-noise feature.

    The label mixtures at the two signal values are learned within a few
    rounds; afterwards trees can only chase the noise column, so training
    gain persists while validation loss stops improving and early stopping
    must fire.
    """
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed])))
    x0 = (np.arange(n) % 2).astype(np.float64)
    x1 = rng.normal(size=n)
    y = np.zeros(n, dtype=np.int8)
    low = x0 == 0
    y[low] = (rng.random(low.sum()) < 0.25).astype(np.int8)
    y[~low] = (rng.random((~low).sum()) < 0.75).astype(np.int8)
    return Dataset(
        FeatureMatrix(np.column_stack([x0, x1])),
        LabelBlock(Task.binary(), y),
        name="plateau",
    )
