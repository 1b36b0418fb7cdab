"""Equal-frequency feature binning computed on training rows only.

Thresholds are midpoints between adjacent distinct values, so features with
at most `max_bin` distinct values are binned exactly and ties collapse bins.
Missing values get a dedicated bin (code == number of finite bins) so the
booster can learn a default direction per split.
"""

from __future__ import annotations

import numpy as np

from .datasets import Dataset
from .errors import ParameterError


class BinMap:
    """Per-feature ascending thresholds plus code assignment for raw values."""

    def __init__(self, thresholds: list[np.ndarray]):
        for f, thr in enumerate(thresholds):
            if len(thr) > 1 and not np.all(np.diff(thr) > 0):
                raise ParameterError(f"thresholds for feature {f} are not strictly increasing")
        self.thresholds = [np.asarray(t, dtype=np.float64) for t in thresholds]
        self.n_bins = np.array([len(t) + 1 for t in self.thresholds], dtype=np.int64)

    @property
    def n_features(self) -> int:
        return len(self.thresholds)

    def missing_code(self, feature: int) -> int:
        return int(self.n_bins[feature])

    def codes(self, values: np.ndarray) -> np.ndarray:
        """Bin code per (row, feature); missing rows get the missing code."""
        values = np.asarray(values, dtype=np.float64)
        out = np.empty(values.shape, dtype=np.int32)
        for f in range(self.n_features):
            col = values[:, f]
            miss = np.isnan(col)
            out[:, f] = np.searchsorted(self.thresholds[f], col, side="left")
            out[miss, f] = self.n_bins[f]
        return out


def _feature_thresholds(col: np.ndarray, max_bin: int) -> np.ndarray:
    finite = col[~np.isnan(col)]
    if finite.size == 0:
        return np.empty(0)
    unique = np.unique(finite)
    if len(unique) <= max_bin:
        return (unique[:-1] + unique[1:]) / 2.0
    ordered = np.sort(finite)
    n = len(ordered)
    positions = (n * np.arange(1, max_bin)) // max_bin
    lo = ordered[positions - 1]
    hi = ordered[positions]
    cuts = (lo + hi) / 2.0
    cuts = np.unique(cuts[hi > lo])
    return cuts


def build_bins(dataset: Dataset, train_index, max_bin: int) -> BinMap:
    """Quantile thresholds from the given training rows; at most max_bin bins."""
    if max_bin < 2:
        raise ParameterError(f"max_bin must be at least 2, got {max_bin}")
    rows = np.asarray(train_index, dtype=np.int64)
    values = dataset.features.values[rows]
    return BinMap([_feature_thresholds(values[:, f], max_bin) for f in range(values.shape[1])])
