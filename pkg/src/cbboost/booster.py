"""Newton-boosted histogram trees with vector-valued leaves.

Each round evaluates the loss gradient/Hessian at the current raw scores,
grows one tree (or one per output) best-first over binned features by the
second-order gain, and accumulates  z = z0 + lr * sum(trees).  Leaf weights
solve the per-leaf regularized Newton step  -soft_threshold(G, alpha_l1) /
(H + lambda_l2).  Validation loss drives early stopping; predictions use the
best recorded round.
"""

from __future__ import annotations

import heapq
import json
from dataclasses import dataclass, field

import numpy as np

from .binning import BinMap, build_bins
from .datasets import BINARY, MULTICLASS, MULTILABEL, Dataset, FeatureMatrix, Task
from .errors import LabelError, ModelFormatError, ParameterError, ShapeError
from .losses import DEFAULT_H_FLOOR, LossSpec, sigmoid, softmax

MODEL_FORMAT_VERSION = 1

# Gains below this are treated as zero so float dust from cancelling
# gradient sums cannot manufacture a split.
_GAIN_EPS = 1e-12

_BASE_SCORE_CLAMP = 10.0


@dataclass
class BoostParams:
    """Training knobs; ranges follow the documented search grids."""

    n_rounds: int = 100
    learning_rate: float = 0.1
    max_depth: int | None = 6
    max_leaves: int | None = 31
    lambda_l2: float = 1.0
    alpha_l1: float = 0.0
    min_samples_leaf: int = 1
    max_bin: int = 256
    subsample: float = 1.0
    early_stopping_rounds: int = 50
    seed: int = 0
    h_floor: float = DEFAULT_H_FLOOR
    one_tree_per_output: bool = False

    def __post_init__(self):
        if self.n_rounds < 0:
            raise ParameterError(f"n_rounds must be non-negative, got {self.n_rounds}")
        if not 0.0 < self.learning_rate <= 1.0:
            raise ParameterError(f"learning_rate must be in (0, 1], got {self.learning_rate}")
        if self.lambda_l2 < 0 or self.alpha_l1 < 0:
            raise ParameterError("regularization strengths must be non-negative")
        depth_ok = self.max_depth is not None and self.max_depth >= 1
        leaves_ok = self.max_leaves is not None and self.max_leaves >= 2
        if not (depth_ok or leaves_ok):
            raise ParameterError("need max_depth >= 1 or max_leaves >= 2")
        if not 0.0 < self.subsample <= 1.0:
            raise ParameterError(f"subsample must be in (0, 1], got {self.subsample}")
        if self.early_stopping_rounds < 1:
            raise ParameterError(f"early_stopping_rounds must be >= 1, got {self.early_stopping_rounds}")
        if self.min_samples_leaf < 1:
            raise ParameterError(f"min_samples_leaf must be >= 1, got {self.min_samples_leaf}")
        if self.h_floor <= 0:
            raise ParameterError(f"h_floor must be positive, got {self.h_floor}")

    @property
    def depth_limit(self) -> int:
        return self.max_depth if self.max_depth is not None else 2**31

    @property
    def leaves_limit(self) -> int:
        if self.max_leaves is not None:
            return self.max_leaves
        return 2 ** min(self.depth_limit, 30)


@dataclass
class Tree:
    """Array-of-nodes regression tree; leaves carry a weight vector."""

    feature: np.ndarray      # int32, -1 at leaves
    threshold: np.ndarray    # float64 split values, x <= threshold goes left
    missing_left: np.ndarray
    left: np.ndarray
    right: np.ndarray
    leaf_value: np.ndarray   # (n_nodes, width); zeros at internal nodes
    output: int | None = None  # output slot in one-tree-per-output mode

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @property
    def n_leaves(self) -> int:
        return int((self.feature < 0).sum())

    def predict(self, X: np.ndarray) -> np.ndarray:
        """Leaf vector per row; NaN feature values follow the default direction."""
        n = X.shape[0]
        idx = np.zeros(n, dtype=np.int32)
        pending = np.flatnonzero(self.feature[idx] >= 0)
        while pending.size:
            node = idx[pending]
            f = self.feature[node]
            xv = X[pending, f]
            miss = np.isnan(xv)
            go_left = np.where(miss, self.missing_left[node], xv <= self.threshold[node])
            idx[pending] = np.where(go_left, self.left[node], self.right[node])
            pending = pending[self.feature[idx[pending]] >= 0]
        return self.leaf_value[idx]

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "missing_left": self.missing_left.astype(int).tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "leaf_value": self.leaf_value.tolist(),
            "output": self.output,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "Tree":
        return cls(
            feature=np.asarray(doc["feature"], dtype=np.int32),
            threshold=np.asarray(doc["threshold"], dtype=np.float64),
            missing_left=np.asarray(doc["missing_left"], dtype=bool),
            left=np.asarray(doc["left"], dtype=np.int32),
            right=np.asarray(doc["right"], dtype=np.int32),
            leaf_value=np.asarray(doc["leaf_value"], dtype=np.float64),
            output=doc["output"],
        )


@dataclass
class Ensemble:
    """Trained model: base score plus rounds of trees, with stopping metadata."""

    task: Task
    n_features: int
    base_score: np.ndarray
    learning_rate: float
    loss_spec: LossSpec
    bin_thresholds: list[np.ndarray]
    rounds: list[list[Tree]]
    best_iteration: int
    train_history: list[float] = field(default_factory=list)
    valid_history: list[float] = field(default_factory=list)

    @property
    def k_out(self) -> int:
        return self.task.n_outputs

    def _coerce_matrix(self, X) -> np.ndarray:
        if isinstance(X, FeatureMatrix):
            X = X.values
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise ShapeError(
                f"expected a matrix with {self.n_features} feature columns, got shape {X.shape}"
            )
        return X

    def predict_raw(self, X) -> np.ndarray:
        """Accumulated raw scores (n, K_out) using rounds up to best_iteration."""
        X = self._coerce_matrix(X)
        z = np.tile(self.base_score, (X.shape[0], 1))
        for round_trees in self.rounds[: self.best_iteration]:
            for tree in round_trees:
                vals = tree.predict(X)
                if tree.output is None:
                    z += self.learning_rate * vals
                else:
                    z[:, tree.output] += self.learning_rate * vals[:, 0]
        return z

    def predict_proba(self, X) -> np.ndarray:
        z = self.predict_raw(X)
        if self.task.kind == MULTICLASS:
            return softmax(z)
        return sigmoid(z)

    def to_json(self) -> str:
        doc = {
            "format_version": MODEL_FORMAT_VERSION,
            "task": {"kind": self.task.kind, "n_classes": self.task.n_classes},
            "k_out": self.k_out,
            "n_features": self.n_features,
            "base_score": self.base_score.tolist(),
            "learning_rate": self.learning_rate,
            "loss_spec": self.loss_spec.to_dict(),
            "bin_thresholds": [t.tolist() for t in self.bin_thresholds],
            "trees": [[t.to_dict() for t in round_trees] for round_trees in self.rounds],
            "best_iteration": self.best_iteration,
        }
        return json.dumps(doc)

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_json())

    @classmethod
    def from_json(cls, text: str) -> "Ensemble":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ModelFormatError(f"model file is not valid JSON: {exc}") from None
        if not isinstance(doc, dict) or doc.get("format_version") != MODEL_FORMAT_VERSION:
            raise ModelFormatError(
                f"unsupported model format version {doc.get('format_version')!r}"
                if isinstance(doc, dict)
                else "model file does not contain a JSON object"
            )
        try:
            task = Task(doc["task"]["kind"], doc["task"]["n_classes"])
            return cls(
                task=task,
                n_features=doc["n_features"],
                base_score=np.asarray(doc["base_score"], dtype=np.float64),
                learning_rate=doc["learning_rate"],
                loss_spec=LossSpec.from_dict(doc["loss_spec"]),
                bin_thresholds=[np.asarray(t, dtype=np.float64) for t in doc["bin_thresholds"]],
                rounds=[[Tree.from_dict(t) for t in round_trees] for round_trees in doc["trees"]],
                best_iteration=doc["best_iteration"],
            )
        except (KeyError, TypeError) as exc:
            raise ModelFormatError(f"model file is missing field {exc}") from None

    @classmethod
    def load(cls, path) -> "Ensemble":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(fh.read())


def save(ensemble: Ensemble, path) -> None:
    ensemble.save(path)


def load(path) -> Ensemble:
    return Ensemble.load(path)


def base_score(dataset: Dataset, spec: LossSpec, index=None) -> np.ndarray:
    """Initial raw scores: prior log-odds per label, or zero-mean log frequency."""
    labels = dataset.labels
    if labels.task.kind == MULTICLASS:
        counts = labels.class_counts(index)
        if (counts == 0).any():
            missing = int(np.flatnonzero(counts == 0)[0])
            raise LabelError(f"class {missing} has no samples in the training rows")
        logf = np.log(counts / counts.sum())
        return logf - logf.mean()
    y = labels.onehot(index)
    rate = y.mean(axis=0)
    with np.errstate(divide="ignore"):
        logit = np.log(rate) - np.log1p(-rate)
    return np.clip(logit, -_BASE_SCORE_CLAMP, _BASE_SCORE_CLAMP)


def _soft_threshold(G: np.ndarray, alpha: float) -> np.ndarray:
    return np.sign(G) * np.maximum(np.abs(G) - alpha, 0.0)


def _leaf_weight(G: np.ndarray, H: np.ndarray, lam: float, alpha: float) -> np.ndarray:
    return -_soft_threshold(G, alpha) / (H + lam)


def _leaf_score(G: np.ndarray, H: np.ndarray, lam: float, alpha: float) -> np.ndarray:
    """Objective reduction of an optimally weighted leaf, summed over outputs."""
    T = np.maximum(np.abs(G) - alpha, 0.0)
    return 0.5 * (T * T / (H + lam)).sum(axis=-1)


class _BuildNode:
    __slots__ = ("node_id", "rows", "depth", "G", "H", "split", "hist")

    def __init__(self, node_id, rows, depth, G, H, hist=None):
        self.node_id = node_id
        self.rows = rows
        self.depth = depth
        self.G = G
        self.H = H
        self.split = None  # (gain, feature, bin_t, missing_left)
        self.hist = hist   # (cnt, Gh, Hh) histograms, filled lazily


class _TreeGrower:
    """Best-first growth over binned columns for one tree.

    Histograms live in one flat slot array (finite bins plus a missing slot
    per feature); split candidates for every feature are scored in a single
    vectorized pass over that layout.
    """

    def __init__(self, codes, binmap: BinMap, params: BoostParams, width: int):
        self.codes = codes
        self.binmap = binmap
        self.params = params
        self.width = width
        nb = binmap.n_bins
        self.offsets = np.concatenate([[0], np.cumsum(nb + 1)[:-1]]).astype(np.int64)
        self.total_slots = int((nb + 1).sum())
        self.codes_off = (codes + self.offsets[None, :]).astype(np.int64)
        self.miss_slots = (self.offsets + nb).astype(np.int64)
        # Candidate split positions: slot off_f + t for t in [0, nb_f - 2].
        cand, cand_feature, cand_start = [], [], []
        for f in range(len(nb)):
            n_cand = int(nb[f]) - 1
            if n_cand < 1:
                continue
            cand.append(self.offsets[f] + np.arange(n_cand, dtype=np.int64))
            cand_feature.append(np.full(n_cand, f, dtype=np.int64))
            cand_start.append(np.full(n_cand, self.offsets[f], dtype=np.int64))
        if cand:
            self.cand_slots = np.concatenate(cand)
            self.cand_feature = np.concatenate(cand_feature)
            self.cand_start = np.concatenate(cand_start)
        else:
            self.cand_slots = np.empty(0, dtype=np.int64)
            self.cand_feature = np.empty(0, dtype=np.int64)
            self.cand_start = np.empty(0, dtype=np.int64)

    def _node_histograms(self, rows, g, h):
        """(count, stacked G|H) histograms over the flat slot layout."""
        m = self.codes.shape[1]
        width = self.width
        flat = self.codes_off[rows].ravel()
        cnt = np.bincount(flat, minlength=self.total_slots)
        GH = np.empty((self.total_slots, 2 * width))
        gr = g[rows]
        hr = h[rows]
        for k in range(width):
            GH[:, k] = np.bincount(flat, weights=np.repeat(gr[:, k], m), minlength=self.total_slots)
            GH[:, width + k] = np.bincount(flat, weights=np.repeat(hr[:, k], m), minlength=self.total_slots)
        return cnt, GH

    def _score_stacked(self, A):
        """Leaf objective reduction from stacked (.., G|H) sums."""
        width = self.width
        T = np.abs(A[..., :width]) - self.params.alpha_l1
        np.maximum(T, 0.0, out=T)
        T *= T
        T /= A[..., width:] + self.params.lambda_l2
        return 0.5 * T.sum(axis=-1)

    def _best_split(self, node: _BuildNode, g, h):
        """Highest-gain (feature, bin, missing direction) or None.

        Ties resolve to the lowest feature id, then the lowest bin index,
        then missing-goes-left, keeping growth deterministic.
        """
        if len(self.cand_slots) == 0:
            return None
        params = self.params
        msl = params.min_samples_leaf
        if node.hist is None:
            node.hist = self._node_histograms(node.rows, g, h)
        cnt, GH = node.hist
        n_node = len(node.rows)

        # Left sums for every candidate via one padded global cumsum:
        # left(f, t) = C[off_f + t + 1] - C[off_f].
        C = np.empty((self.total_slots + 1, GH.shape[1]))
        C[0] = 0.0
        np.cumsum(GH, axis=0, out=C[1:])
        Cc = np.empty(self.total_slots + 1, dtype=np.int64)
        Cc[0] = 0
        np.cumsum(cnt, out=Cc[1:])
        L = C[self.cand_slots + 1] - C[self.cand_start]
        cL = Cc[self.cand_slots + 1] - Cc[self.cand_start]

        node_GH = np.concatenate([node.G, node.H])
        parent = self._score_stacked(node_GH)
        has_missing = int(cnt[self.miss_slots].sum()) > 0
        options = (True, False) if has_missing else (True,)
        best_gain = np.full(len(self.cand_slots), -np.inf)
        best_left = np.ones(len(self.cand_slots), dtype=bool)
        for miss_left in options:
            if miss_left:
                Lo = L + GH[self.miss_slots][self.cand_feature]
                cLo = cL + cnt[self.miss_slots][self.cand_feature]
            else:
                Lo, cLo = L, cL
            cRo = n_node - cLo
            gain = self._score_stacked(Lo) + self._score_stacked(node_GH - Lo) - parent
            gain[(cLo < msl) | (cRo < msl)] = -np.inf
            better = gain > best_gain
            best_gain[better] = gain[better]
            best_left[better] = miss_left
        pick = int(np.argmax(best_gain))
        if best_gain[pick] <= _GAIN_EPS:
            return None
        feature = int(self.cand_feature[pick])
        bin_t = int(self.cand_slots[pick] - self.cand_start[pick])
        return (float(best_gain[pick]), feature, bin_t, bool(best_left[pick]))

    def grow(self, rows, g, h):
        """Grow one tree on the given row sample; returns None if no split gains."""
        params = self.params
        feature, threshold, missing_left = [], [], []
        left, right = [], []
        node_meta = {}

        def new_node(rows_, depth, G, H, hist=None):
            node_id = len(feature)
            feature.append(-1)
            threshold.append(0.0)
            missing_left.append(True)
            left.append(-1)
            right.append(-1)
            node = _BuildNode(node_id, rows_, depth, G, H, hist)
            node_meta[node_id] = node
            return node

        root = new_node(rows, 0, g[rows].sum(axis=0), h[rows].sum(axis=0))
        heap = []
        counter = 0

        def consider(node):
            nonlocal counter
            if node.depth >= params.depth_limit or len(node.rows) < 2 * params.min_samples_leaf:
                return
            split = self._best_split(node, g, h)
            if split is not None:
                node.split = split
                heapq.heappush(heap, (-split[0], counter, node.node_id))
                counter += 1

        consider(root)
        n_leaves = 1
        while heap and n_leaves < params.leaves_limit:
            _, _, node_id = heapq.heappop(heap)
            node = node_meta[node_id]
            gain, f, t, miss_left = node.split
            codes_f = self.codes[node.rows, f]
            is_miss = codes_f == self.binmap.n_bins[f]
            go_left = np.where(is_miss, miss_left, codes_f <= t)
            rows_l = node.rows[go_left]
            rows_r = node.rows[~go_left]
            # The smaller child gets fresh histograms; the sibling reuses the
            # parent's by subtraction.
            if len(rows_l) <= len(rows_r):
                hist_l = self._node_histograms(rows_l, g, h)
                hist_r = tuple(p - c for p, c in zip(node.hist, hist_l))
            else:
                hist_r = self._node_histograms(rows_r, g, h)
                hist_l = tuple(p - c for p, c in zip(node.hist, hist_r))
            node.hist = None
            child_l = new_node(rows_l, node.depth + 1, g[rows_l].sum(axis=0), h[rows_l].sum(axis=0), hist_l)
            child_r = new_node(rows_r, node.depth + 1, g[rows_r].sum(axis=0), h[rows_r].sum(axis=0), hist_r)
            feature[node_id] = f
            threshold[node_id] = float(self.binmap.thresholds[f][t])
            missing_left[node_id] = bool(miss_left)
            left[node_id] = child_l.node_id
            right[node_id] = child_r.node_id
            node.rows = None  # release
            n_leaves += 1
            consider(child_l)
            consider(child_r)

        if feature[0] < 0:
            return None
        leaf_value = np.zeros((len(feature), self.width))
        for node_id, node in node_meta.items():
            if feature[node_id] < 0:
                leaf_value[node_id] = _leaf_weight(node.G, node.H, params.lambda_l2, params.alpha_l1)
        return Tree(
            feature=np.asarray(feature, dtype=np.int32),
            threshold=np.asarray(threshold, dtype=np.float64),
            missing_left=np.asarray(missing_left, dtype=bool),
            left=np.asarray(left, dtype=np.int32),
            right=np.asarray(right, dtype=np.int32),
            leaf_value=leaf_value,
        )


def _round_rng(seed: int, round_index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, 11, round_index])))


def fit(
    dataset: Dataset,
    spec: LossSpec,
    params: BoostParams,
    train_index=None,
    valid_index=None,
) -> Ensemble:
    """Train an ensemble; with a validation set, early stopping picks the best round."""
    if spec.task != dataset.task:
        raise ParameterError(
            f"loss is bound to task {spec.task}, dataset has task {dataset.task}"
        )
    n = dataset.n_samples
    if valid_index is not None:
        valid_index = np.asarray(valid_index, dtype=np.int64)
    if train_index is None:
        if valid_index is not None:
            in_valid = np.zeros(n, dtype=bool)
            in_valid[valid_index] = True
            train_index = np.flatnonzero(~in_valid)
        else:
            train_index = np.arange(n, dtype=np.int64)
    else:
        train_index = np.asarray(train_index, dtype=np.int64)
    if len(train_index) == 0:
        raise ParameterError("training set is empty")
    if valid_index is not None and np.intersect1d(train_index, valid_index).size:
        raise ParameterError("validation rows overlap the training rows")

    task = dataset.task
    width = task.n_outputs
    X = dataset.features.values

    if task.kind == MULTICLASS:
        counts = dataset.labels.class_counts(train_index)
        if (counts == 0).any():
            missing = int(np.flatnonzero(counts == 0)[0])
            raise LabelError(f"class {missing} has no samples in the training rows")

    binmap = build_bins(dataset, train_index, params.max_bin)
    codes_train = binmap.codes(X[train_index])

    if task.kind == MULTICLASS:
        y_train = dataset.labels.y[train_index]
        y_valid = dataset.labels.y[valid_index] if valid_index is not None else None
    else:
        y_train = dataset.labels.onehot(train_index)
        y_valid = dataset.labels.onehot(valid_index) if valid_index is not None else None

    base = base_score(dataset, spec, train_index)
    n_train = len(train_index)
    z_train = np.tile(base, (n_train, 1))
    X_valid = X[valid_index] if valid_index is not None else None
    z_valid = np.tile(base, (len(valid_index), 1)) if valid_index is not None else None

    grower = _TreeGrower(codes_train, binmap, params, 1 if params.one_tree_per_output else width)
    X_train = X[train_index]

    rounds: list[list[Tree]] = []
    train_history: list[float] = []
    valid_history: list[float] = []
    best_valid = np.inf
    best_iteration = 0
    stale = 0

    for t in range(params.n_rounds):
        if params.subsample < 1.0:
            rng = _round_rng(params.seed, t)
            n_sub = max(1, int(round(params.subsample * n_train)))
            sample = np.sort(rng.permutation(n_train)[:n_sub])
        else:
            sample = np.arange(n_train)
        g, h = spec.grad_hess(y_train, z_train, h_floor=params.h_floor)

        round_trees: list[Tree] = []
        if params.one_tree_per_output and width > 1:
            for k in range(width):
                tree = grower.grow(sample, g[:, k : k + 1], h[:, k : k + 1])
                if tree is not None:
                    tree.output = k
                    round_trees.append(tree)
        else:
            tree = grower.grow(sample, g, h)
            if tree is not None:
                round_trees.append(tree)
        if not round_trees:
            break

        for tree in round_trees:
            vals = tree.predict(X_train)
            if tree.output is None:
                z_train += params.learning_rate * vals
            else:
                z_train[:, tree.output] += params.learning_rate * vals[:, 0]
            if z_valid is not None:
                vals_v = tree.predict(X_valid)
                if tree.output is None:
                    z_valid += params.learning_rate * vals_v
                else:
                    z_valid[:, tree.output] += params.learning_rate * vals_v[:, 0]
        rounds.append(round_trees)
        train_history.append(spec.mean_value(y_train, z_train))

        if z_valid is not None:
            vloss = spec.mean_value(y_valid, z_valid)
            valid_history.append(vloss)
            if vloss < best_valid:
                best_valid = vloss
                best_iteration = len(rounds)
                stale = 0
            else:
                stale += 1
                if stale >= params.early_stopping_rounds:
                    break
        else:
            best_iteration = len(rounds)

    return Ensemble(
        task=task,
        n_features=dataset.n_features,
        base_score=base,
        learning_rate=params.learning_rate,
        loss_spec=spec,
        bin_thresholds=binmap.thresholds,
        rounds=rounds,
        best_iteration=best_iteration,
        train_history=train_history,
        valid_history=valid_history,
    )
