"""Seeded random hyperparameter search with k-fold CV and early stopping.

Each trial draws one configuration from the profile's search space (log
uniform booster ranges, discrete loss grids), fits one model per fold with
the fold's validation set driving early stopping, and is ranked by mean
validation F1.  Draws depend only on (seed, trial index), so a search with
more trials extends a shorter one instead of reshuffling it.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .booster import BoostParams, Ensemble, fit
from .datasets import BINARY, MULTICLASS, Dataset
from .errors import LabelError, ParameterError, SearchError, SplitError
from .losses import LOSS_KINDS, LossSpec
from .metrics import f1
from .splitting import SplitPlan

PROFILES = ("leafwise", "depthwise", "sketch")

# Number of boosting rounds and the early-stopping patience are protocol
# constants, not searched dimensions.
FIXED_ITERATIONS = 1000
FIXED_EARLY_STOPPING = 50


@dataclass(frozen=True)
class LogUniformReal:
    lo: float
    hi: float

    def __post_init__(self):
        if not 0 < self.lo < self.hi:
            raise ParameterError(f"log-uniform range needs 0 < lo < hi, got [{self.lo}, {self.hi}]")

    def draw(self, rng: np.random.Generator) -> float:
        return float(math.exp(rng.uniform(math.log(self.lo), math.log(self.hi))))


@dataclass(frozen=True)
class LogUniformInt:
    lo: int
    hi: int

    def __post_init__(self):
        if not 0 < self.lo < self.hi:
            raise ParameterError(f"log-uniform range needs 0 < lo < hi, got [{self.lo}, {self.hi}]")

    def draw(self, rng: np.random.Generator) -> int:
        value = int(round(math.exp(rng.uniform(math.log(self.lo), math.log(self.hi)))))
        return min(max(value, self.lo), self.hi)


@dataclass(frozen=True)
class Choice:
    values: tuple

    def __post_init__(self):
        if len(self.values) == 0:
            raise ParameterError("choice dimension needs at least one value")

    def draw(self, rng: np.random.Generator):
        return self.values[int(rng.integers(len(self.values)))]


@dataclass
class SearchSpace:
    """Named stochastic dimensions plus fixed protocol values."""

    dimensions: dict[str, LogUniformReal | LogUniformInt | Choice]
    fixed: dict[str, float | int] = field(default_factory=dict)


_BOOSTER_DIMENSIONS = {
    "leafwise": {
        "num_leaves": LogUniformInt(8, 64),
        "reg_alpha": LogUniformReal(1e-4, 2.0),
        "reg_lambda": LogUniformReal(1e-4, 2.0),
        "learning_rate": LogUniformReal(0.01, 1.0),
    },
    "depthwise": {
        "max_depth": LogUniformInt(2, 10),
        "reg_alpha": LogUniformReal(1e-4, 1.0),
        "reg_lambda": LogUniformReal(1e-4, 5.0),
        "learning_rate": LogUniformReal(1e-3, 1.0),
    },
    "sketch": {
        "max_depth": LogUniformInt(2, 10),
        "reg_lambda": LogUniformReal(1e-4, 2.0),
        "learning_rate": LogUniformReal(0.01, 1.0),
        "max_bin": LogUniformInt(64, 256),
        "subsample": LogUniformReal(0.05, 1.0),
    },
}

_LOSS_DIMENSIONS = {
    "ce": {},
    "wce": {"w": Choice((2, 3, 5))},
    "fl": {"gamma": Choice((0.5, 1, 2))},
    "asl": {
        "gamma_pos": Choice((0.0, 0.1)),
        "gamma_neg": Choice((0.5, 1, 2)),
        "margin": Choice((0.05, 0.2)),
    },
    "ace": {"margin": Choice((0.05, 0.2))},
    "awe": {"w": Choice((2, 3, 5)), "margin": Choice((0.05, 0.2))},
    # The effective-number grid of the class-balanced reweighting method;
    # this kind has no row in the booster-tuning table.
    "cbce": {"beta": Choice((0.9, 0.99, 0.999, 0.9999))},
}

_LOSS_PARAM_NAMES = ("w", "gamma", "gamma_pos", "gamma_neg", "margin", "beta")


def default_space(profile: str, loss_kind: str) -> SearchSpace:
    """The documented search ranges for one (model profile, loss) pair."""
    if profile not in PROFILES:
        raise ParameterError(f"unknown profile {profile!r}; expected one of {PROFILES}")
    if loss_kind not in LOSS_KINDS:
        raise ParameterError(f"unknown loss kind {loss_kind!r}")
    dims = dict(_BOOSTER_DIMENSIONS[profile])
    dims.update(_LOSS_DIMENSIONS[loss_kind])
    return SearchSpace(
        dimensions=dims,
        fixed={"iterations": FIXED_ITERATIONS, "early_stopping_rounds": FIXED_EARLY_STOPPING},
    )


def sample(space: SearchSpace, seed: int, trial_index: int) -> dict:
    """Deterministic draw for one trial; dimension order is definition order."""
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, 23, trial_index])))
    out = {}
    for name, dim in space.dimensions.items():
        out[name] = dim.draw(rng)
    out.update(space.fixed)
    return out


def params_to_boost(profile: str, params: dict, overrides: dict | None = None) -> BoostParams:
    """Map sampled dimension names onto booster knobs for the given profile."""
    kwargs = {
        "n_rounds": int(params.get("iterations", FIXED_ITERATIONS)),
        "early_stopping_rounds": int(params.get("early_stopping_rounds", FIXED_EARLY_STOPPING)),
        "learning_rate": float(params.get("learning_rate", 0.1)),
        "lambda_l2": float(params.get("reg_lambda", params.get("lambda_l2", 1.0))),
        "alpha_l1": float(params.get("reg_alpha", 0.0)),
    }
    if profile == "leafwise":
        kwargs["max_leaves"] = int(params["num_leaves"])
        kwargs["max_depth"] = None
    else:
        kwargs["max_depth"] = int(params["max_depth"])
        kwargs["max_leaves"] = None
    if "max_bin" in params:
        kwargs["max_bin"] = int(params["max_bin"])
    if "subsample" in params:
        kwargs["subsample"] = float(params["subsample"])
    if overrides:
        kwargs.update(overrides)
    return BoostParams(**kwargs)


def build_loss_spec(loss_kind: str, dataset: Dataset, params: dict, fit_index=None) -> LossSpec:
    """Bind a loss kind and its sampled parameters to the dataset's task."""
    fields = {k: params[k] for k in _LOSS_PARAM_NAMES if k in params}
    if loss_kind == "wce" or loss_kind == "awe":
        fields["w"] = float(fields["w"])
    if loss_kind == "fl":
        fields["gamma"] = float(fields["gamma"])
    if loss_kind == "asl":
        fields["gamma_pos"] = float(fields["gamma_pos"])
        fields["gamma_neg"] = float(fields["gamma_neg"])
    if "margin" in fields:
        fields["margin"] = float(fields["margin"])
    if loss_kind == "cbce":
        fields["beta"] = float(fields["beta"])
        fields["class_counts"] = tuple(int(c) for c in dataset.labels.class_counts(fit_index))
    return LossSpec(kind=loss_kind, task=dataset.task, **fields)


@dataclass
class TrialRecord:
    """One sampled configuration and its cross-validation outcome."""

    index: int
    params: dict
    fold_f1: list[float]
    fold_best_iteration: list[int]
    mean_f1: float
    status: str = "ok"

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "params": self.params,
            "fold_f1": self.fold_f1,
            "fold_best_iteration": self.fold_best_iteration,
            "mean_f1": self.mean_f1,
            "status": self.status,
        }


def _fit_fold(dataset, plan, loss_kind, profile, params, fold, boost_overrides) -> tuple[Ensemble, float]:
    fit_idx, valid_idx = plan.folds[fold]
    spec = build_loss_spec(loss_kind, dataset, params, fit_index=fit_idx)
    boost = params_to_boost(profile, params, boost_overrides)
    model = fit(dataset, spec, boost, train_index=fit_idx, valid_index=valid_idx)
    prob = model.predict_proba(dataset.features.values[valid_idx])
    score = f1(prob, _subset_labels(dataset, valid_idx)).aggregate
    return model, score


def _subset_labels(dataset: Dataset, index):
    from .datasets import LabelBlock

    return LabelBlock(dataset.task, dataset.labels.y[np.asarray(index)])


def run_search(
    dataset: Dataset,
    plan: SplitPlan,
    loss_kind: str,
    profile: str,
    n_trials: int = 100,
    seed: int = 0,
    boost_overrides: dict | None = None,
    initial_params: dict | None = None,
    trial_log=None,
) -> tuple[TrialRecord, list[TrialRecord]]:
    """Random search over the default space; returns (best trial, all trials).

    `initial_params` replaces trial 0's draw, letting callers warm start the
    search with a known configuration.  A fold raising a label/split error
    marks the trial failed and the search continues; every trial failing is
    an error.  `trial_log` streams one JSON record per line when given.
    """
    if n_trials < 1:
        raise ParameterError(f"n_trials must be >= 1, got {n_trials}")
    space = default_space(profile, loss_kind)
    records: list[TrialRecord] = []
    log_fh = open(trial_log, "w", encoding="utf-8") if trial_log is not None else None
    try:
        for index in range(n_trials):
            params = sample(space, seed, index)
            if index == 0 and initial_params is not None:
                params = dict(params, **initial_params)
            fold_f1, fold_best = [], []
            status = "ok"
            for fold in range(plan.k):
                try:
                    model, score = _fit_fold(
                        dataset, plan, loss_kind, profile, params, fold, boost_overrides
                    )
                except (LabelError, SplitError) as exc:
                    status = f"failed: {exc}"
                    break
                fold_f1.append(float(score))
                fold_best.append(int(model.best_iteration))
            mean = float(np.mean(fold_f1)) if status == "ok" else float("nan")
            record = TrialRecord(
                index=index,
                params=params,
                fold_f1=fold_f1,
                fold_best_iteration=fold_best,
                mean_f1=mean,
                status=status,
            )
            records.append(record)
            if log_fh is not None:
                log_fh.write(json.dumps(record.to_dict()) + "\n")
    finally:
        if log_fh is not None:
            log_fh.close()
    usable = [r for r in records if r.status == "ok"]
    if not usable:
        raise SearchError("every trial failed; no configuration could be ranked")
    best = max(usable, key=lambda r: (r.mean_f1, -r.index))
    return best, records


def final_evaluate(
    dataset: Dataset,
    plan: SplitPlan,
    loss_kind: str,
    profile: str,
    params: dict,
    boost_overrides: dict | None = None,
) -> dict:
    """Refit the chosen configuration per fold and score each on the test set."""
    scores = []
    for fold in range(plan.k):
        fit_idx, valid_idx = plan.folds[fold]
        spec = build_loss_spec(loss_kind, dataset, params, fit_index=fit_idx)
        boost = params_to_boost(profile, params, boost_overrides)
        model = fit(dataset, spec, boost, train_index=fit_idx, valid_index=valid_idx)
        prob = model.predict_proba(dataset.features.values[plan.test])
        scores.append(f1(prob, _subset_labels(dataset, plan.test)).aggregate)
    scores = np.asarray(scores, dtype=np.float64)
    return {
        "fold_test_f1": [float(s) for s in scores],
        "f1_mean": float(scores.mean()),
        "f1_std": float(scores.std()),
    }
