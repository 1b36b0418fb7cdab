"""Gradient-boosted trees with class-balanced losses for imbalanced tabular data."""

from .binning import BinMap, build_bins
from .booster import BoostParams, Ensemble, Tree, base_score, fit, load, save
from .datasets import (
    BINARY,
    MULTICLASS,
    MULTILABEL,
    Dataset,
    FeatureMatrix,
    LabelBlock,
    Task,
    imbalance_ratio,
    load_csv,
    load_libsvm,
    save_csv,
)
from .losses import (
    GradHess,
    LossSpec,
    cbce_weights,
    loss_grad_hess,
    loss_value,
    sigmoid,
    softmax,
    supports,
)
from .metrics import ConfusionCounts, Improvement, MetricReport, f1, improvement, recall_positive
from .splitting import SplitPlan, make_split_plan
from .tuner import (
    Choice,
    LogUniformInt,
    LogUniformReal,
    SearchSpace,
    TrialRecord,
    default_space,
    final_evaluate,
    run_search,
    sample,
)

__version__ = "0.1.0"

__all__ = [
    "BINARY",
    "MULTICLASS",
    "MULTILABEL",
    "BinMap",
    "BoostParams",
    "Choice",
    "ConfusionCounts",
    "Dataset",
    "Ensemble",
    "FeatureMatrix",
    "GradHess",
    "Improvement",
    "LabelBlock",
    "LogUniformInt",
    "LogUniformReal",
    "LossSpec",
    "MetricReport",
    "SearchSpace",
    "SplitPlan",
    "Task",
    "TrialRecord",
    "Tree",
    "base_score",
    "build_bins",
    "cbce_weights",
    "default_space",
    "f1",
    "final_evaluate",
    "fit",
    "imbalance_ratio",
    "improvement",
    "load",
    "load_csv",
    "load_libsvm",
    "loss_grad_hess",
    "loss_value",
    "make_split_plan",
    "recall_positive",
    "run_search",
    "sample",
    "save",
    "save_csv",
    "sigmoid",
    "softmax",
    "supports",
]
