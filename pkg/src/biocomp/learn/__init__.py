"""Classifier families, tuning, evaluation protocols, and rank statistics."""

from .classifiers import (
    ClassifierSpec,
    FAMILIES,
    STANDARDIZED_FAMILIES,
    default_spec,
    make_model,
)
from .correlation import CorrelationResult, kendall_tau
from .evaluation import (
    EvalReport,
    FoldResult,
    PairResult,
    best_bac_per_participant,
    evaluate,
    grid_search,
    holdout_eval,
    loro_cv,
    stratified_folds,
    train,
)
from .metrics import (
    Confusion,
    balanced_accuracy,
    confusion_from_predictions,
    macro_metrics,
)

__all__ = [
    "ClassifierSpec",
    "Confusion",
    "CorrelationResult",
    "EvalReport",
    "FAMILIES",
    "FoldResult",
    "PairResult",
    "STANDARDIZED_FAMILIES",
    "balanced_accuracy",
    "best_bac_per_participant",
    "confusion_from_predictions",
    "default_spec",
    "evaluate",
    "grid_search",
    "holdout_eval",
    "kendall_tau",
    "loro_cv",
    "macro_metrics",
    "make_model",
    "stratified_folds",
    "train",
]
