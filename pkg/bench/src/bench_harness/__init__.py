"""Training and evaluation harness for gradient-boosted baselines.

Consumes the matrix container and selection manifests produced by the
binfeat toolkit and emits metric reports as JSON or plain-text tables.
"""

from .evaluate import (
    EvalReport,
    evaluate_challenge,
    evaluate_detection,
    evaluate_family,
    evaluate_novel_families,
    evaluate_ovr,
)
from .metrics import (
    SingleClassError,
    multiclass_metrics,
    pr_auc,
    roc_auc,
    tpr_at_fpr,
)
from .train import (
    FamilyModel,
    OvRModels,
    TrainingError,
    TrainSpec,
    drop_rare_classes,
    stratified_split,
    train_detector,
    train_family,
    train_ovr,
)

__version__ = "0.1.0"

__all__ = [
    "EvalReport",
    "FamilyModel",
    "OvRModels",
    "SingleClassError",
    "TrainSpec",
    "TrainingError",
    "drop_rare_classes",
    "evaluate_challenge",
    "evaluate_detection",
    "evaluate_family",
    "evaluate_novel_families",
    "evaluate_ovr",
    "multiclass_metrics",
    "pr_auc",
    "roc_auc",
    "stratified_split",
    "tpr_at_fpr",
    "train_detector",
    "train_family",
    "train_ovr",
]
