"""Evaluation protocols and reports.

Detection reports carry ROC AUC, PR AUC, and TPR at a 1% FPR budget. The
challenge and novel-family protocols join a malicious partition with the
benign rows of the corresponding test partition and score that union with
the detector. Single-class evaluation sets are reported as errors rather
than NaN metrics.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .metrics import (
    SingleClassError,
    multiclass_metrics,
    pr_auc,
    roc_auc,
    tpr_at_fpr,
)

FPR_BUDGET = 0.01


@dataclass
class EvalReport:
    task: str
    metrics: dict = field(default_factory=dict)
    per_tag: dict = field(default_factory=dict)
    errors: list = field(default_factory=list)

    def __post_init__(self):
        for name, value in self.metrics.items():
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"metric {name} = {value} outside [0, 1]")

    def to_json(self) -> str:
        return json.dumps(
            {
                "task": self.task,
                "metrics": self.metrics,
                "per_tag": self.per_tag,
                "errors": self.errors,
            },
            indent=2,
            sort_keys=True,
        )

    def to_table(self) -> str:
        lines = [f"task: {self.task}"]
        width = max((len(k) for k in self.metrics), default=0)
        for name in sorted(self.metrics):
            lines.append(f"  {name:<{width}}  {self.metrics[name]:.4f}")
        for tag in sorted(self.per_tag):
            row = self.per_tag[tag]
            cells = "  ".join(f"{k}={v:.4f}" for k, v in sorted(row.items()))
            lines.append(f"  [{tag}] {cells}")
        for error in self.errors:
            lines.append(f"  error: {error}")
        return "\n".join(lines)


def _scores(model, matrix) -> np.ndarray:
    return model.predict_proba(np.asarray(matrix, dtype=np.float32))[:, 1]


def _detection_report(task: str, scores, labels) -> EvalReport:
    try:
        metrics = {
            "roc_auc": roc_auc(scores, labels),
            "pr_auc": pr_auc(scores, labels),
            "tpr_at_1pct_fpr": tpr_at_fpr(scores, labels, FPR_BUDGET),
        }
    except SingleClassError as exc:
        return EvalReport(task=task, errors=[str(exc)])
    return EvalReport(task=task, metrics=metrics)


def evaluate_detection(model, matrix, labels) -> EvalReport:
    return _detection_report("detection", _scores(model, matrix), labels)


def _join_eval(task, model, malicious_matrix, benign_matrix) -> EvalReport:
    malicious_matrix = np.asarray(malicious_matrix, dtype=np.float32)
    benign_matrix = np.asarray(benign_matrix, dtype=np.float32)
    joined = np.vstack([malicious_matrix, benign_matrix])
    labels = np.r_[
        np.ones(malicious_matrix.shape[0]), np.zeros(benign_matrix.shape[0])
    ]
    return _detection_report(task, _scores(model, joined), labels)


def evaluate_challenge(model, challenge_matrix, benign_test_matrix) -> EvalReport:
    """Challenge rows (all malicious) joined with the benign test rows."""
    return _join_eval("challenge", model, challenge_matrix, benign_test_matrix)


def evaluate_novel_families(model, novel_matrix, benign_test_matrix) -> EvalReport:
    return _join_eval("novel-families", model, novel_matrix, benign_test_matrix)


def evaluate_family(family_model, matrix, families) -> EvalReport:
    families = np.asarray(families)
    predictions = family_model.predict(matrix)
    return EvalReport(task="family", metrics=multiclass_metrics(families, predictions))


def evaluate_ovr(ovr_models, matrix, tag_sets) -> EvalReport:
    """Per-tag precision/recall/F1/AUC at the 0.5 cut, plus macro averages."""
    tag_sets = [frozenset(tags) for tags in tag_sets]
    scores_by_tag = ovr_models.predict_scores(matrix)
    per_tag: dict = {}
    errors = []
    for tag, scores in sorted(scores_by_tag.items()):
        y = np.array([int(tag in tags) for tags in tag_sets])
        predicted = (scores >= 0.5).astype(int)
        tp = int(((predicted == 1) & (y == 1)).sum())
        fp = int(((predicted == 1) & (y == 0)).sum())
        fn = int(((predicted == 0) & (y == 1)).sum())
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = (
            2 * precision * recall / (precision + recall)
            if precision + recall
            else 0.0
        )
        row = {"precision": precision, "recall": recall, "f1": f1}
        try:
            row["auc"] = roc_auc(scores, y)
        except SingleClassError as exc:
            errors.append(f"{tag}: {exc}")
        per_tag[tag] = row
    macro = {}
    if per_tag:
        for name in ("precision", "recall", "f1"):
            macro[f"macro_{name}"] = float(
                np.mean([row[name] for row in per_tag.values()])
            )
        aucs = [row["auc"] for row in per_tag.values() if "auc" in row]
        if aucs:
            macro["macro_auc"] = float(np.mean(aucs))
    return EvalReport(task="ovr-tags", metrics=macro, per_tag=per_tag, errors=errors)
