"""Ranking metrics by exact threshold sweep.

ROC AUC uses trapezoidal interpolation between operating points; PR AUC is
the interpolation-free step curve (sum of precision times recall gained at
each distinct threshold). Both are computed from one sorted pass over the
unique scores, so they agree with brute-force enumeration exactly.
"""

from __future__ import annotations

import numpy as np


class SingleClassError(ValueError):
    """The evaluation set contains only one class."""


def _check_binary(scores, labels) -> tuple[np.ndarray, np.ndarray]:
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise ValueError("scores and labels must be equal-length 1-D arrays")
    if not np.isin(labels, (0, 1)).all():
        raise ValueError("labels must be 0 or 1")
    if labels.min() == labels.max():
        raise SingleClassError("evaluation set contains a single class")
    return scores, labels.astype(np.int64)


def _sweep(scores: np.ndarray, labels: np.ndarray):
    """Cumulative (tp, fp) at every distinct threshold, descending score."""
    order = np.argsort(-scores, kind="stable")
    sorted_scores = scores[order]
    sorted_labels = labels[order]
    tp = np.cumsum(sorted_labels)
    fp = np.cumsum(1 - sorted_labels)
    # keep only the last index of each tied score block
    distinct = np.r_[sorted_scores[1:] != sorted_scores[:-1], True]
    return tp[distinct], fp[distinct]


def roc_auc(scores, labels) -> float:
    scores, labels = _check_binary(scores, labels)
    tp, fp = _sweep(scores, labels)
    tpr = np.r_[0.0, tp / tp[-1]]
    fpr = np.r_[0.0, fp / fp[-1]]
    trapezoid = getattr(np, "trapezoid", np.trapz)
    return float(trapezoid(tpr, fpr))


def pr_auc(scores, labels) -> float:
    scores, labels = _check_binary(scores, labels)
    tp, fp = _sweep(scores, labels)
    precision = tp / (tp + fp)
    recall = tp / tp[-1]
    prev_recall = np.r_[0.0, recall[:-1]]
    return float(np.sum((recall - prev_recall) * precision))


def tpr_at_fpr(scores, labels, fpr_budget: float = 0.01) -> float:
    """Highest true-positive rate at false-positive rate <= the budget."""
    if not 0.0 <= fpr_budget <= 1.0:
        raise ValueError("fpr budget must be in [0, 1]")
    scores, labels = _check_binary(scores, labels)
    tp, fp = _sweep(scores, labels)
    tpr = tp / tp[-1]
    fpr = fp / fp[-1]
    admissible = tpr[fpr <= fpr_budget]
    return float(admissible.max()) if admissible.size else 0.0


def _per_class_prf(y_true, y_pred, classes):
    rows = []
    for cls in classes:
        tp = int(np.sum((y_pred == cls) & (y_true == cls)))
        fp = int(np.sum((y_pred == cls) & (y_true != cls)))
        fn = int(np.sum((y_pred != cls) & (y_true == cls)))
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = (
            2 * precision * recall / (precision + recall)
            if precision + recall
            else 0.0
        )
        rows.append((precision, recall, f1, int(np.sum(y_true == cls))))
    return rows


def multiclass_metrics(y_true, y_pred) -> dict:
    """Accuracy plus macro- and support-weighted precision/recall/F1."""
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    classes = np.unique(y_true)
    rows = _per_class_prf(y_true, y_pred, classes)
    supports = np.array([r[3] for r in rows], dtype=np.float64)
    weights = supports / supports.sum()
    out = {"accuracy": float(np.mean(y_true == y_pred))}
    for i, name in enumerate(("precision", "recall", "f1")):
        values = np.array([r[i] for r in rows])
        out[f"macro_{name}"] = float(values.mean())
        out[f"weighted_{name}"] = float((values * weights).sum())
    return out
