import random

import numpy as np
import pytest

from bench_harness import (
    SingleClassError,
    multiclass_metrics,
    pr_auc,
    roc_auc,
    tpr_at_fpr,
)


def oracle_roc_auc(scores, labels):
    """All-pairs probability that a positive outranks a negative."""
    pos = [s for s, y in zip(scores, labels) if y == 1]
    neg = [s for s, y in zip(scores, labels) if y == 0]
    wins = 0.0
    for p in pos:
        for n in neg:
            if p > n:
                wins += 1.0
            elif p == n:
                wins += 0.5
    return wins / (len(pos) * len(neg))


def oracle_pr_curve(scores, labels):
    """(precision, recall) at every distinct threshold, descending."""
    points = []
    for theta in sorted(set(scores), reverse=True):
        tp = sum(1 for s, y in zip(scores, labels) if s >= theta and y == 1)
        fp = sum(1 for s, y in zip(scores, labels) if s >= theta and y == 0)
        fn = sum(1 for s, y in zip(scores, labels) if s < theta and y == 1)
        points.append((tp / (tp + fp), tp / (tp + fn)))
    return points


def oracle_pr_auc(scores, labels):
    auc = 0.0
    prev_recall = 0.0
    for precision, recall in oracle_pr_curve(scores, labels):
        auc += (recall - prev_recall) * precision
        prev_recall = recall
    return auc


def oracle_tpr_at_fpr(scores, labels, budget):
    best = 0.0
    n_pos = sum(labels)
    n_neg = len(labels) - n_pos
    for theta in sorted(set(scores), reverse=True):
        tp = sum(1 for s, y in zip(scores, labels) if s >= theta and y == 1)
        fp = sum(1 for s, y in zip(scores, labels) if s >= theta and y == 0)
        if fp / n_neg <= budget:
            best = max(best, tp / n_pos)
    return best


def random_eval_set(rng):
    while True:
        n = rng.randint(2, 20)
        labels = [rng.randint(0, 1) for _ in range(n)]
        if 0 < sum(labels) < n:
            break
    # coarse scores so ties actually occur
    scores = [rng.choice((0.0, 0.1, 0.25, 0.5, 0.5, 0.75, 0.9, 1.0)) for _ in range(n)]
    return scores, labels


def test_metric_oracle_500_random_sets():
    rng = random.Random(2024)
    for _ in range(500):
        scores, labels = random_eval_set(rng)
        assert abs(roc_auc(scores, labels) - oracle_roc_auc(scores, labels)) < 1e-9
        assert abs(pr_auc(scores, labels) - oracle_pr_auc(scores, labels)) < 1e-9
        budget = rng.choice((0.0, 0.01, 0.1, 0.3, 1.0))
        assert (
            abs(
                tpr_at_fpr(scores, labels, budget)
                - oracle_tpr_at_fpr(scores, labels, budget)
            )
            < 1e-9
        )


def test_perfect_ranking():
    scores = [0.1, 0.2, 0.8, 0.9]
    labels = [0, 0, 1, 1]
    assert roc_auc(scores, labels) == 1.0
    assert pr_auc(scores, labels) == 1.0
    assert tpr_at_fpr(scores, labels, 0.01) == 1.0


def test_all_scores_tied():
    assert roc_auc([0.5] * 6, [0, 1, 0, 1, 0, 1]) == 0.5


def test_twelve_point_hand_case():
    scores = [0.9, 0.8, 0.8, 0.7, 0.6, 0.55, 0.5, 0.5, 0.4, 0.3, 0.2, 0.1]
    labels = [1, 1, 0, 1, 0, 1, 1, 0, 0, 1, 0, 0]
    assert roc_auc(scores, labels) == pytest.approx(
        oracle_roc_auc(scores, labels), abs=1e-12
    )
    assert pr_auc(scores, labels) == pytest.approx(
        oracle_pr_auc(scores, labels), abs=1e-12
    )


def test_tpr_monotone_in_budget():
    rng = random.Random(5)
    for _ in range(50):
        scores, labels = random_eval_set(rng)
        budgets = [0.0, 0.01, 0.05, 0.2, 0.5, 1.0]
        values = [tpr_at_fpr(scores, labels, b) for b in budgets]
        assert values == sorted(values)


def test_single_class_raises():
    with pytest.raises(SingleClassError):
        roc_auc([0.1, 0.9], [1, 1])
    with pytest.raises(SingleClassError):
        pr_auc([0.1, 0.9], [0, 0])


def test_rejects_malformed_inputs():
    with pytest.raises(ValueError):
        roc_auc([0.1], [0, 1])
    with pytest.raises(ValueError):
        roc_auc([0.1, 0.2], [0, 2])
    with pytest.raises(ValueError):
        tpr_at_fpr([0.1, 0.9], [0, 1], fpr_budget=1.5)


def test_macro_invariant_to_relabeling():
    rng = np.random.RandomState(0)
    y_true = rng.randint(0, 3, size=60)
    y_pred = rng.randint(0, 3, size=60)
    base = multiclass_metrics(y_true, y_pred)
    mapping = {0: 2, 1: 0, 2: 1}
    remap = np.vectorize(mapping.get)
    renamed = multiclass_metrics(remap(y_true), remap(y_pred))
    for key in ("accuracy", "macro_precision", "macro_recall", "macro_f1"):
        assert renamed[key] == pytest.approx(base[key], abs=1e-12)


def test_weighted_invariant_to_within_class_reordering():
    rng = np.random.RandomState(1)
    y_true = np.array([0] * 20 + [1] * 10 + [2] * 5)
    y_pred = rng.randint(0, 3, size=35)
    base = multiclass_metrics(y_true, y_pred)
    order = np.concatenate(
        [rng.permutation(np.flatnonzero(y_true == c)) for c in (0, 1, 2)]
    )
    shuffled = multiclass_metrics(y_true[order], y_pred[order])
    for key in ("weighted_precision", "weighted_recall", "weighted_f1"):
        assert shuffled[key] == pytest.approx(base[key], abs=1e-12)


def test_all_metrics_in_unit_interval():
    rng = random.Random(9)
    for _ in range(100):
        scores, labels = random_eval_set(rng)
        assert 0.0 <= roc_auc(scores, labels) <= 1.0
        assert 0.0 <= pr_auc(scores, labels) <= 1.0
        assert 0.0 <= tpr_at_fpr(scores, labels) <= 1.0
