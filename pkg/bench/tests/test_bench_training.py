import time

import numpy as np
import pytest

from bench_harness import (
    TrainSpec,
    TrainingError,
    evaluate_detection,
    evaluate_family,
    evaluate_ovr,
    train_detector,
    train_family,
    train_ovr,
)


def test_default_hyperparameters():
    detection = TrainSpec.detection()
    assert (detection.rounds, detection.leaves, detection.min_data_per_leaf) == (
        500,
        64,
        100,
    )
    assert detection.early_stopping_rounds is None
    for spec in (TrainSpec.family(), TrainSpec.ovr_tags()):
        assert (spec.rounds, spec.leaves, spec.min_data_per_leaf) == (100, 64, 10)
        assert spec.early_stopping_rounds == 10
    with pytest.raises(TrainingError):
        TrainSpec(task="regression")


def test_detector_on_separable_blobs():
    started = time.monotonic()
    rng = np.random.RandomState(0)
    x0 = rng.randn(100, 10) * 0.3
    x1 = rng.randn(100, 10) * 0.3 + 2.5
    x = np.vstack([x0, x1]).astype(np.float32)
    y = np.r_[np.zeros(100), np.ones(100)]
    model = train_detector(x, y, TrainSpec.detection())
    x_test = np.vstack(
        [rng.randn(50, 10) * 0.3, rng.randn(50, 10) * 0.3 + 2.5]
    ).astype(np.float32)
    y_test = np.r_[np.zeros(50), np.ones(50)]
    report = evaluate_detection(model, x_test, y_test)
    assert report.metrics["roc_auc"] >= 0.99
    assert time.monotonic() - started < 120


def test_shuffled_labels_score_at_chance():
    rng = np.random.RandomState(1)
    x = rng.randn(300, 8).astype(np.float32)
    aucs = []
    for seed in range(10):
        y = np.random.RandomState(seed).randint(0, 2, size=300)
        model = train_detector(
            x, y, TrainSpec(task="detection", rounds=30, min_data_per_leaf=20, seed=seed)
        )
        x_eval = np.random.RandomState(100 + seed).randn(200, 8).astype(np.float32)
        y_eval = np.random.RandomState(200 + seed).randint(0, 2, size=200)
        aucs.append(evaluate_detection(model, x_eval, y_eval).metrics["roc_auc"])
    assert abs(float(np.mean(aucs)) - 0.5) <= 0.05


def test_detector_deterministic_given_seed():
    rng = np.random.RandomState(3)
    x = np.vstack([rng.randn(60, 5), rng.randn(60, 5) + 2]).astype(np.float32)
    y = np.r_[np.zeros(60), np.ones(60)]
    spec = TrainSpec(task="detection", rounds=50, min_data_per_leaf=10, seed=11)
    a = train_detector(x, y, spec).predict_proba(x)
    b = train_detector(x, y, spec).predict_proba(x)
    assert np.array_equal(a, b)


def test_detector_input_validation():
    x = np.zeros((10, 4), dtype=np.float32)
    with pytest.raises(TrainingError):
        train_detector(x, np.zeros(10))  # single class
    with pytest.raises(TrainingError):
        train_detector(x, np.r_[np.zeros(4), np.ones(4)])  # row mismatch


def test_family_classifier_on_three_clusters():
    rng = np.random.RandomState(5)
    centers = {"alpha": 0.0, "beta": 4.0, "gamma": 8.0}
    xs, ys = [], []
    for name, center in centers.items():
        xs.append(rng.randn(20, 6) * 0.3 + center)
        ys.extend([name] * 20)
    x = np.vstack(xs).astype(np.float32)
    model = train_family(x, ys, TrainSpec.family())
    assert set(model.classes) == set(centers)
    assert model.train_log["best_iteration"] >= 1
    assert model.train_log["validation_rows"] == 6  # 10% of each family of 20
    report = evaluate_family(model, x, ys)
    assert report.metrics["accuracy"] >= 0.95
    assert 0.0 <= report.metrics["macro_f1"] <= 1.0


def test_ovr_separable_tags():
    rng = np.random.RandomState(6)
    x = np.vstack([rng.randn(25, 5) * 0.3, rng.randn(25, 5) * 0.3 + 3]).astype(
        np.float32
    )
    tag_sets = [{"low"}] * 25 + [{"high"}] * 25
    models = train_ovr(x, tag_sets, TrainSpec.ovr_tags())
    report = evaluate_ovr(models, x, tag_sets)
    assert report.per_tag["low"]["auc"] >= 0.95
    assert report.per_tag["high"]["auc"] >= 0.95
    assert report.metrics["macro_f1"] >= 0.9
