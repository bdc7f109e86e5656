"""Gradient-boosted baseline trainers.

Detection models train for a fixed round budget; family and tag models use
a per-class-stratified 90/10 validation split with early stopping once the
validation loss stops improving. Classes (families or tags) seen fewer
than ten times in the training data are dropped before fitting.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from sklearn.ensemble import HistGradientBoostingClassifier
from sklearn.metrics import log_loss

TASKS = ("detection", "family", "ovr-tags")

MIN_CLASS_COUNT = 10
VALIDATION_FRACTION = 0.10


class TrainingError(ValueError):
    pass


@dataclass(frozen=True)
class TrainSpec:
    task: str = "detection"
    rounds: int = 500
    leaves: int = 64
    min_data_per_leaf: int = 100
    early_stopping_rounds: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.task not in TASKS:
            raise TrainingError(f"unknown task {self.task!r}")

    @classmethod
    def detection(cls, seed: int = 0) -> "TrainSpec":
        return cls(task="detection", rounds=500, leaves=64,
                   min_data_per_leaf=100, seed=seed)

    @classmethod
    def family(cls, seed: int = 0) -> "TrainSpec":
        return cls(task="family", rounds=100, leaves=64, min_data_per_leaf=10,
                   early_stopping_rounds=10, seed=seed)

    @classmethod
    def ovr_tags(cls, seed: int = 0) -> "TrainSpec":
        return cls(task="ovr-tags", rounds=100, leaves=64, min_data_per_leaf=10,
                   early_stopping_rounds=10, seed=seed)


def _estimator(spec: TrainSpec, max_iter: int) -> HistGradientBoostingClassifier:
    return HistGradientBoostingClassifier(
        max_iter=max_iter,
        max_leaf_nodes=spec.leaves,
        min_samples_leaf=spec.min_data_per_leaf,
        early_stopping=False,
        random_state=spec.seed,
    )


def train_detector(matrix, labels, spec: TrainSpec | None = None):
    """Binary detector over feature matrices; deterministic given the seed."""
    spec = spec or TrainSpec.detection()
    matrix = np.asarray(matrix, dtype=np.float32)
    labels = np.asarray(labels)
    if matrix.ndim != 2 or matrix.shape[0] != labels.shape[0]:
        raise TrainingError("matrix rows and labels must align")
    if np.unique(labels).size < 2:
        raise TrainingError("training labels contain a single class")
    model = _estimator(spec, spec.rounds)
    model.fit(matrix, labels)
    return model


def stratified_split(labels, fraction: float = VALIDATION_FRACTION, seed: int = 0):
    """Per-class validation indices: ~`fraction` of each class, at least one."""
    labels = np.asarray(labels)
    rng = np.random.RandomState(seed)
    val_mask = np.zeros(labels.shape[0], dtype=bool)
    for cls in np.unique(labels):
        members = np.flatnonzero(labels == cls)
        n_val = max(1, int(round(len(members) * fraction)))
        val_mask[rng.permutation(members)[:n_val]] = True
    return ~val_mask, val_mask


def _fit_early_stopping(spec: TrainSpec, x_tr, y_tr, x_val, y_val):
    """Grow the ensemble one round at a time against the validation split."""
    model = _estimator(spec, 1)
    model.set_params(warm_start=True)
    best_loss = np.inf
    best_iter = 0
    stall = 0
    for rounds in range(1, spec.rounds + 1):
        model.set_params(max_iter=rounds)
        model.fit(x_tr, y_tr)
        loss = log_loss(y_val, model.predict_proba(x_val), labels=model.classes_)
        if loss < best_loss - 1e-12:
            best_loss = loss
            best_iter = rounds
            stall = 0
        else:
            stall += 1
            if (
                spec.early_stopping_rounds is not None
                and stall >= spec.early_stopping_rounds
            ):
                break
    # refit at the best round count so extra stalled rounds are discarded
    final = _estimator(spec, best_iter)
    final.fit(x_tr, y_tr)
    return final, {"best_iteration": best_iter, "validation_loss": best_loss}


def drop_rare_classes(labels, min_count: int = MIN_CLASS_COUNT) -> np.ndarray:
    """Mask of rows whose class appears at least `min_count` times."""
    labels = np.asarray(labels)
    values, counts = np.unique(labels, return_counts=True)
    keep = set(values[counts >= min_count])
    return np.array([y in keep for y in labels])


@dataclass
class FamilyModel:
    model: object
    classes: tuple
    train_log: dict = field(default_factory=dict)

    def predict(self, matrix):
        return self.model.predict(np.asarray(matrix, dtype=np.float32))


def train_family(matrix, families, spec: TrainSpec | None = None) -> FamilyModel:
    """Multiclass family classifier with the rare-family cutoff."""
    spec = spec or TrainSpec.family()
    matrix = np.asarray(matrix, dtype=np.float32)
    families = np.asarray(families)
    keep = drop_rare_classes(families)
    matrix, families = matrix[keep], families[keep]
    if np.unique(families).size < 2:
        raise TrainingError("fewer than two families survive the cutoff")
    train_idx, val_idx = stratified_split(families, seed=spec.seed)
    model, log = _fit_early_stopping(
        spec, matrix[train_idx], families[train_idx],
        matrix[val_idx], families[val_idx],
    )
    log["dropped_rows"] = int((~keep).sum())
    log["train_rows"] = int(train_idx.sum())
    log["validation_rows"] = int(val_idx.sum())
    return FamilyModel(model=model, classes=tuple(model.classes_), train_log=log)


@dataclass
class OvRModels:
    """One binary model per surviving tag."""

    models: dict
    discarded: tuple[str, ...]
    train_log: dict = field(default_factory=dict)

    def predict_scores(self, matrix) -> dict:
        matrix = np.asarray(matrix, dtype=np.float32)
        return {
            tag: model.predict_proba(matrix)[:, 1]
            for tag, model in self.models.items()
        }


def train_ovr(matrix, tag_sets, spec: TrainSpec | None = None) -> OvRModels:
    """One-vs-rest binary models; a multi-tag row is positive for each tag."""
    spec = spec or TrainSpec.ovr_tags()
    matrix = np.asarray(matrix, dtype=np.float32)
    tag_sets = [frozenset(tags) for tags in tag_sets]
    if len(tag_sets) != matrix.shape[0]:
        raise TrainingError("matrix rows and tag sets must align")

    counts: dict[str, int] = {}
    for tags in tag_sets:
        for tag in tags:
            counts[tag] = counts.get(tag, 0) + 1
    surviving = sorted(t for t, n in counts.items() if n >= MIN_CLASS_COUNT)
    discarded = tuple(sorted(set(counts) - set(surviving)))

    models: dict = {}
    logs: dict = {}
    for tag in surviving:
        y = np.array([int(tag in tags) for tags in tag_sets])
        if y.min() == y.max():
            warnings.warn(f"tag {tag!r} has a single class; skipped")
            continue
        train_idx, val_idx = stratified_split(y, seed=spec.seed)
        model, log = _fit_early_stopping(
            spec, matrix[train_idx], y[train_idx], matrix[val_idx], y[val_idx]
        )
        models[tag] = model
        logs[tag] = log
    return OvRModels(models=models, discarded=discarded, train_log=logs)
