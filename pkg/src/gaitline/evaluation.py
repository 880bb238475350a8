"""Stratified k-fold cross-validation and confusion-matrix reporting."""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from gaitline import serialize
from gaitline.classify import Dataset, LearnerConfig, Model, model_from_dict, model_to_dict, train
from gaitline.classify.dataset import class_order
from gaitline.dimred import PcaModel, pca_fit
from gaitline.errors import DataError, GaitlineError
from gaitline.features import ColumnStats, FeatureMatrix, zscore_fit

FOLD_MODES = ("stratified", "subject")


@dataclass(frozen=True, eq=False)
class ConfusionMatrix:
    """Rows are true classes, columns predicted classes."""

    classes: tuple[str, ...]
    counts: np.ndarray

    def __post_init__(self) -> None:
        counts = np.asarray(self.counts, dtype=np.int64)
        k = len(self.classes)
        if counts.shape != (k, k):
            raise DataError(f"confusion counts must be {k}x{k}, got {counts.shape}")
        if (counts < 0).any():
            raise DataError("confusion counts must be non-negative")
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "classes", tuple(self.classes))

    @classmethod
    def from_predictions(cls, classes: Sequence[str], truth, predicted) -> ConfusionMatrix:
        k = len(classes)
        counts = np.zeros((k, k), dtype=np.int64)
        np.add.at(counts, (np.asarray(truth, dtype=np.int64), np.asarray(predicted, dtype=np.int64)), 1)
        return cls(tuple(classes), counts)

    def __add__(self, other: ConfusionMatrix) -> ConfusionMatrix:
        if other.classes != self.classes:
            raise DataError("cannot add confusion matrices over different class tables")
        return ConfusionMatrix(self.classes, self.counts + other.counts)

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def accuracy(cm: ConfusionMatrix) -> float:
    if cm.total == 0:
        raise DataError("accuracy of an empty confusion matrix")
    return float(np.trace(cm.counts) / cm.total)


def per_class_accuracy(cm: ConfusionMatrix) -> np.ndarray:
    """Diagonal over row sums; classes with no true rows give NaN."""
    rows = cm.counts.sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(rows > 0, np.diag(cm.counts) / np.where(rows > 0, rows, 1), np.nan)


@dataclass(frozen=True, eq=False)
class FoldPlan:
    k: int
    seed: int
    assignments: np.ndarray
    mode: str = "stratified"

    def test_index(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments == fold)

    def train_index(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments != fold)


def stratified_kfold(labels, k: int = 10, seed: int = 0) -> FoldPlan:
    """Shuffle each class by ``seed`` and deal its rows round-robin over the folds.

    The deal continues across classes where the previous class stopped, so
    overall fold sizes also differ by at most one.
    """
    y = labels.labels if isinstance(labels, Dataset) else np.asarray(labels)
    if k < 2:
        raise DataError(f"need at least 2 folds, got {k}")
    rng = np.random.default_rng(seed)
    assignments = np.full(y.shape[0], -1, dtype=np.int64)
    offset = 0
    for c in np.unique(y):
        rows = np.flatnonzero(y == c)
        if rows.size < k:
            raise DataError(f"class {c!r} has {rows.size} rows, fewer than {k} folds")
        rows = rng.permutation(rows)
        assignments[rows] = (offset + np.arange(rows.size)) % k
        offset += rows.size
    return FoldPlan(k, int(seed), assignments, "stratified")


def subject_kfold(subject_ids: Sequence[str], k: int = 10, seed: int = 0) -> FoldPlan:
    """Whole subjects per fold, so no subject is in both train and test."""
    subjects = np.asarray(subject_ids, dtype=object)
    unique = sorted(set(subject_ids))
    if len(unique) < k:
        raise DataError(f"{len(unique)} subjects, fewer than {k} folds")
    rng = np.random.default_rng(seed)
    order = [unique[i] for i in rng.permutation(len(unique))]
    fold_of = {s: i % k for i, s in enumerate(order)}
    assignments = np.array([fold_of[s] for s in subjects], dtype=np.int64)
    return FoldPlan(k, int(seed), assignments, "subject")


@dataclass(frozen=True, eq=False)
class FittedPipeline:
    """Normalization, PCA and classifier fitted together on one training set."""

    stats: ColumnStats
    pca: PcaModel
    model: Model

    def transform(self, values) -> np.ndarray:
        return self.pca.transform(self.stats.apply(values))

    def predict(self, values) -> np.ndarray:
        return self.model.predict(self.transform(values))

    def to_dict(self) -> dict:
        return {"zscore": self.stats.to_dict(), "pca": self.pca.to_dict(), **model_to_dict(self.model)}

    @classmethod
    def from_dict(cls, d: dict) -> FittedPipeline:
        return cls(ColumnStats.from_dict(d["zscore"]), PcaModel.from_dict(d["pca"]), model_from_dict(d))

    def dumps(self) -> str:
        return serialize.dumps("pipeline", self.to_dict())

    @classmethod
    def loads(cls, text: str) -> FittedPipeline:
        return cls.from_dict(serialize.loads(text, "pipeline"))


def fit_preprocessing(values: np.ndarray, pca_threshold: float) -> tuple[ColumnStats, PcaModel]:
    stats = zscore_fit(values)
    return stats, pca_fit(stats.apply(values), pca_threshold)


def fit_pipeline(
    values: np.ndarray,
    labels: np.ndarray,
    classes: tuple[str, ...],
    learner: LearnerConfig,
    pca_threshold: float = 0.95,
    preprocessing: tuple[ColumnStats, PcaModel] | None = None,
) -> FittedPipeline:
    """Fit z-score, PCA (unless ``preprocessing`` is given) and the classifier on one training set."""
    stats, pca = preprocessing or fit_preprocessing(values, pca_threshold)
    data = Dataset(pca.transform(stats.apply(values)), labels, classes)
    return FittedPipeline(stats, pca, train(learner, data))


@dataclass
class EvalReport:
    confusion: ConfusionMatrix
    config: dict = field(default_factory=dict)
    fold_mode: str = "stratified"
    folds: int = 10
    pca_components: tuple[int, ...] = ()

    @property
    def accuracy(self) -> float:
        return accuracy(self.confusion)

    @property
    def per_class_accuracy(self) -> np.ndarray:
        return per_class_accuracy(self.confusion)

    def to_dict(self) -> dict:
        per_class = self.per_class_accuracy
        return {
            "accuracy": self.accuracy,
            "accuracy_pct": round(100.0 * self.accuracy, 2),
            "classes": list(self.confusion.classes),
            "confusion": self.confusion.counts.tolist(),
            "per_class_accuracy": {
                c: (None if np.isnan(a) else float(a)) for c, a in zip(self.confusion.classes, per_class)
            },
            "rows": self.confusion.total,
            "fold_mode": self.fold_mode,
            "folds": self.folds,
            "pca_components": list(self.pca_components),
            "config": self.config,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2, allow_nan=False) + "\n"

    def to_text(self) -> str:
        classes = self.confusion.classes
        width = max(8, *(len(c) for c in classes)) + 2
        lines = [
            f"classifier: {self.config.get('classifier', '?')}   folds: {self.folds} ({self.fold_mode})"
            f"   rows: {self.confusion.total}",
            f"accuracy: {100.0 * self.accuracy:.2f}%",
            "",
            "affect".ljust(width) + "".join(c.rjust(width) for c in classes) + "acc".rjust(9),
        ]
        for c, row, acc in zip(classes, self.confusion.counts, self.per_class_accuracy):
            acc_s = "-" if np.isnan(acc) else f"{100.0 * acc:.2f}%"
            lines.append(c.ljust(width) + "".join(str(v).rjust(width) for v in row) + acc_s.rjust(9))
        if self.config:
            lines += ["", "config: " + " ".join(f"{k}={self.config[k]}" for k in sorted(self.config))]
        return "\n".join(lines) + "\n"


def cross_validate(
    matrix: FeatureMatrix,
    learner: LearnerConfig,
    plan: FoldPlan,
    pca_threshold: float = 0.95,
    leaky_preproc: bool = False,
    classes: Sequence[str] | None = None,
    n_jobs: int = 1,
    config: dict | None = None,
) -> EvalReport:
    """Cross-validate the normalize, PCA, classify chain.

    Normalization and PCA are refit on each training fold unless
    ``leaky_preproc`` is set, which fits them once on every row (the
    order in which the original study presents its steps).
    """
    if plan.assignments.shape[0] != len(matrix):
        raise DataError(f"fold plan covers {plan.assignments.shape[0]} rows, matrix has {len(matrix)}")
    classes = tuple(classes) if classes is not None else class_order(matrix.labels)
    data = Dataset.from_labels(matrix.values, matrix.labels, classes)
    shared = fit_preprocessing(data.features, pca_threshold) if leaky_preproc else None

    def run_fold(fold: int) -> tuple[ConfusionMatrix, int]:
        tr, te = plan.train_index(fold), plan.test_index(fold)
        if te.size == 0:
            return ConfusionMatrix.from_predictions(classes, [], []), 0
        try:
            fitted = fit_pipeline(data.features[tr], data.labels[tr], classes, learner, pca_threshold, shared)
            pred = fitted.predict(data.features[te])
        except GaitlineError as exc:
            raise type(exc)(f"fold {fold}: {exc}") from exc
        return ConfusionMatrix.from_predictions(classes, data.labels[te], pred), fitted.pca.n_components

    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            results = list(pool.map(run_fold, range(plan.k)))
    else:
        results = [run_fold(f) for f in range(plan.k)]

    total = ConfusionMatrix(classes, np.zeros((len(classes), len(classes)), dtype=np.int64))
    for cm, _ in results:
        total = total + cm
    return EvalReport(total, dict(config or {}), plan.mode, plan.k, tuple(k for _, k in results))
