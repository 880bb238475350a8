"""Classifier family: linear SVM, CART tree, random tree and random forest."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from gaitline import serialize
from gaitline.classify.dataset import Dataset, class_order, majority_vote
from gaitline.classify.forest import ForestModel, forest_predict, forest_train, oob_accuracy
from gaitline.classify.svm import BinarySvm, SvmModel, svm_predict, svm_train
from gaitline.classify.tree import TreeModel, tree_predict, tree_train
from gaitline.errors import ConfigError, DataError

LEARNERS = ("svm", "tree", "rtree", "forest")


@dataclass(frozen=True, eq=False)
class ConstantModel:
    """Predicts one fixed class; a baseline and test hook."""

    classes: tuple[str, ...]
    n_features: int
    value: int = 0

    kind = "constant"

    def predict(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        if x.shape[1] != self.n_features:
            raise DataError(f"expected {self.n_features} features, got {x.shape[1]}")
        return np.full(x.shape[0], self.value, dtype=np.int64)

    def to_dict(self) -> dict:
        return {"classes": list(self.classes), "n_features": self.n_features, "value": self.value}

    @classmethod
    def from_dict(cls, d: dict) -> ConstantModel:
        return cls(tuple(d["classes"]), int(d["n_features"]), int(d["value"]))


@dataclass(frozen=True)
class LearnerConfig:
    kind: str = "svm"
    C: float = 1.0
    tol: float = 1e-3
    max_passes: int = 1000
    max_depth: int = 20
    min_leaf: int = 2
    n_trees: int = 100
    mtry: int | None = None
    seed: int = 0
    n_jobs: int = 1

    def __post_init__(self) -> None:
        if self.kind not in LEARNERS + ("constant",):
            raise ConfigError(f"unknown classifier {self.kind!r}; choose from {', '.join(LEARNERS)}")
        if self.C <= 0 or self.tol <= 0:
            raise ConfigError("C and tol must be positive")
        if self.n_trees < 1 or self.max_passes < 1 or self.min_leaf < 1 or self.max_depth < 0:
            raise ConfigError("n_trees, max_passes and min_leaf must be >= 1, max_depth >= 0")
        if self.mtry is not None and self.mtry < 1:
            raise ConfigError("mtry must be >= 1")

    def to_dict(self) -> dict:
        return asdict(self)


Model = SvmModel | TreeModel | ForestModel | ConstantModel

_MODEL_TYPES = {cls.kind: cls for cls in (SvmModel, TreeModel, ForestModel, ConstantModel)}


def train(config: LearnerConfig, data: Dataset) -> Model:
    if config.kind == "svm":
        return svm_train(data, config.C, config.tol, config.max_passes)
    if config.kind == "tree":
        return tree_train(data, config.max_depth, config.min_leaf)
    if config.kind in ("forest", "rtree"):
        n_trees = 1 if config.kind == "rtree" else config.n_trees
        mtry = None if config.mtry is None else min(config.mtry, data.n_features)
        return forest_train(
            data, n_trees, mtry, config.seed, config.max_depth, config.min_leaf, n_jobs=config.n_jobs
        )
    return ConstantModel(data.classes, data.n_features)


def model_to_dict(model: Model) -> dict:
    return {"model_kind": model.kind, "model": model.to_dict()}


def model_from_dict(d: dict) -> Model:
    try:
        cls = _MODEL_TYPES[d["model_kind"]]
    except KeyError:
        raise DataError(f"unknown model kind {d.get('model_kind')!r}") from None
    return cls.from_dict(d["model"])


def dumps_model(model: Model) -> str:
    return serialize.dumps("classifier", model_to_dict(model))


def loads_model(text: str) -> Model:
    return model_from_dict(serialize.loads(text, "classifier"))


__all__ = [
    "LEARNERS",
    "BinarySvm",
    "ConstantModel",
    "Dataset",
    "ForestModel",
    "LearnerConfig",
    "SvmModel",
    "TreeModel",
    "class_order",
    "dumps_model",
    "forest_predict",
    "forest_train",
    "loads_model",
    "majority_vote",
    "model_from_dict",
    "model_to_dict",
    "oob_accuracy",
    "svm_predict",
    "svm_train",
    "train",
    "tree_predict",
    "tree_train",
]
