"""Random forest of CART trees; a one-tree forest doubles as the random tree model."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from gaitline.classify.dataset import Dataset, majority_vote
from gaitline.classify.tree import TreeModel, grow_tree
from gaitline.errors import DataError


def tree_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), int(index)])


def bootstrap_indices(rng: np.random.Generator, n: int) -> np.ndarray:
    return rng.integers(0, n, size=n)


@dataclass(frozen=True, eq=False)
class ForestModel:
    """Trees plus the settings needed to regenerate their bootstrap draws.

    Tree ``t`` was grown with ``default_rng([seed, t])``: first the
    bootstrap sample (when ``bootstrap`` is set), then the per-split
    feature draws.
    """

    classes: tuple[str, ...]
    trees: tuple[TreeModel, ...]
    mtry: int
    seed: int
    bootstrap: bool = True

    kind = "forest"

    @property
    def n_features(self) -> int:
        return self.trees[0].n_features

    def votes(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        tally = np.zeros((x.shape[0], len(self.classes)), dtype=np.int64)
        rows = np.arange(x.shape[0])
        for tree in self.trees:
            np.add.at(tally, (rows, tree.predict(x)), 1)
        return tally

    def predict(self, x) -> np.ndarray:
        return majority_vote(self.votes(x))

    def to_dict(self) -> dict:
        return {
            "classes": list(self.classes),
            "mtry": self.mtry,
            "seed": self.seed,
            "bootstrap": self.bootstrap,
            "trees": [t.to_dict() for t in self.trees],
        }

    @classmethod
    def from_dict(cls, d: dict) -> ForestModel:
        return cls(
            tuple(d["classes"]),
            tuple(TreeModel.from_dict(t) for t in d["trees"]),
            int(d["mtry"]),
            int(d["seed"]),
            bool(d["bootstrap"]),
        )


def default_mtry(d: int) -> int:
    return max(1, int(math.floor(math.sqrt(d))))


def _grow(data: Dataset, index: int, seed: int, mtry: int, max_depth: int, min_leaf: int, bootstrap: bool) -> TreeModel:
    rng = tree_rng(seed, index)
    if bootstrap:
        rows = bootstrap_indices(rng, len(data))
        x, y = data.features[rows], data.labels[rows]
    else:
        x, y = data.features, data.labels
    return grow_tree(x, y, data.classes, max_depth, min_leaf, mtry, rng)


def forest_train(
    data: Dataset,
    n_trees: int = 100,
    mtry: int | None = None,
    seed: int = 0,
    max_depth: int = 20,
    min_leaf: int = 2,
    bootstrap: bool = True,
    n_jobs: int = 1,
) -> ForestModel:
    """Grow ``n_trees`` trees on bootstrap resamples with ``mtry`` candidate features per split.

    Each tree's randomness depends only on ``(seed, tree index)``, so the
    result does not depend on ``n_jobs``.
    """
    if len(data) == 0:
        raise DataError("cannot train a forest on an empty dataset")
    if n_trees < 1:
        raise DataError(f"n_trees must be >= 1, got {n_trees}")
    d = data.n_features
    mtry = default_mtry(d) if mtry is None else int(mtry)
    if not 1 <= mtry <= d:
        raise DataError(f"mtry must lie in [1, {d}], got {mtry}")

    def grow(t: int) -> TreeModel:
        return _grow(data, t, seed, mtry, max_depth, min_leaf, bootstrap)

    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            trees = list(pool.map(grow, range(n_trees)))
    else:
        trees = [grow(t) for t in range(n_trees)]
    return ForestModel(data.classes, tuple(trees), mtry, int(seed), bootstrap)


def forest_predict(model: ForestModel, row) -> int:
    row = np.asarray(row, dtype=np.float64)
    if row.shape != (model.n_features,):
        raise DataError(f"expected a row of {model.n_features} features")
    return int(model.predict(row[None, :])[0])


def oob_accuracy(model: ForestModel, data: Dataset) -> float:
    """Out-of-bag accuracy over rows left out by at least one tree."""
    if not model.bootstrap:
        raise DataError("out-of-bag estimates need bootstrap resampling")
    n = len(data)
    tally = np.zeros((n, len(model.classes)), dtype=np.int64)
    for t, tree in enumerate(model.trees):
        in_bag = np.zeros(n, dtype=bool)
        in_bag[bootstrap_indices(tree_rng(model.seed, t), n)] = True
        out = np.flatnonzero(~in_bag)
        if out.size:
            np.add.at(tally, (out, tree.predict(data.features[out])), 1)
    scored = tally.sum(axis=1) > 0
    if not scored.any():
        raise DataError("no out-of-bag rows")
    pred = majority_vote(tally[scored])
    return float(np.mean(pred == data.labels[scored]))
