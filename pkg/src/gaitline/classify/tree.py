"""CART classification tree with Gini impurity.

Nodes are stored in flat arrays. Internal nodes send ``x[feature] <=
threshold`` to ``left``; leaves have ``feature == -1`` and keep the class
counts of the training rows that reached them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from gaitline.classify.dataset import Dataset
from gaitline.errors import DataError

LEAF = -1


@dataclass(frozen=True, eq=False)
class TreeModel:
    classes: tuple[str, ...]
    n_features: int
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    counts: np.ndarray
    max_depth: int = 20
    min_leaf: int = 2

    kind = "tree"

    @property
    def n_nodes(self) -> int:
        return int(self.feature.shape[0])

    @property
    def depth(self) -> int:
        depth = np.zeros(self.n_nodes, dtype=np.int64)
        for node in range(self.n_nodes):
            if self.feature[node] != LEAF:
                depth[self.left[node]] = depth[self.right[node]] = depth[node] + 1
        return int(depth.max())

    def apply(self, x) -> np.ndarray:
        """Leaf index reached by every row."""
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        if x.shape[1] != self.n_features:
            raise DataError(f"expected {self.n_features} features, got {x.shape[1]}")
        node = np.zeros(x.shape[0], dtype=np.int64)
        rows = np.arange(x.shape[0])
        while True:
            feat = self.feature[node]
            inner = feat != LEAF
            if not inner.any():
                return node
            r, n, f = rows[inner], node[inner], feat[inner]
            go_left = x[r, f] <= self.threshold[n]
            node[inner] = np.where(go_left, self.left[n], self.right[n])

    def predict(self, x) -> np.ndarray:
        return np.argmax(self.counts[self.apply(x)], axis=1).astype(np.int64)

    def to_dict(self) -> dict:
        return {
            "classes": list(self.classes),
            "n_features": self.n_features,
            "max_depth": self.max_depth,
            "min_leaf": self.min_leaf,
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "counts": self.counts.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> TreeModel:
        return cls(
            tuple(d["classes"]),
            int(d["n_features"]),
            np.array(d["feature"], dtype=np.int64),
            np.array(d["threshold"], dtype=np.float64),
            np.array(d["left"], dtype=np.int64),
            np.array(d["right"], dtype=np.int64),
            np.array(d["counts"], dtype=np.int64).reshape(len(d["feature"]), len(d["classes"])),
            int(d["max_depth"]),
            int(d["min_leaf"]),
        )


def gini(counts: np.ndarray) -> np.ndarray:
    counts = np.asarray(counts, dtype=np.float64)
    total = counts.sum(axis=-1)
    safe = np.where(total > 0, total, 1.0)
    p = counts / safe[..., None]
    return np.where(total > 0, 1.0 - np.sum(p * p, axis=-1), 0.0)


def best_split(
    x: np.ndarray,
    y: np.ndarray,
    n_classes: int,
    features,
    min_leaf: int = 1,
) -> tuple[int, float, float] | None:
    """Highest Gini gain split over ``features`` and midpoint thresholds.

    Returns ``(feature, threshold, gain)`` or ``None`` when no threshold
    leaves at least ``min_leaf`` rows on each side. Ties keep the first
    feature in ``features`` order and the lowest threshold.
    """
    m = y.shape[0]
    parent = np.bincount(y, minlength=n_classes)
    parent_impurity = gini(parent)
    onehot = np.eye(n_classes, dtype=np.int64)[y]
    lo = max(min_leaf, 1)
    hi = m - max(min_leaf, 1)
    if hi < lo:
        return None
    best: tuple[int, float, float] | None = None
    for f in features:
        col = x[:, f]
        order = np.argsort(col, kind="stable")
        xs = col[order]
        left = np.cumsum(onehot[order], axis=0)[:-1]  # left counts for sizes 1..m-1
        sizes = np.arange(1, m)
        valid = (xs[:-1] < xs[1:]) & (sizes >= lo) & (sizes <= hi)
        if not valid.any():
            continue
        right = parent - left
        weighted = (sizes * gini(left) + (m - sizes) * gini(right)) / m
        gain = np.where(valid, parent_impurity - weighted, -np.inf)
        p = int(np.argmax(gain))
        if best is None or gain[p] > best[2]:
            thr = 0.5 * (xs[p] + xs[p + 1])
            if not xs[p] <= thr < xs[p + 1]:
                thr = xs[p]
            best = (int(f), float(thr), float(gain[p]))
    return best


class _Builder:
    def __init__(self, x, y, n_classes, max_depth, min_leaf, max_features=None, rng=None):
        self.x = x
        self.y = y
        self.n_classes = n_classes
        self.max_depth = max_depth
        self.min_leaf = min_leaf
        self.max_features = max_features
        self.rng = rng
        self.feature: list[int] = []
        self.threshold: list[float] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.counts: list[np.ndarray] = []

    def _candidates(self) -> np.ndarray:
        d = self.x.shape[1]
        if self.max_features is None or self.max_features >= d:
            return np.arange(d)
        return self.rng.choice(d, size=self.max_features, replace=False)

    def _new_node(self, counts) -> int:
        self.feature.append(LEAF)
        self.threshold.append(0.0)
        self.left.append(LEAF)
        self.right.append(LEAF)
        self.counts.append(counts)
        return len(self.feature) - 1

    def build(self) -> None:
        # explicit stack, depth-first with the left child first
        root = self._new_node(np.bincount(self.y, minlength=self.n_classes))
        stack = [(root, np.arange(self.y.shape[0]), 0)]
        while stack:
            node, idx, depth = stack.pop()
            counts = self.counts[node]
            if depth >= self.max_depth or np.count_nonzero(counts) <= 1 or idx.size < 2 * self.min_leaf:
                continue
            split = best_split(self.x[idx], self.y[idx], self.n_classes, self._candidates(), self.min_leaf)
            if split is None:
                continue
            f, thr, _ = split
            go_left = self.x[idx, f] <= thr
            li, ri = idx[go_left], idx[~go_left]
            left = self._new_node(np.bincount(self.y[li], minlength=self.n_classes))
            right = self._new_node(np.bincount(self.y[ri], minlength=self.n_classes))
            self.feature[node] = f
            self.threshold[node] = thr
            self.left[node] = left
            self.right[node] = right
            stack.append((right, ri, depth + 1))
            stack.append((left, li, depth + 1))


def grow_tree(
    x: np.ndarray,
    y: np.ndarray,
    classes: tuple[str, ...],
    max_depth: int = 20,
    min_leaf: int = 2,
    max_features: int | None = None,
    rng: np.random.Generator | None = None,
) -> TreeModel:
    if y.shape[0] == 0:
        raise DataError("cannot grow a tree on an empty dataset")
    if max_depth < 0 or min_leaf < 1:
        raise DataError("max_depth must be >= 0 and min_leaf >= 1")
    b = _Builder(x, y, len(classes), max_depth, min_leaf, max_features, rng)
    b.build()
    return TreeModel(
        classes,
        int(x.shape[1]),
        np.array(b.feature, dtype=np.int64),
        np.array(b.threshold, dtype=np.float64),
        np.array(b.left, dtype=np.int64),
        np.array(b.right, dtype=np.int64),
        np.array(b.counts, dtype=np.int64).reshape(len(b.feature), len(classes)),
        max_depth,
        min_leaf,
    )


def tree_train(data: Dataset, max_depth: int = 20, min_leaf: int = 2) -> TreeModel:
    return grow_tree(data.features, data.labels, data.classes, max_depth, min_leaf)


def tree_predict(model: TreeModel, row) -> int:
    return int(model.predict(np.asarray(row, dtype=np.float64)[None, :])[0])
