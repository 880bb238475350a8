from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from gaitline.errors import DataError
from gaitline.ingest import EMOTIONS


def class_order(labels: Sequence[str]) -> tuple[str, ...]:
    """Canonical class table: known emotions in (neutral, anger, happy) order, others sorted after."""
    present = set(labels)
    known = [e for e in EMOTIONS if e in present]
    return tuple(known + sorted(present - set(EMOTIONS)))


@dataclass(frozen=True, eq=False)
class Dataset:
    """Feature rows with integer class ids indexing ``classes``."""

    features: np.ndarray
    labels: np.ndarray
    classes: tuple[str, ...]

    def __post_init__(self) -> None:
        x = np.asarray(self.features, dtype=np.float64)
        if x.ndim == 1:
            x = x.reshape(-1, 1)
        y = np.asarray(self.labels, dtype=np.int64).reshape(-1)
        if x.shape[0] != y.shape[0]:
            raise DataError(f"{x.shape[0]} feature rows but {y.shape[0]} labels")
        if y.size and (y.min() < 0 or y.max() >= len(self.classes)):
            raise DataError("label id outside the class table")
        object.__setattr__(self, "features", x)
        object.__setattr__(self, "labels", y)
        object.__setattr__(self, "classes", tuple(self.classes))

    @classmethod
    def from_labels(cls, features, labels: Sequence[str], classes: Sequence[str] | None = None) -> Dataset:
        classes = tuple(classes) if classes is not None else class_order(labels)
        index = {c: i for i, c in enumerate(classes)}
        try:
            y = np.array([index[label] for label in labels], dtype=np.int64)
        except KeyError as exc:
            raise DataError(f"label {exc.args[0]!r} not in class table {classes}") from None
        return cls(features, y, classes)

    @property
    def n_classes(self) -> int:
        return len(self.classes)

    @property
    def n_features(self) -> int:
        return int(self.features.shape[1])

    def __len__(self) -> int:
        return int(self.labels.shape[0])

    def subset(self, index) -> Dataset:
        return Dataset(self.features[index], self.labels[index], self.classes)

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.n_classes)


def majority_vote(votes: np.ndarray) -> np.ndarray:
    """Row-wise argmax of a (rows, classes) tally; ties go to the lowest class id."""
    return np.argmax(votes, axis=1).astype(np.int64)
