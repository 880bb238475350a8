"""Principal component analysis on normalized feature matrices."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from gaitline import serialize
from gaitline.errors import ConfigError, DataError, NumericError
from gaitline.features import FeatureMatrix

NEGATIVE_EIGEN_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class PcaModel:
    """Fitted PCA basis.

    ``components`` has shape (k, d) with orthonormal rows ordered by
    decreasing ``eigenvalues``; ``explained_variance_ratio`` is relative to
    the total variance of all d directions.
    """

    mean: np.ndarray
    components: np.ndarray
    eigenvalues: np.ndarray
    explained_variance_ratio: np.ndarray

    @property
    def n_components(self) -> int:
        return int(self.components.shape[0])

    @property
    def n_features(self) -> int:
        return int(self.components.shape[1])

    def transform(self, values) -> np.ndarray:
        return pca_transform(self, values)

    def inverse_transform(self, coords) -> np.ndarray:
        return np.asarray(coords, dtype=np.float64) @ self.components + self.mean

    def to_dict(self) -> dict:
        return {
            "mean": self.mean.tolist(),
            "components": self.components.tolist(),
            "eigenvalues": self.eigenvalues.tolist(),
            "explained_variance_ratio": self.explained_variance_ratio.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> PcaModel:
        comps = np.array(d["components"], dtype=np.float64).reshape(len(d["eigenvalues"]), len(d["mean"]))
        return cls(
            np.array(d["mean"], dtype=np.float64),
            comps,
            np.array(d["eigenvalues"], dtype=np.float64),
            np.array(d["explained_variance_ratio"], dtype=np.float64),
        )

    def dumps(self) -> str:
        return serialize.dumps("pca", self.to_dict())

    @classmethod
    def loads(cls, text: str) -> PcaModel:
        return cls.from_dict(serialize.loads(text, "pca"))


def _as_array(matrix) -> np.ndarray:
    values = matrix.values if isinstance(matrix, FeatureMatrix) else matrix
    return np.asarray(values, dtype=np.float64)


def symmetric_eigen(cov: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigenpairs of a covariance matrix, eigenvalues descending.

    Columns of the returned vector matrix are flipped so that each one's
    largest-magnitude entry is positive. Small negative eigenvalues from
    rounding are clipped to zero; clearly negative ones raise.
    """
    vals, vecs = np.linalg.eigh(cov)
    order = np.argsort(vals, kind="stable")[::-1]
    vals = vals[order]
    vecs = vecs[:, order]
    scale = max(1.0, float(vals[0])) if vals.size else 1.0
    if vals.size and vals[-1] < -NEGATIVE_EIGEN_TOL * scale:
        raise NumericError(f"covariance has a negative eigenvalue {vals[-1]:.3e}")
    vals = np.where(vals < 0.0, 0.0, vals)
    pivot = np.argmax(np.abs(vecs), axis=0)
    signs = np.sign(vecs[pivot, np.arange(vecs.shape[1])])
    signs[signs == 0] = 1.0
    return vals, vecs * signs


def pca_fit(matrix, variance_threshold: float = 0.95, n_components: int | None = None) -> PcaModel:
    """Fit PCA and keep the fewest components reaching ``variance_threshold``.

    ``n_components`` overrides the threshold rule. The covariance uses the
    unbiased (n - 1) normalization.
    """
    x = _as_array(matrix)
    if x.ndim != 2 or x.shape[0] < 2:
        raise DataError("PCA needs at least 2 rows")
    if not np.all(np.isfinite(x)):
        raise DataError("PCA input contains non-finite values")
    if not 0.0 < variance_threshold <= 1.0:
        raise ConfigError(f"variance threshold must lie in (0, 1], got {variance_threshold}")
    n, d = x.shape
    mean = x.mean(axis=0)
    centered = x - mean
    cov = centered.T @ centered / (n - 1)
    vals, vecs = symmetric_eigen(cov)

    total = vals.sum()
    if total <= 0.0:
        warnings.warn("all rows identical: covariance is zero, keeping one component", stacklevel=2)
        ratios = np.zeros_like(vals)
        k = 1
    else:
        ratios = vals / total
        k = int(np.searchsorted(np.cumsum(ratios), variance_threshold - 1e-12) + 1)
        k = min(k, d)
    if n_components is not None:
        if not 1 <= n_components <= d:
            raise ConfigError(f"n_components must lie in [1, {d}]")
        k = n_components
    return PcaModel(mean, np.ascontiguousarray(vecs[:, :k].T), vals[:k].copy(), ratios[:k].copy())


def pca_transform(model: PcaModel, matrix) -> np.ndarray:
    x = _as_array(matrix)
    if x.shape[-1] != model.n_features:
        raise DataError(f"expected {model.n_features} columns, got {x.shape[-1]}")
    return (x - model.mean) @ model.components.T
