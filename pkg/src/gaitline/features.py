"""Per-slice feature extraction and z-score normalization.

Layout (114 columns by default), per axis x, then y, then z::

    mean, std, kurtosis, skewness, fft_01 .. fft_31, psd_mean, psd_std

followed by ``corr_xy, corr_xz, corr_yz``. The FFT DC bin duplicates the
mean and is left out unless ``include_dc`` is set, in which case ``fft_00``
precedes ``fft_01`` and the vector has 117 entries.

Conventions: population (divide-by-N) moments, Pearson (non-excess)
kurtosis, zero-variance axes give skewness, kurtosis and correlation 0.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from gaitline.errors import DataError, ParseError
from gaitline.preprocess import WindowSlice

AXES = ("x", "y", "z")
N_FFT_BINS = 32
DEFAULT_FS = 5.0
LAYOUT_VERSION = "gaitline-features/1"
KURTOSIS_CONVENTION = "pearson"
META_COLUMNS = ("label", "subject_id", "joint")

# relative threshold below which a variance counts as zero
_DEGENERATE = 1e-24


def axis_moments(axis) -> tuple[float, float, float, float]:
    """Return ``(mean, std, kurtosis, skewness)`` of one axis."""
    a = np.asarray(axis, dtype=np.float64)
    mean = a.mean()
    d = a - mean
    m2 = np.mean(d * d)
    if m2 <= _DEGENERATE * max(1.0, mean * mean):
        return float(mean), 0.0, 0.0, 0.0
    m3 = np.mean(d**3)
    m4 = np.mean(d**4)
    return float(mean), float(np.sqrt(m2)), float(m4 / m2**2), float(m3 / m2**1.5)


def _check_len(axis, n: int = 128) -> np.ndarray:
    a = np.asarray(axis, dtype=np.float64)
    if a.ndim != 1 or a.shape[0] != n:
        raise DataError(f"expected {n} samples, got shape {a.shape}")
    return a


def fft_amplitudes(axis, n_bins: int = N_FFT_BINS) -> np.ndarray:
    """Single-sided amplitude spectrum of bins ``0 .. n_bins-1``.

    Bin 0 is the signed DC term ``Re(X_0)/N``, i.e. the mean (a magnitude
    would lose the sign of negative means). Other bins are scaled by 2/N so
    a cosine of amplitude A at an exact bin reads A.
    """
    a = _check_len(axis)
    n = a.shape[0]
    coef = np.fft.rfft(a)[:n_bins]
    amp = 2.0 * np.abs(coef) / n
    amp[0] = coef[0].real / n
    return amp


def periodogram(axis, fs: float = DEFAULT_FS) -> np.ndarray:
    """Raw periodogram ``|X_k|^2 / (N fs)`` for ``k = 0 .. N/2``."""
    a = _check_len(axis)
    return np.abs(np.fft.rfft(a)) ** 2 / (a.shape[0] * fs)


def psd_stats(axis, fs: float = DEFAULT_FS) -> tuple[float, float]:
    p = periodogram(axis, fs)
    return float(p.mean()), float(p.std())


def _pearson(a: np.ndarray, b: np.ndarray) -> float:
    da = a - a.mean()
    db = b - b.mean()
    va = np.dot(da, da)
    vb = np.dot(db, db)
    n = a.shape[0]
    if va <= _DEGENERATE * n * max(1.0, a.mean() ** 2) or vb <= _DEGENERATE * n * max(1.0, b.mean() ** 2):
        return 0.0
    r = np.dot(da, db) / np.sqrt(va * vb)
    return float(min(1.0, max(-1.0, r)))


def axis_correlations(slc: WindowSlice | np.ndarray) -> tuple[float, float, float]:
    data = slc.data if isinstance(slc, WindowSlice) else np.asarray(slc, dtype=np.float64)
    x, y, z = data
    return _pearson(x, y), _pearson(x, z), _pearson(y, z)


def feature_names(include_dc: bool = False) -> list[str]:
    first_bin = 0 if include_dc else 1
    names = []
    for a in AXES:
        names += [f"{a}_mean", f"{a}_std", f"{a}_kurtosis", f"{a}_skewness"]
        names += [f"{a}_fft_{k:02d}" for k in range(first_bin, N_FFT_BINS)]
        names += [f"{a}_psd_mean", f"{a}_psd_std"]
    return names + ["corr_xy", "corr_xz", "corr_yz"]


def extract_vector(data: np.ndarray, fs: float = DEFAULT_FS, include_dc: bool = False) -> np.ndarray:
    """Feature values for a raw (3, 128) block; see the module docstring for layout."""
    data = np.asarray(data, dtype=np.float64)
    if data.shape != (3, 128):
        raise DataError(f"expected a (3, 128) slice, got {data.shape}")
    first_bin = 0 if include_dc else 1
    parts: list[np.ndarray] = []
    for axis in data:
        parts.append(np.array(axis_moments(axis)))
        parts.append(fft_amplitudes(axis)[first_bin:])
        parts.append(np.array(psd_stats(axis, fs)))
    parts.append(np.array(axis_correlations(data)))
    return np.concatenate(parts)


@dataclass(frozen=True, eq=False)
class FeatureVector:
    values: np.ndarray
    label: str
    subject_id: str
    joint: str

    def __len__(self) -> int:
        return int(self.values.shape[0])


def extract_features(slc: WindowSlice, fs: float = DEFAULT_FS, include_dc: bool = False) -> FeatureVector:
    values = extract_vector(slc.data, fs, include_dc)
    if not np.all(np.isfinite(values)):
        raise DataError(f"non-finite feature for slice of {slc.subject_id}/{slc.label}")
    return FeatureVector(values, slc.label, slc.subject_id, slc.joint)


@dataclass(frozen=True, eq=False)
class ColumnStats:
    """Per-column mean and population std captured by :func:`zscore_fit`."""

    mean: np.ndarray
    std: np.ndarray

    @property
    def degenerate(self) -> np.ndarray:
        return self.std <= 1e-12 * np.maximum(1.0, np.abs(self.mean))

    def apply(self, values) -> np.ndarray:
        x = np.asarray(values, dtype=np.float64)
        if x.shape[-1] != self.mean.shape[0]:
            raise DataError(f"expected {self.mean.shape[0]} columns, got {x.shape[-1]}")
        scale = np.where(self.degenerate, 1.0, self.std)
        z = (x - self.mean) / scale
        return np.where(self.degenerate, 0.0, z)

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "std": self.std.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> ColumnStats:
        return cls(np.array(d["mean"], dtype=np.float64), np.array(d["std"], dtype=np.float64))


def zscore_fit(values) -> ColumnStats:
    x = np.asarray(values, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2:
        raise DataError("z-score normalization needs at least 2 rows")
    return ColumnStats(x.mean(axis=0), x.std(axis=0))


@dataclass(frozen=True, eq=False)
class FeatureMatrix:
    """Stacked feature rows with their labels and provenance."""

    values: np.ndarray
    labels: tuple[str, ...]
    subject_ids: tuple[str, ...]
    joints: tuple[str, ...]
    names: tuple[str, ...] = field(default_factory=lambda: tuple(feature_names()))
    column_stats: ColumnStats | None = None

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=np.float64)
        if values.ndim != 2:
            values = values.reshape(len(self.labels), -1)
        n, d = values.shape
        if not (len(self.labels) == len(self.subject_ids) == len(self.joints) == n):
            raise DataError("row metadata does not match the value matrix")
        if len(self.names) != d:
            raise DataError(f"{len(self.names)} column names for {d} columns")
        object.__setattr__(self, "values", values)
        for name in ("labels", "subject_ids", "joints", "names"):
            object.__setattr__(self, name, tuple(getattr(self, name)))

    @classmethod
    def from_vectors(cls, rows: Sequence[FeatureVector], include_dc: bool = False) -> FeatureMatrix:
        names = feature_names(include_dc)
        values = np.array([r.values for r in rows], dtype=np.float64).reshape(len(rows), len(names))
        return cls(
            values,
            tuple(r.label for r in rows),
            tuple(r.subject_id for r in rows),
            tuple(r.joint for r in rows),
            tuple(names),
        )

    def __len__(self) -> int:
        return int(self.values.shape[0])

    def subset(self, index) -> FeatureMatrix:
        index = np.asarray(index)
        pick = lambda seq: tuple(np.asarray(seq, dtype=object)[index])
        return FeatureMatrix(
            self.values[index],
            pick(self.labels),
            pick(self.subject_ids),
            pick(self.joints),
            self.names,
            self.column_stats,
        )


def zscore_fit_transform(matrix: FeatureMatrix) -> FeatureMatrix:
    """Standardize every column; constant columns become zeros."""
    stats = zscore_fit(matrix.values)
    return replace(matrix, values=stats.apply(matrix.values), column_stats=stats)


def write_feature_csv(matrix: FeatureMatrix, path: str | Path | None = None) -> str:
    """Serialize a matrix; returns the text and writes it when ``path`` is given."""
    buf = io.StringIO()
    buf.write(
        f"# layout={LAYOUT_VERSION} columns={len(matrix.names)} "
        f"moments=population kurtosis={KURTOSIS_CONVENTION}\n"
    )
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(list(matrix.names) + list(META_COLUMNS))
    for row, label, subject, joint in zip(matrix.values, matrix.labels, matrix.subject_ids, matrix.joints):
        writer.writerow([repr(float(v)) for v in row] + [label, subject, joint])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


def read_feature_csv(source: str | Path) -> FeatureMatrix:
    text = Path(source).read_text(encoding="utf-8") if isinstance(source, Path) else source
    lines = text.splitlines()
    if not lines or not lines[0].startswith("# layout="):
        raise ParseError("missing layout comment", line=1)
    version = lines[0].split()[1].split("=", 1)[1]
    if version != LAYOUT_VERSION:
        raise ParseError(f"unsupported feature layout {version!r}", line=1)
    reader = csv.reader(lines[1:])
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError("missing header", line=2) from None
    if tuple(header[-3:]) != META_COLUMNS:
        raise ParseError("header must end with label,subject_id,joint", line=2)
    names = header[:-3]
    values, labels, subjects, joints = [], [], [], []
    for lineno, row in enumerate(reader, start=3):
        if not row:
            continue
        if len(row) != len(header):
            raise ParseError(f"expected {len(header)} fields, found {len(row)}", line=lineno)
        try:
            values.append([float(v) for v in row[:-3]])
        except ValueError as exc:
            raise ParseError(str(exc), line=lineno) from None
        labels.append(row[-3])
        subjects.append(row[-2])
        joints.append(row[-1])
    return FeatureMatrix(
        np.array(values, dtype=np.float64).reshape(len(values), len(names)),
        tuple(labels),
        tuple(subjects),
        tuple(joints),
        tuple(names),
    )
