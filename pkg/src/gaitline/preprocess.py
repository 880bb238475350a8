"""Moving-average smoothing and fixed-size half-overlapping slicing."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from gaitline.errors import ConfigError, DataError
from gaitline.ingest import PureStream


@dataclass(frozen=True)
class FilterConfig:
    w: int = 3

    def __post_init__(self) -> None:
        if int(self.w) != self.w or self.w < 1:
            raise ConfigError(f"filter window w must be a positive integer, got {self.w!r}")


@dataclass(frozen=True)
class SliceConfig:
    window_len: int = 128
    overlap: float = 0.5

    def __post_init__(self) -> None:
        if int(self.window_len) != self.window_len or self.window_len < 1:
            raise ConfigError(f"window_len must be a positive integer, got {self.window_len!r}")
        if not 0.0 <= self.overlap < 1.0:
            raise ConfigError(f"overlap must lie in [0, 1), got {self.overlap!r}")
        step = self.window_len * (1.0 - self.overlap)
        if step < 1 or abs(step - round(step)) > 1e-9:
            raise ConfigError(
                f"window_len * (1 - overlap) = {step:g} is not a positive integer step"
            )

    @property
    def step(self) -> int:
        return int(round(self.window_len * (1.0 - self.overlap)))


@dataclass(frozen=True, eq=False)
class WindowSlice:
    """A (3, window_len) block of x/y/z acceleration; the unit of classification."""

    data: np.ndarray
    label: str
    subject_id: str
    joint: str
    start_ms: int = 0

    def __post_init__(self) -> None:
        data = np.array(self.data, dtype=np.float64)
        if data.ndim != 2 or data.shape[0] != 3:
            raise DataError(f"slice data must have shape (3, n), got {data.shape}")
        if not np.all(np.isfinite(data)):
            raise DataError("slice contains non-finite values")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)


def moving_average(series, w: int) -> np.ndarray:
    """Sliding mean ``out[i] = (1/w) * sum(series[i:i+w])``, no edge padding.

    The result has ``len(series) - w + 1`` entries. Accepts a 1-D sequence
    or a 2-D array filtered independently along axis 0.
    """
    x = np.asarray(series, dtype=np.float64)
    n = x.shape[0]
    if int(w) != w or w < 1:
        raise DataError(f"filter window must be >= 1, got {w!r}")
    if w > n:
        raise DataError(f"filter window {w} exceeds series length {n}")
    m = n - w + 1
    # accumulate left to right so each output is the plain sum in index order
    acc = np.zeros((m,) + x.shape[1:])
    for j in range(w):
        acc += x[j : j + m]
    return acc / w


def smooth_stream(stream: PureStream, cfg: FilterConfig) -> PureStream:
    if len(stream) < cfg.w:
        raise DataError(f"stream of {len(stream)} samples is shorter than filter window {cfg.w}")
    values = moving_average(stream.values, cfg.w)
    return PureStream(stream.joint, stream.timestamps[: values.shape[0]], values, stream.subject_id)


def slice_offsets(n: int, cfg: SliceConfig) -> range:
    if n < cfg.window_len:
        return range(0)
    return range(0, n - cfg.window_len + 1, cfg.step)


def slice_windows(
    stream: PureStream,
    cfg: SliceConfig,
    label: str,
    subject_id: str,
    joint: str | None = None,
) -> list[WindowSlice]:
    """Cut full windows at offsets 0, step, 2*step, ...; the ragged tail is discarded."""
    joint = joint or stream.joint
    return [
        WindowSlice(
            stream.values[off : off + cfg.window_len].T,
            label,
            subject_id,
            joint,
            int(stream.timestamps[off]),
        )
        for off in slice_offsets(len(stream), cfg)
    ]
