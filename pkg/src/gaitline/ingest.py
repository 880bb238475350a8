"""Sensor log ingestion: parsing, gravity removal and session cutting.

File conventions
----------------
Sensor logs are CSV with the header ``timestamp_ms,x,y,z``. Each body joint
of each subject is recorded as a pair of files::

    <subject>_<joint>_la.csv    linear acceleration including gravity
    <subject>_<joint>_gra.csv   gravity vector

Session markers live in ``markers.csv`` with the header
``subject_id,label,start_ms,end_ms``.
"""

from __future__ import annotations

import csv
import io
import math
import re
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from gaitline.errors import DataError, ParseError

EMOTIONS = ("neutral", "anger", "happy")
JOINTS = ("wrist", "ankle")
KINDS = ("linear_with_gravity", "gravity")

STREAM_HEADER = ("timestamp_ms", "x", "y", "z")
MARKER_HEADER = ("subject_id", "label", "start_ms", "end_ms")
MARKER_FILE = "markers.csv"
DEFAULT_TOL_MS = 100

_PAIR_RE = re.compile(r"^(?P<subject>.+)_(?P<joint>wrist|ankle)_(?P<kind>la|gra)\.csv$")
_KIND_SUFFIX = {"la": "linear_with_gravity", "gra": "gravity"}


@dataclass(frozen=True)
class SensorSample:
    timestamp_ms: int
    x: float
    y: float
    z: float


def _freeze(timestamps, values) -> tuple[np.ndarray, np.ndarray]:
    t = np.array(timestamps, dtype=np.int64).reshape(-1)
    v = np.array(values, dtype=np.float64).reshape(-1, 3) if len(t) else np.zeros((0, 3))
    if v.shape[0] != t.shape[0]:
        raise DataError(f"{t.shape[0]} timestamps but {v.shape[0]} samples")
    if t.size > 1 and np.any(np.diff(t) <= 0):
        bad = int(np.argmax(np.diff(t) <= 0)) + 1
        raise DataError(f"timestamps not strictly increasing at sample {bad}")
    if not np.all(np.isfinite(v)):
        raise DataError("non-finite acceleration value")
    t.setflags(write=False)
    v.setflags(write=False)
    return t, v


class _Samples:
    """Shared accessors for the two stream types."""

    timestamps: np.ndarray
    values: np.ndarray

    def __len__(self) -> int:
        return int(self.timestamps.shape[0])

    @property
    def samples(self) -> tuple[SensorSample, ...]:
        return tuple(
            SensorSample(int(t), float(x), float(y), float(z))
            for t, (x, y, z) in zip(self.timestamps, self.values)
        )


@dataclass(frozen=True, eq=False)
class SensorStream(_Samples):
    """Raw 3-axis stream of one sensor kind worn on one joint.

    ``values`` is an (n, 3) array of x/y/z in m/s^2; ``timestamps`` holds
    integer milliseconds and is strictly increasing.
    """

    kind: str
    joint: str
    timestamps: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise DataError(f"unknown sensor kind {self.kind!r}")
        if self.joint not in JOINTS:
            raise DataError(f"unknown joint {self.joint!r}")
        t, v = _freeze(self.timestamps, self.values)
        object.__setattr__(self, "timestamps", t)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_samples(cls, kind: str, joint: str, samples: Iterable[SensorSample]) -> SensorStream:
        samples = list(samples)
        return cls(
            kind,
            joint,
            [s.timestamp_ms for s in samples],
            [(s.x, s.y, s.z) for s in samples],
        )


@dataclass(frozen=True, eq=False)
class PureStream(_Samples):
    """Gravity-free acceleration of one joint."""

    joint: str
    timestamps: np.ndarray
    values: np.ndarray
    subject_id: str | None = None

    def __post_init__(self) -> None:
        if self.joint not in JOINTS:
            raise DataError(f"unknown joint {self.joint!r}")
        t, v = _freeze(self.timestamps, self.values)
        object.__setattr__(self, "timestamps", t)
        object.__setattr__(self, "values", v)

    def take(self, index) -> PureStream:
        return PureStream(self.joint, self.timestamps[index], self.values[index], self.subject_id)


@dataclass(frozen=True)
class SessionMarker:
    subject_id: str
    label: str
    start_ms: int
    end_ms: int

    def __post_init__(self) -> None:
        if self.label not in EMOTIONS:
            raise DataError(f"unknown emotion label {self.label!r}")
        if not self.start_ms < self.end_ms:
            raise DataError(f"marker for {self.subject_id}: start_ms must precede end_ms")


class Subtraction(NamedTuple):
    stream: PureStream
    dropped: int


def _check_header(reader, expected: Sequence[str], what: str) -> None:
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError(f"empty {what} file", line=1) from None
    if tuple(h.strip() for h in header) != tuple(expected):
        raise ParseError(f"expected header {','.join(expected)!r}, got {','.join(header)!r}", line=1)


def parse_stream(text: str, kind: str, joint: str) -> SensorStream:
    """Parse a sensor log.

    Blank lines are ignored. Raises :class:`ParseError` naming the offending
    line for malformed rows, non-finite values or timestamp regressions.
    """
    reader = csv.reader(io.StringIO(text))
    _check_header(reader, STREAM_HEADER, "sensor log")
    timestamps: list[int] = []
    values: list[tuple[float, float, float]] = []
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != 4:
            raise ParseError(f"expected 4 fields, found {len(row)}", line=lineno)
        try:
            t = int(row[0])
            xyz = tuple(float(c) for c in row[1:])
        except ValueError as exc:
            raise ParseError(f"malformed value ({exc})", line=lineno) from None
        if not all(math.isfinite(c) for c in xyz):
            raise ParseError("non-finite acceleration value", line=lineno)
        if timestamps and t <= timestamps[-1]:
            raise ParseError(f"timestamp {t} does not increase past {timestamps[-1]}", line=lineno)
        timestamps.append(t)
        values.append(xyz)
    return SensorStream(kind, joint, timestamps, values)


def parse_markers(text: str) -> list[SessionMarker]:
    reader = csv.reader(io.StringIO(text))
    _check_header(reader, MARKER_HEADER, "marker")
    markers = []
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != 4:
            raise ParseError(f"expected 4 fields, found {len(row)}", line=lineno)
        subject, label, start, end = (c.strip() for c in row)
        try:
            markers.append(SessionMarker(subject, label, int(start), int(end)))
        except ValueError as exc:
            raise ParseError(str(exc), line=lineno) from None
    return markers


def format_stream(timestamps: Sequence[int], values: np.ndarray) -> str:
    """Render samples in the sensor log format; floats round-trip exactly."""
    lines = [",".join(STREAM_HEADER)]
    for t, (x, y, z) in zip(timestamps, np.asarray(values, dtype=float)):
        lines.append(f"{int(t)},{float(x)!r},{float(y)!r},{float(z)!r}")
    return "\n".join(lines) + "\n"


def format_markers(markers: Iterable[SessionMarker]) -> str:
    lines = [",".join(MARKER_HEADER)]
    lines += [f"{m.subject_id},{m.label},{m.start_ms},{m.end_ms}" for m in markers]
    return "\n".join(lines) + "\n"


def subtract_gravity(la: SensorStream, gra: SensorStream, tol_ms: int = DEFAULT_TOL_MS) -> Subtraction:
    """Remove gravity from a linear-acceleration stream.

    Every ``la`` sample is paired with the nearest ``gra`` sample in time
    (the earlier one on a tie). Pairs further apart than ``tol_ms`` are
    dropped; the returned :class:`Subtraction` carries the drop count.
    """
    if la.kind != "linear_with_gravity" or gra.kind != "gravity":
        raise DataError(f"expected (linear_with_gravity, gravity) streams, got ({la.kind}, {gra.kind})")
    if la.joint != gra.joint:
        raise DataError(f"joint mismatch: {la.joint} vs {gra.joint}")
    if len(la) == 0 or len(gra) == 0:
        raise DataError("no samples matched within tolerance")

    t_la = la.timestamps
    t_gra = gra.timestamps
    right = np.searchsorted(t_gra, t_la, side="left")
    left = right - 1
    right_c = np.minimum(right, len(t_gra) - 1)
    left_c = np.maximum(left, 0)
    d_left = np.where(left >= 0, t_la - t_gra[left_c], np.iinfo(np.int64).max)
    d_right = np.where(right < len(t_gra), t_gra[right_c] - t_la, np.iinfo(np.int64).max)
    use_left = d_left <= d_right
    nearest = np.where(use_left, left_c, right_c)
    distance = np.where(use_left, d_left, d_right)
    matched = distance <= tol_ms

    n_matched = int(matched.sum())
    if n_matched == 0:
        raise DataError("no samples matched within tolerance")
    pure = PureStream(
        la.joint,
        t_la[matched],
        la.values[matched] - gra.values[nearest[matched]],
    )
    return Subtraction(pure, len(la) - n_matched)


def check_markers(markers: Sequence[SessionMarker]) -> None:
    """Raise if two markers of the same subject overlap."""
    by_subject: dict[str, list[SessionMarker]] = {}
    for m in markers:
        by_subject.setdefault(m.subject_id, []).append(m)
    for subject, ms in by_subject.items():
        ms = sorted(ms, key=lambda m: (m.start_ms, m.end_ms))
        for prev, cur in zip(ms, ms[1:]):
            if cur.start_ms < prev.end_ms:
                raise DataError(
                    f"overlapping markers for subject {subject}: "
                    f"[{prev.start_ms}, {prev.end_ms}) and [{cur.start_ms}, {cur.end_ms})"
                )


def cut_sessions(stream: PureStream, markers: Sequence[SessionMarker]) -> list[tuple[SessionMarker, PureStream]]:
    """Cut ``stream`` into the half-open intervals ``[start_ms, end_ms)``.

    Markers that select no samples are skipped with a warning.
    """
    check_markers(markers)
    out = []
    for m in markers:
        lo = np.searchsorted(stream.timestamps, m.start_ms, side="left")
        hi = np.searchsorted(stream.timestamps, m.end_ms, side="left")
        if hi <= lo:
            warnings.warn(
                f"marker {m.subject_id}/{m.label} [{m.start_ms}, {m.end_ms}) contains no samples",
                stacklevel=2,
            )
            continue
        seg = stream.take(slice(lo, hi))
        if seg.subject_id is None:
            seg = PureStream(seg.joint, seg.timestamps, seg.values, m.subject_id)
        out.append((m, seg))
    return out


@dataclass
class IngestReport:
    """Per-recording bookkeeping from :func:`load_directory`."""

    recordings: list[dict] = field(default_factory=list)

    @property
    def dropped(self) -> int:
        return sum(r["dropped"] for r in self.recordings)

    def to_dict(self) -> dict:
        return {"dropped_total": self.dropped, "recordings": self.recordings}


@dataclass(frozen=True)
class Segment:
    marker: SessionMarker
    stream: PureStream

    @property
    def label(self) -> str:
        return self.marker.label

    @property
    def subject_id(self) -> str:
        return self.marker.subject_id

    @property
    def joint(self) -> str:
        return self.stream.joint


def discover_pairs(directory: Path) -> list[tuple[str, str, Path, Path]]:
    """Find ``(subject, joint, la_path, gra_path)`` tuples, sorted."""
    found: dict[tuple[str, str], dict[str, Path]] = {}
    for path in sorted(Path(directory).iterdir()):
        match = _PAIR_RE.match(path.name)
        if match:
            key = (match["subject"], match["joint"])
            found.setdefault(key, {})[match["kind"]] = path
    pairs = []
    for (subject, joint), files in sorted(found.items()):
        missing = {"la", "gra"} - files.keys()
        if missing:
            raise DataError(f"{subject}_{joint}: missing {'/'.join(sorted(missing))} file")
        pairs.append((subject, joint, files["la"], files["gra"]))
    return pairs


def _read_stream(path: Path, kind: str, joint: str) -> SensorStream:
    try:
        return parse_stream(path.read_text(encoding="utf-8"), kind, joint)
    except ParseError as exc:
        raise ParseError(f"{path.name}: {exc}") from None


def load_directory(
    directory: str | Path,
    joint: str | None = None,
    tol_ms: int = DEFAULT_TOL_MS,
) -> tuple[list[Segment], IngestReport]:
    """Ingest every recording pair in ``directory`` and cut it by the marker file.

    Only markers whose ``subject_id`` matches the recording's subject are
    applied to it. Wrist and ankle recordings are processed independently.
    """
    directory = Path(directory)
    marker_path = directory / MARKER_FILE
    if not marker_path.exists():
        raise DataError(f"{marker_path} not found")
    markers = parse_markers(marker_path.read_text(encoding="utf-8"))
    check_markers(markers)

    pairs = discover_pairs(directory)
    if joint is not None:
        pairs = [p for p in pairs if p[1] == joint]
    if not pairs:
        raise DataError(f"no sensor recordings found in {directory}" + (f" for joint {joint}" if joint else ""))

    report = IngestReport()
    segments: list[Segment] = []
    for subject, jnt, la_path, gra_path in pairs:
        la = _read_stream(la_path, "linear_with_gravity", jnt)
        gra = _read_stream(gra_path, "gravity", jnt)
        pure, dropped = subtract_gravity(la, gra, tol_ms)
        pure = PureStream(pure.joint, pure.timestamps, pure.values, subject)
        mine = [m for m in markers if m.subject_id == subject]
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            cut = cut_sessions(pure, mine)
        for w in caught:
            warnings.warn(f"{subject}_{jnt}: {w.message}", stacklevel=2)
        segments.extend(Segment(m, s) for m, s in cut)
        report.recordings.append(
            {
                "subject_id": subject,
                "joint": jnt,
                "la_samples": len(la),
                "matched": len(pure),
                "dropped": dropped,
                "sessions": len(cut),
            }
        )
    return segments, report
