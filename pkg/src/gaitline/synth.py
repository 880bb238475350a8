"""Deterministic synthetic gait recordings with class-dependent harmonics.

Each axis is a sum of cosines at integer multiples of a stride frequency.
The stride phase drifts as a random walk (``phase_jitter`` radians of
standard deviation per stride) and white Gaussian noise is added on top.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from gaitline.errors import DataError
from gaitline.ingest import (
    EMOTIONS,
    JOINTS,
    MARKER_FILE,
    PureStream,
    SessionMarker,
    format_markers,
    format_stream,
)

GRAVITY = 9.80665
DEFAULT_FS = 5.0
BASE_EPOCH_MS = 1_400_000_000_000


@dataclass(frozen=True)
class GaitProfile:
    """Generative parameters of one emotion class.

    ``harmonic_amps`` maps axis name (``x``, ``y``, ``z``) to
    ``(harmonic index, amplitude in m/s^2)`` pairs, optionally with a third
    element giving the harmonic's phase in radians (default 0). Phases are
    part of the waveform shape and stay fixed across sessions; each session
    only shifts the whole stride in time.
    """

    label: str
    stride_hz: float
    harmonic_amps: dict = field(default_factory=dict)
    noise_std: float = 0.3
    phase_jitter: float = 0.3

    def __post_init__(self) -> None:
        if self.label not in EMOTIONS:
            raise DataError(f"unknown emotion label {self.label!r}")
        if self.stride_hz <= 0 or self.noise_std < 0 or self.phase_jitter < 0:
            raise DataError("stride_hz must be positive; noise_std and phase_jitter non-negative")
        amps = {}
        for axis, terms in self.harmonic_amps.items():
            if axis not in ("x", "y", "z"):
                raise DataError(f"unknown axis {axis!r}")
            terms = tuple((int(t[0]), float(t[1]), float(t[2]) if len(t) > 2 else 0.0) for t in terms)
            if any(h < 1 or a < 0 for h, a, _ in terms):
                raise DataError("harmonic indices must be >= 1 and amplitudes >= 0")
            amps[axis] = terms
        object.__setattr__(self, "harmonic_amps", amps)

    @property
    def max_harmonic(self) -> int:
        return max((t[0] for terms in self.harmonic_amps.values() for t in terms), default=0)

    def check_nyquist(self, fs: float) -> None:
        if self.stride_hz * self.max_harmonic >= fs / 2:
            raise DataError(
                f"profile {self.label}: harmonic {self.max_harmonic} of {self.stride_hz} Hz "
                f"reaches the Nyquist limit {fs / 2} Hz"
            )

    def signature(self) -> set[tuple[str, int]]:
        return {(axis, h) for axis, terms in self.harmonic_amps.items() for h, a, _ in terms if a > 0}

    def to_dict(self) -> dict:
        d = asdict(self)
        d["harmonic_amps"] = {k: [list(t) for t in v] for k, v in self.harmonic_amps.items()}
        return d


def _signal(profile: GaitProfile, n: int, fs: float, rng: np.random.Generator) -> np.ndarray:
    t = np.arange(n) / fs
    steps = rng.normal(0.0, profile.phase_jitter * np.sqrt(profile.stride_hz / fs), size=n)
    steps[0] = 0.0
    start_phase = rng.uniform(0.0, 2 * np.pi)
    stride_phase = start_phase + 2 * np.pi * profile.stride_hz * t + np.cumsum(steps)
    out = np.zeros((n, 3))
    for col, axis in enumerate("xyz"):
        for h, amp, phase in profile.harmonic_amps.get(axis, ()):
            out[:, col] += amp * np.cos(h * stride_phase + phase)
    if profile.noise_std > 0:
        out += rng.normal(0.0, profile.noise_std, size=out.shape)
    return out


def generate_session(
    profile: GaitProfile,
    duration_s: float,
    fs: float = DEFAULT_FS,
    seed: int | Sequence[int] = 0,
    subject_id: str = "s000",
    start_ms: int = 0,
    joint: str = "ankle",
) -> tuple[PureStream, SessionMarker]:
    """One labeled walking session of ``round(duration_s * fs)`` samples.

    The marker spans ``[start_ms, start_ms + n * period)``.
    """
    profile.check_nyquist(fs)
    n = int(round(duration_s * fs))
    if n < 128:
        raise DataError(f"{duration_s} s at {fs} Hz gives {n} samples, fewer than one 128-sample slice")
    period_ms = 1000.0 / fs
    timestamps = start_ms + np.round(np.arange(n) * period_ms).astype(np.int64)
    rng = np.random.default_rng(seed)
    values = _signal(profile, n, fs, rng)
    marker = SessionMarker(subject_id, profile.label, int(start_ms), int(start_ms + round(n * period_ms)))
    return PureStream(joint, timestamps, values, subject_id), marker


def default_profiles(n_classes: int = 2, noise_std: float = 0.3, phase_jitter: float = 0.3) -> list[GaitProfile]:
    """Profiles with pairwise disjoint (axis, harmonic) signatures.

    Two classes give neutral/anger, three add happy.
    """
    if n_classes not in (2, 3):
        raise DataError("default profiles exist for 2 or 3 classes")
    profiles = [
        GaitProfile("neutral", 0.9, {"x": [(1, 1.0)], "y": [(1, 0.6)], "z": [(2, 0.4)]}, noise_std, phase_jitter),
        GaitProfile("anger", 0.9, {"x": [(2, 1.0)], "y": [(2, 0.6)], "z": [(1, 0.4)]}, noise_std, phase_jitter),
        GaitProfile("happy", 0.7, {"x": [(3, 0.8)], "y": [(3, 0.6)], "z": [(3, 0.4)]}, noise_std, phase_jitter),
    ]
    return profiles[:n_classes]


def null_profiles(n_classes: int = 2, noise_std: float = 0.3, phase_jitter: float = 0.3) -> list[GaitProfile]:
    """Identical generative parameters under different labels."""
    base = default_profiles(2, noise_std, phase_jitter)[0]
    return [
        GaitProfile(label, base.stride_hz, base.harmonic_amps, noise_std, phase_jitter)
        for label in EMOTIONS[:n_classes]
    ]


def _orientation(rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=3)
    v /= np.linalg.norm(v)
    return GRAVITY * v


@dataclass
class Benchmark:
    directory: Path
    markers: list[SessionMarker]
    stream_files: list[Path]


def make_benchmark(
    profiles: Sequence[GaitProfile],
    sessions_per_class: int,
    duration_s: float,
    seed: int,
    out_dir: str | Path,
    joints: Sequence[str] = ("ankle",),
    fs: float = DEFAULT_FS,
    gap_s: float = 10.0,
) -> Benchmark:
    """Write a benchmark directory in the ingest file formats.

    Subject ``i`` walks one session per profile, in profile order, separated
    by ``gap_s`` seconds of unlabeled walking. Each subject and joint gets a
    ``_la``/``_gra`` file pair; gravity is a fixed random orientation per
    session and the gravity sensor ticks a few ms off the accelerometer.
    """
    if len({p.label for p in profiles}) < 2:
        raise DataError("a benchmark needs at least two distinct labels")
    if sessions_per_class < 1:
        raise DataError("sessions_per_class must be >= 1")
    for j in joints:
        if j not in JOINTS:
            raise DataError(f"unknown joint {j!r}")
    for p in profiles:
        p.check_nyquist(fs)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    period_ms = 1000.0 / fs
    n_gap = int(round(gap_s * fs))
    n_session = int(round(duration_s * fs))
    gap_ms = int(round(n_gap * period_ms))
    session_ms = int(round(n_session * period_ms))
    markers: list[SessionMarker] = []
    files: list[Path] = []
    for i in range(sessions_per_class):
        subject = f"s{i:03d}"
        # session start times are shared by every joint of the subject
        starts = [BASE_EPOCH_MS + i * 86_400_000 + gap_ms + k * (gap_ms + session_ms) for k in range(len(profiles))]
        for ji, joint in enumerate(JOINTS):
            if joint not in joints:
                continue
            rng = np.random.default_rng([seed, i, ji, 0])
            t_parts, la_parts, gra_parts = [], [], []
            for pi, (profile, start) in enumerate(zip(profiles, starts)):
                gap_t = start - gap_ms + np.round(np.arange(n_gap) * period_ms).astype(np.int64)
                g = _orientation(rng)
                t_parts.append(gap_t)
                la_parts.append(rng.normal(0.0, profile.noise_std, size=(n_gap, 3)) + g)
                gra_parts.append(np.tile(g, (n_gap, 1)))

                stream, marker = generate_session(profile, duration_s, fs, [seed, i, ji, pi + 1], subject, start, joint)
                g = _orientation(rng)
                t_parts.append(stream.timestamps)
                la_parts.append(stream.values + g)
                gra_parts.append(np.tile(g, (len(stream), 1)))
                if joint == joints[0]:
                    markers.append(marker)
            t = np.concatenate(t_parts)
            jitter = rng.integers(-20, 21, size=t.shape[0])
            la_path = out / f"{subject}_{joint}_la.csv"
            gra_path = out / f"{subject}_{joint}_gra.csv"
            la_path.write_text(format_stream(t, np.concatenate(la_parts)), encoding="utf-8")
            gra_path.write_text(format_stream(t + jitter, np.concatenate(gra_parts)), encoding="utf-8")
            files += [la_path, gra_path]

    (out / MARKER_FILE).write_text(format_markers(markers), encoding="utf-8")
    meta = {
        "seed": seed,
        "fs": fs,
        "duration_s": duration_s,
        "sessions_per_class": sessions_per_class,
        "joints": list(joints),
        "profiles": [p.to_dict() for p in profiles],
    }
    (out / "benchmark.json").write_text(json.dumps(meta, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    return Benchmark(out, markers, files)
