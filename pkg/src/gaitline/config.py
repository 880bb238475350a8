"""Pipeline configuration: defaults, flat ``key=value`` files and overrides."""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Any, Mapping

from gaitline.classify import LEARNERS, LearnerConfig
from gaitline.errors import ConfigError
from gaitline.ingest import JOINTS
from gaitline.preprocess import FilterConfig, SliceConfig


@dataclass(frozen=True)
class PipelineConfig:
    filter_w: int = 3
    window_len: int = 128
    overlap: float = 0.5
    pca_threshold: float = 0.95
    classifier: str = "svm"
    C: float = 1.0
    n_trees: int = 100
    mtry: int | None = None
    folds: int = 10
    seed: int | None = None
    include_dc: bool = False
    group_by_subject: bool = False
    leaky_preproc: bool = False
    joint: str = "ankle"
    fs: float = 5.0
    tol_ms: int = 100

    def __post_init__(self) -> None:
        FilterConfig(self.filter_w)
        SliceConfig(self.window_len, self.overlap)
        if self.window_len != 128:
            # FFT bin and PSD layout is defined for 128-sample slices
            raise ConfigError(f"window_len must be 128, got {self.window_len}")
        if not 0.0 < self.pca_threshold <= 1.0:
            raise ConfigError(f"pca_threshold must lie in (0, 1], got {self.pca_threshold}")
        if self.classifier not in LEARNERS:
            raise ConfigError(f"classifier must be one of {', '.join(LEARNERS)}, got {self.classifier!r}")
        if self.C <= 0:
            raise ConfigError(f"C must be positive, got {self.C}")
        if self.n_trees < 1:
            raise ConfigError(f"n_trees must be >= 1, got {self.n_trees}")
        if self.mtry is not None and self.mtry < 1:
            raise ConfigError(f"mtry must be >= 1, got {self.mtry}")
        if self.folds < 2:
            raise ConfigError(f"folds must be >= 2, got {self.folds}")
        if self.joint not in JOINTS:
            raise ConfigError(f"joint must be one of {', '.join(JOINTS)}, got {self.joint!r}")
        if self.fs <= 0 or self.tol_ms < 0:
            raise ConfigError("fs must be positive and tol_ms non-negative")

    @property
    def filter(self) -> FilterConfig:
        return FilterConfig(self.filter_w)

    @property
    def slicing(self) -> SliceConfig:
        return SliceConfig(self.window_len, self.overlap)

    def learner(self) -> LearnerConfig:
        return LearnerConfig(
            kind=self.classifier,
            C=self.C,
            n_trees=self.n_trees,
            mtry=self.mtry,
            seed=0 if self.seed is None else self.seed,
        )

    def require_seed(self) -> int:
        if self.seed is None:
            raise ConfigError("a seed is required (--seed or seed= in the config file)")
        return self.seed

    def to_dict(self) -> dict:
        return asdict(self)

    def to_text(self) -> str:
        return "".join(f"{k}={_format(v)}\n" for k, v in self.to_dict().items())

    def replace(self, **changes: Any) -> PipelineConfig:
        return from_mapping({**self.to_dict(), **changes})


_FIELDS = {f.name: f for f in fields(PipelineConfig)}
_TYPES = {
    "filter_w": int,
    "window_len": int,
    "overlap": float,
    "pca_threshold": float,
    "classifier": str,
    "C": float,
    "n_trees": int,
    "mtry": "optional_int",
    "folds": int,
    "seed": "optional_int",
    "include_dc": bool,
    "group_by_subject": bool,
    "leaky_preproc": bool,
    "joint": str,
    "fs": float,
    "tol_ms": int,
}


def _format(value: Any) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


def _coerce(key: str, value: Any) -> Any:
    kind = _TYPES[key]
    if not isinstance(value, str):
        if kind is float and isinstance(value, int) and not isinstance(value, bool):
            return float(value)
        return value
    text = value.strip()
    try:
        if kind == "optional_int":
            return None if text.lower() in ("", "none") else int(text)
        if kind is bool:
            lowered = text.lower()
            if lowered in ("true", "yes", "1", "on"):
                return True
            if lowered in ("false", "no", "0", "off"):
                return False
            raise ValueError(text)
        return kind(text)
    except ValueError:
        raise ConfigError(f"invalid value for {key}: {value!r}") from None


def from_mapping(values: Mapping[str, Any]) -> PipelineConfig:
    unknown = sorted(set(values) - set(_FIELDS))
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
    return PipelineConfig(**{k: _coerce(k, v) for k, v in values.items()})


def parse_config_text(text: str) -> dict[str, str]:
    """Parse ``key=value`` lines; ``#`` starts a comment."""
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config line {lineno}: expected key=value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _FIELDS:
            raise ConfigError(f"config line {lineno}: unknown key {key!r}")
        values[key] = value
    return values


def load_config(path: str | Path | None = None, overrides: Mapping[str, Any] | None = None) -> PipelineConfig:
    """Defaults, then the file at ``path``, then non-None ``overrides``."""
    values: dict[str, Any] = {}
    if path is not None:
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file {path} not found")
        values.update(parse_config_text(path.read_text(encoding="utf-8")))
    for key, value in (overrides or {}).items():
        if value is not None:
            values[key] = value
    return from_mapping(values)
