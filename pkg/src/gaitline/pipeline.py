"""End-to-end runs: raw recordings to features, cross-validated reports and grids."""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from gaitline.classify.dataset import class_order
from gaitline.config import PipelineConfig
from gaitline.errors import DataError
from gaitline.evaluation import EvalReport, FittedPipeline, cross_validate, fit_pipeline, stratified_kfold, subject_kfold
from gaitline.features import FeatureMatrix, extract_features, write_feature_csv
from gaitline.ingest import IngestReport, Segment, discover_pairs, load_directory
from gaitline.preprocess import WindowSlice, slice_windows, smooth_stream

GRID_LABELS = {"svm": "SVM", "tree": "DT", "forest": "RF", "rtree": "RT"}


def segments_to_slices(segments: Sequence[Segment], cfg: PipelineConfig) -> list[WindowSlice]:
    slices: list[WindowSlice] = []
    for seg in segments:
        if len(seg.stream) < cfg.filter_w:
            warnings.warn(f"{seg.subject_id}/{seg.label}: session shorter than filter window, skipped", stacklevel=2)
            continue
        smoothed = smooth_stream(seg.stream, cfg.filter)
        slices += slice_windows(smoothed, cfg.slicing, seg.label, seg.subject_id, seg.joint)
    return slices


def slices_to_matrix(slices: Sequence[WindowSlice], cfg: PipelineConfig) -> FeatureMatrix:
    if not slices:
        raise DataError("no complete slices: every session is shorter than one window")
    rows = [extract_features(s, cfg.fs, cfg.include_dc) for s in slices]
    return FeatureMatrix.from_vectors(rows, cfg.include_dc)


def extract_matrix(input_dir: str | Path, cfg: PipelineConfig) -> tuple[FeatureMatrix, IngestReport]:
    """Ingest, smooth, slice and featurize every session of ``cfg.joint``."""
    segments, report = load_directory(input_dir, cfg.joint, cfg.tol_ms)
    return slices_to_matrix(segments_to_slices(segments, cfg), cfg), report


def fold_plan(matrix: FeatureMatrix, cfg: PipelineConfig):
    seed = cfg.require_seed()
    if cfg.group_by_subject:
        return subject_kfold(matrix.subject_ids, cfg.folds, seed)
    classes = class_order(matrix.labels)
    index = {c: i for i, c in enumerate(classes)}
    return stratified_kfold(np.array([index[c] for c in matrix.labels]), cfg.folds, seed)


def evaluate_matrix(matrix: FeatureMatrix, cfg: PipelineConfig, n_jobs: int = 1) -> EvalReport:
    return cross_validate(
        matrix,
        cfg.learner(),
        fold_plan(matrix, cfg),
        cfg.pca_threshold,
        cfg.leaky_preproc,
        n_jobs=n_jobs,
        config=cfg.to_dict(),
    )


def train_full(matrix: FeatureMatrix, cfg: PipelineConfig) -> FittedPipeline:
    """Fit normalization, PCA and the classifier on every row."""
    cfg.require_seed()
    classes = class_order(matrix.labels)
    index = {c: i for i, c in enumerate(classes)}
    labels = np.array([index[c] for c in matrix.labels], dtype=np.int64)
    return fit_pipeline(matrix.values, labels, classes, cfg.learner(), cfg.pca_threshold)


@dataclass
class PipelineResult:
    report: EvalReport
    matrix: FeatureMatrix
    ingest: IngestReport
    written: list[Path] = field(default_factory=list)


def run_pipeline(cfg: PipelineConfig, input_dir: str | Path, out_dir: str | Path, n_jobs: int = 1) -> PipelineResult:
    """Ingest through cross-validation; writes features, model and report into ``out_dir``."""
    cfg.require_seed()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    matrix, ingest = extract_matrix(input_dir, cfg)
    report = evaluate_matrix(matrix, cfg, n_jobs)
    model = train_full(matrix, cfg)

    written = [out / "features.csv", out / "ingest_report.json", out / "model.json", out / "report.json", out / "report.txt"]
    write_feature_csv(matrix, written[0])
    written[1].write_text(json.dumps(ingest.to_dict(), sort_keys=True, indent=2) + "\n", encoding="utf-8")
    written[2].write_text(model.dumps(), encoding="utf-8")
    written[3].write_text(report.to_json(), encoding="utf-8")
    written[4].write_text(report.to_text(), encoding="utf-8")
    return PipelineResult(report, matrix, ingest, written)


@dataclass
class GridResult:
    """Accuracy per (w, joint, classifier), laid out like one table per w."""

    w_values: tuple[int, ...]
    joints: tuple[str, ...]
    classifiers: tuple[str, ...]
    accuracy: dict[tuple[int, str, str], float]
    config: dict

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "tables": [
                {
                    "w": w,
                    "rows": [
                        {"joint": j, **{GRID_LABELS[c]: round(100.0 * self.accuracy[(w, j, c)], 2) for c in self.classifiers}}
                        for j in self.joints
                    ],
                }
                for w in self.w_values
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    def to_text(self) -> str:
        heads = [GRID_LABELS[c] for c in self.classifiers]
        lines = []
        for w in self.w_values:
            lines.append(f"classification accuracy when w={w}")
            lines.append("joint".ljust(8) + "".join(h.rjust(10) for h in heads))
            for j in self.joints:
                cells = "".join(f"{100.0 * self.accuracy[(w, j, c)]:.2f}%".rjust(10) for c in self.classifiers)
                lines.append(j.ljust(8) + cells)
            lines.append("")
        return "\n".join(lines)


def run_grid(
    input_dir: str | Path,
    cfg: PipelineConfig,
    w_values: Sequence[int] = (3, 5),
    classifiers: Sequence[str] = ("svm", "tree", "forest"),
    joints: Sequence[str] | None = None,
    n_jobs: int = 1,
) -> GridResult:
    """Cross-validate every (w, joint, classifier) combination.

    ``joints`` defaults to every joint with recordings in ``input_dir``.
    """
    cfg.require_seed()
    if joints is None:
        found = {joint for _, joint, _, _ in discover_pairs(Path(input_dir))}
        joints = tuple(j for j in ("wrist", "ankle") if j in found)
    accuracy: dict[tuple[int, str, str], float] = {}
    for w in w_values:
        for joint in joints:
            base = cfg.replace(filter_w=w, joint=joint)
            matrix, _ = extract_matrix(input_dir, base)
            for c in classifiers:
                accuracy[(w, joint, c)] = evaluate_matrix(matrix, base.replace(classifier=c), n_jobs).accuracy
    echo = {k: v for k, v in cfg.to_dict().items() if k not in ("filter_w", "joint", "classifier")}
    return GridResult(tuple(w_values), tuple(joints), tuple(classifiers), accuracy, echo)
