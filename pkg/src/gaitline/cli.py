"""``gaitline`` command-line entry point.

Exit codes: 0 success, 1 usage or configuration error, 2 data error,
3 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from pathlib import Path
from typing import Sequence

import numpy as np

from gaitline.classify import LEARNERS
from gaitline.config import PipelineConfig, load_config
from gaitline.errors import ConfigError, GaitlineError
from gaitline.features import read_feature_csv, write_feature_csv
from gaitline.ingest import JOINTS, load_directory
from gaitline.pipeline import extract_matrix, run_grid, run_pipeline, train_full
from gaitline.synth import default_profiles, make_benchmark, null_profiles

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise UsageError(f"{self.prog}: error: {message}")


def _csv_list(kind):
    def parse(text: str):
        return [kind(part) for part in text.split(",") if part]

    return parse


def _add_pipeline_options(p: argparse.ArgumentParser, model: bool = True) -> None:
    p.add_argument("--config", type=Path, help="flat key=value config file; flags override it")
    p.add_argument("--seed", type=int)
    p.add_argument("--filter-w", dest="filter_w", type=int, help="moving-average window (samples)")
    p.add_argument("--window-len", dest="window_len", type=int)
    p.add_argument("--overlap", type=float)
    p.add_argument("--joint", choices=JOINTS)
    p.add_argument("--include-dc", dest="include_dc", action="store_const", const=True,
                   help="keep the FFT DC bin (117 features)")
    if model:
        p.add_argument("--model", dest="classifier", choices=LEARNERS)
        p.add_argument("--C", dest="C", type=float)
        p.add_argument("--n-trees", dest="n_trees", type=int)
        p.add_argument("--mtry", type=int)
        p.add_argument("--pca-threshold", dest="pca_threshold", type=float)
        p.add_argument("--folds", type=int)
        p.add_argument("--group-by-subject", dest="group_by_subject", action="store_const", const=True)
        p.add_argument("--leaky-preproc", dest="leaky_preproc", action="store_const", const=True,
                       help="fit z-score and PCA once on all rows instead of per fold")
        p.add_argument("--jobs", type=int, default=1, help="worker threads; results do not depend on it")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gaitline", description="Emotion identification from wrist/ankle gait acceleration.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", help="write a synthetic benchmark directory")
    p.add_argument("--classes", type=int, default=2, choices=(2, 3))
    p.add_argument("--sessions", type=int, default=30, help="sessions per class")
    p.add_argument("--duration", type=float, default=120.0, help="seconds per session")
    p.add_argument("--joints", type=_csv_list(str), default=["ankle"])
    p.add_argument("--noise", type=float, default=0.3)
    p.add_argument("--null", action="store_true", help="identical profiles for every label")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("ingest", help="gravity removal and session cutting summary")
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--joint", choices=JOINTS)
    p.add_argument("--tol-ms", dest="tol_ms", type=int, default=100)

    p = sub.add_parser("extract", help="write the feature matrix CSV")
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    _add_pipeline_options(p, model=False)

    p = sub.add_parser("train", help="fit z-score, PCA and a classifier on all rows")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--input", type=Path)
    src.add_argument("--features", type=Path)
    p.add_argument("--out", type=Path, required=True)
    _add_pipeline_options(p)

    p = sub.add_parser("eval", help="full pipeline with k-fold cross-validation")
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    _add_pipeline_options(p)

    p = sub.add_parser("report", help="accuracy grid over filter widths, joints and classifiers")
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--w-values", dest="w_values", type=_csv_list(int), default=[3, 5])
    p.add_argument("--models", type=_csv_list(str), default=["svm", "tree", "forest"])
    _add_pipeline_options(p)
    return parser


_CONFIG_KEYS = (
    "seed", "filter_w", "window_len", "overlap", "joint", "include_dc", "classifier", "C",
    "n_trees", "mtry", "pca_threshold", "folds", "group_by_subject", "leaky_preproc",
)


def _config(args: argparse.Namespace) -> PipelineConfig:
    overrides = {k: getattr(args, k) for k in _CONFIG_KEYS if hasattr(args, k)}
    return load_config(getattr(args, "config", None), overrides)


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def cmd_synth(args) -> None:
    for j in args.joints:
        if j not in JOINTS:
            raise UsageError(f"unknown joint {j!r}")
    make = null_profiles if args.null else default_profiles
    profiles = make(args.classes, noise_std=args.noise)
    bench = make_benchmark(profiles, args.sessions, args.duration, args.seed, args.out, tuple(args.joints))
    print(f"wrote {len(bench.stream_files)} stream files and {len(bench.markers)} markers to {args.out}")


def cmd_ingest(args) -> None:
    segments, report = load_directory(args.input, args.joint, args.tol_ms)
    args.out.mkdir(parents=True, exist_ok=True)
    sessions = [
        {
            "subject_id": s.subject_id,
            "joint": s.joint,
            "label": s.label,
            "start_ms": s.marker.start_ms,
            "end_ms": s.marker.end_ms,
            "samples": len(s.stream),
        }
        for s in segments
    ]
    _write_json(args.out / "ingest_report.json", {**report.to_dict(), "sessions": sessions})
    print(f"{len(sessions)} sessions, {report.dropped} unmatched samples dropped")


def cmd_extract(args) -> None:
    cfg = _config(args)
    matrix, _ = extract_matrix(args.input, cfg)
    args.out.mkdir(parents=True, exist_ok=True)
    write_feature_csv(matrix, args.out / "features.csv")
    print(f"{len(matrix)} slices x {len(matrix.names)} features -> {args.out / 'features.csv'}")


def cmd_train(args) -> None:
    cfg = _config(args)
    cfg.require_seed()
    if args.features is not None:
        matrix = read_feature_csv(args.features)
    else:
        matrix, _ = extract_matrix(args.input, cfg)
    fitted = train_full(matrix, cfg)
    args.out.mkdir(parents=True, exist_ok=True)
    (args.out / "model.json").write_text(fitted.dumps(), encoding="utf-8")
    (args.out / "config.txt").write_text(cfg.to_text(), encoding="utf-8")
    print(f"{cfg.classifier} trained on {len(matrix)} rows, {fitted.pca.n_components} PCA components")


def cmd_eval(args) -> None:
    cfg = _config(args)
    result = run_pipeline(cfg, args.input, args.out, n_jobs=args.jobs)
    sys.stdout.write(result.report.to_text())


def cmd_report(args) -> None:
    cfg = _config(args)
    for m in args.models:
        if m not in LEARNERS:
            raise UsageError(f"unknown model {m!r}")
    grid = run_grid(args.input, cfg, args.w_values, args.models, n_jobs=args.jobs)
    args.out.mkdir(parents=True, exist_ok=True)
    (args.out / "grid.json").write_text(grid.to_json(), encoding="utf-8")
    (args.out / "grid.txt").write_text(grid.to_text(), encoding="utf-8")
    sys.stdout.write(grid.to_text())


COMMANDS = {
    "synth": cmd_synth,
    "ingest": cmd_ingest,
    "extract": cmd_extract,
    "train": cmd_train,
    "eval": cmd_eval,
    "report": cmd_report,
}


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            COMMANDS[args.command](args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"gaitline: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except GaitlineError as exc:
        stage = "numeric failure" if exc.exit_code == EXIT_NUMERIC else "data error"
        print(f"gaitline {args.command}: {stage}: {exc}", file=sys.stderr)
        return exc.exit_code
    except (np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"gaitline: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"gaitline: I/O error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
