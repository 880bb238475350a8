"""Emotion identification from wrist and ankle walking acceleration."""

from gaitline.classify import Dataset, LearnerConfig
from gaitline.config import PipelineConfig, load_config
from gaitline.dimred import PcaModel, pca_fit, pca_transform
from gaitline.evaluation import ConfusionMatrix, EvalReport, accuracy, cross_validate, stratified_kfold
from gaitline.features import FeatureMatrix, extract_features, feature_names, zscore_fit_transform
from gaitline.ingest import PureStream, SensorStream, SessionMarker, cut_sessions, parse_stream, subtract_gravity
from gaitline.pipeline import run_grid, run_pipeline
from gaitline.preprocess import FilterConfig, SliceConfig, WindowSlice, moving_average, slice_windows, smooth_stream

__version__ = "0.1.0"

__all__ = [
    "ConfusionMatrix",
    "Dataset",
    "EvalReport",
    "FeatureMatrix",
    "FilterConfig",
    "LearnerConfig",
    "PcaModel",
    "PipelineConfig",
    "PureStream",
    "SensorStream",
    "SessionMarker",
    "SliceConfig",
    "WindowSlice",
    "accuracy",
    "cross_validate",
    "cut_sessions",
    "extract_features",
    "feature_names",
    "load_config",
    "moving_average",
    "parse_stream",
    "pca_fit",
    "pca_transform",
    "run_grid",
    "run_pipeline",
    "slice_windows",
    "smooth_stream",
    "stratified_kfold",
    "subtract_gravity",
    "zscore_fit_transform",
]
