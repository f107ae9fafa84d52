"""Saccade analysis for head-mounted eye-tracker recordings.

Ingest nested session documents, measure inter-eye gaze divergence, reduce
the per-frame features with PCA and classify saccade frames with an RBF SVM.
"""
from __future__ import annotations

__version__ = "0.1.0"

from .divergence import DivergenceStats, analyze_session, divergence_stats
from .ingest import GazeSample, LabelInterval, Session, parse_nested_session, parse_table
from .model_select import EvalReport, cross_validate, evaluate, grid_search, weighted_metrics
from .pca import PcaModel, pca_fit, pca_transform
from .stats import NormalityReport, dagostino_k2
from .svm import SvmModel, SvmParams, predict, svm_train
from .synth import SynthConfig, generate_session

__all__ = [
    "DivergenceStats", "EvalReport", "GazeSample", "LabelInterval", "NormalityReport",
    "PcaModel", "Session", "SvmModel", "SvmParams", "SynthConfig", "analyze_session",
    "cross_validate", "dagostino_k2", "divergence_stats", "evaluate", "generate_session",
    "grid_search", "parse_nested_session", "parse_table", "pca_fit", "pca_transform",
    "predict", "svm_train", "weighted_metrics",
]
