"""End-to-end classifier pipeline shared by the CLI and the acceptance suite.

clean -> split -> PCA (fit on the training part) -> grid-searched SVM with
k-fold CV -> refit on the whole training part -> score the held-out part once.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .divergence import per_eye_difference
from .ingest import Session
from .model_select import (
    DEFAULT_C_GRID,
    EvalReport,
    GridResult,
    decision_grid,
    evaluate,
    grid_search,
    train_test_split,
)
from .pca import PcaModel, pca_fit, pca_transform
from .preprocess import EXTREME_K, filter_invalid, filter_outliers, iqr_fences
from .svm import SvmModel, SvmParams, predict_many, svm_train


@dataclass(frozen=True)
class PipelineConfig:
    ratio: float = 0.75
    seed: int = 0
    stratified: bool = True
    folds: int = 4
    pcs: int = 4
    pca_mode: str = "center"
    C_grid: tuple[float, ...] = DEFAULT_C_GRID
    gamma_grid: Optional[tuple[float, ...]] = None  # None: default grid incl. 1/(d var X)
    metric: str = "accuracy"
    balanced: bool = True
    tol: float = 1e-3
    filter_outliers: bool = False
    iqr_k: float = EXTREME_K
    n_jobs: int = 1

    def base_params(self) -> SvmParams:
        w = None if self.balanced else 1.0
        return SvmParams(class_weight_pos=w, class_weight_neg=w, tol=self.tol)


@dataclass
class Dataset:
    X: np.ndarray  # n x 25 features
    y: np.ndarray  # bool
    n_invalid: int = 0
    n_outlier: int = 0
    participants: tuple[str, ...] = ()

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.X).tobytes())
        h.update(np.ascontiguousarray(self.y).tobytes())
        return h.hexdigest()


@dataclass
class PipelineResult:
    config: PipelineConfig
    dataset: Dataset
    train_idx: np.ndarray
    test_idx: np.ndarray
    pca: PcaModel
    grid: GridResult
    model: SvmModel
    report: EvalReport
    extra: dict = field(default_factory=dict)


def prepare_dataset(sessions: Sequence[Session], filter_outliers_: bool = False,
                    iqr_k: float = EXTREME_K) -> Dataset:
    """Pool labeled sessions after dropping invalid rows.

    With ``filter_outliers_`` each session also loses the rows whose inter-eye
    difference falls outside that session's IQR fences.
    """
    Xs, ys = [], []
    n_invalid = n_outlier = 0
    for s in sessions:
        clean, removed = filter_invalid(s)
        n_invalid += removed
        X = clean.feature_matrix()
        y = clean.labels()
        if filter_outliers_ and len(clean):
            series = [per_eye_difference(smp) for smp in clean.samples]
            _, bad = filter_outliers(series, iqr_fences(series, iqr_k))
            keep = np.ones(len(series), dtype=bool)
            keep[bad] = False
            X, y = X[keep], y[keep]
            n_outlier += len(bad)
        Xs.append(X)
        ys.append(y)
    X = np.vstack(Xs) if Xs else np.empty((0, 25))
    y = np.concatenate(ys) if ys else np.empty(0, dtype=bool)
    return Dataset(X, y, n_invalid, n_outlier, tuple(s.participant_id for s in sessions))


def fit_classifier(X_train, y_train, config: PipelineConfig, pcs: int):
    """PCA + grid search + refit on one training part.  Returns (pca, grid, model)."""
    pca = pca_fit(X_train, config.pca_mode)
    Z = pca_transform(pca, X_train, pcs)
    grid = grid_search(Z, y_train, config.C_grid, config.gamma_grid, k=config.folds,
                       seed=config.seed, stratified=config.stratified, metric=config.metric,
                       base_params=config.base_params(), n_jobs=config.n_jobs)
    C, gamma = grid.best
    model = svm_train(Z, y_train, replace(config.base_params(), C=C, gamma=gamma))
    return pca, grid, model


def run_pipeline(sessions: Sequence[Session], config: PipelineConfig = PipelineConfig(),
                 dataset: Optional[Dataset] = None) -> PipelineResult:
    data = dataset or prepare_dataset(sessions, config.filter_outliers, config.iqr_k)
    train, test = train_test_split(data.y, config.ratio, config.seed, config.stratified)
    pca, grid, model = fit_classifier(data.X[train], data.y[train], config, config.pcs)
    Z_test = pca_transform(pca, data.X[test], config.pcs)
    report = evaluate(data.y[test], predict_many(model, Z_test))
    return PipelineResult(config, data, train, test, pca, grid, model, report)


@dataclass
class BoundaryResult:
    pca: PcaModel
    grid: GridResult
    model: SvmModel
    scores: np.ndarray  # training scores in the 2-PC plane
    labels: np.ndarray
    xs: np.ndarray
    ys: np.ndarray
    values: np.ndarray


def padded_bounds(scores: np.ndarray, pad: float = 0.05):
    lo = scores.min(axis=0)
    hi = scores.max(axis=0)
    span = np.where(hi > lo, hi - lo, 1.0)
    lo = lo - pad * span
    hi = hi + pad * span
    return float(lo[0]), float(hi[0]), float(lo[1]), float(hi[1])


def fit_boundary(dataset: Dataset, config: PipelineConfig = PipelineConfig(),
                 resolution: int = 50, pcs: int = 2) -> BoundaryResult:
    """Separate 2-PC model whose decision surface can be drawn as a contour map."""
    train, _ = train_test_split(dataset.y, config.ratio, config.seed, config.stratified)
    X, y = dataset.X[train], dataset.y[train]
    pca, grid, model = fit_classifier(X, y, config, pcs)
    Z = pca_transform(pca, X, pcs)
    xs, ys, values = decision_grid(model, padded_bounds(Z), resolution)
    return BoundaryResult(pca, grid, model, Z, y, xs, ys, values)
