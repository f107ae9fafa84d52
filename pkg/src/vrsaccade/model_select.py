"""Splits, k-fold cross-validation, grid search and evaluation metrics."""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .errors import (
    DegenerateFold,
    EmptyMatrix,
    KTooLarge,
    LengthMismatch,
    TooFewSamples,
    WrongDimensionality,
)
from .svm import (
    SvmModel,
    SvmParams,
    decision_function,
    predict_many,
    rbf_kernel_matrix,
    svm_train,
)

DEFAULT_C_GRID = (0.1, 1.0, 10.0, 100.0)
DEFAULT_GAMMA_GRID = (0.001, 0.01, 0.1, 1.0)  # plus the data-scaled value, see default_gamma_grid
METRICS = ("accuracy", "f1_w")


@dataclass(frozen=True)
class EvalReport:
    confusion: np.ndarray  # rows = true [not-saccade, saccade], cols = predicted
    accuracy: float
    precision_w: float
    recall_w: float
    f1_w: float

    def to_dict(self) -> dict:
        return {
            "confusion": self.confusion.tolist(),
            "accuracy": self.accuracy,
            "precision_w": self.precision_w,
            "recall_w": self.recall_w,
            "f1_w": self.f1_w,
        }


@dataclass(frozen=True)
class GridRow:
    C: float
    gamma: float
    mean_score: float
    fold_scores: tuple[float, ...]


@dataclass(frozen=True)
class GridResult:
    rows: tuple[GridRow, ...]
    best: tuple[float, float]
    metric: str = "accuracy"

    @property
    def best_row(self) -> GridRow:
        return next(r for r in self.rows if (r.C, r.gamma) == self.best)


def _labels(y) -> np.ndarray:
    y = np.asarray(y)
    return y.astype(bool) if y.dtype == bool else (y.astype(float) > 0)


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def _largest_remainder(total: int, weights: Sequence[int]) -> list[int]:
    """Split ``total`` proportionally to ``weights`` with integer parts."""
    s = sum(weights)
    quotas = [total * w / s for w in weights]
    base = [int(math.floor(q)) for q in quotas]
    short = total - sum(base)
    order = sorted(range(len(weights)), key=lambda i: (-(quotas[i] - base[i]), i))
    for i in order[:short]:
        base[i] += 1
    return base


def train_test_split(y, ratio: float = 0.75, seed: int = 0, stratified: bool = True):
    """Return sorted ``(train_idx, test_idx)`` with ``round(ratio * n)`` training rows."""
    if not 0 < ratio < 1:
        raise ValueError(f"ratio must be in (0, 1), got {ratio}")
    y = _labels(y)
    n = y.size
    n_train = _round_half_up(ratio * n)
    n_test = n - n_train
    rng = np.random.default_rng(seed)
    if stratified:
        classes = [np.flatnonzero(~y), np.flatnonzero(y)]
        test_counts = _largest_remainder(n_test, [c.size for c in classes])
        test_parts = [rng.permutation(c)[:m] for c, m in zip(classes, test_counts)]
        test = np.sort(np.concatenate(test_parts))
    else:
        test = np.sort(rng.permutation(n)[:n_test])
    train = np.setdiff1d(np.arange(n), test)
    for part, name in ((train, "training"), (test, "test")):
        n_pos = int(y[part].sum())
        if n_pos == 0 or n_pos == part.size:
            raise TooFewSamples(f"the {name} part would be missing a class")
    return train, test


def kfold_indices(n: int, k: int = 4, seed: int = 0, stratified: bool = True, labels=None):
    """Partition ``range(n)`` into ``k`` folds whose sizes differ by at most one.

    Stratified folds shuffle each class separately and deal the
    concatenated lists round-robin, so every fold gets its share of both.
    """
    if k < 2:
        raise ValueError(f"k must be at least 2, got {k}")
    if n < k:
        raise KTooLarge(f"cannot make {k} folds from {n} samples")
    rng = np.random.default_rng(seed)
    if stratified:
        if labels is None:
            raise ValueError("stratified folds need labels")
        y = _labels(labels)
        if y.size != n:
            raise LengthMismatch(f"{y.size} labels for {n} samples")
        order = np.concatenate([rng.permutation(np.flatnonzero(~y)),
                                rng.permutation(np.flatnonzero(y))])
    else:
        order = rng.permutation(n)
    return [np.sort(order[f::k]) for f in range(k)]


def confusion_matrix(y_true, y_pred) -> np.ndarray:
    t = _labels(y_true)
    p = _labels(y_pred)
    if t.size != p.size:
        raise LengthMismatch(f"{t.size} true labels vs {p.size} predictions")
    if t.size == 0:
        raise LengthMismatch("need at least one sample")
    m = np.zeros((2, 2), dtype=np.int64)
    np.add.at(m, (t.astype(int), p.astype(int)), 1)
    return m


def weighted_metrics(confusion) -> tuple[float, float, float, float]:
    """Accuracy and support-weighted precision, recall and F1 (0/0 taken as 0)."""
    m = np.asarray(confusion, dtype=float)
    total = m.sum()
    if total <= 0:
        raise EmptyMatrix("confusion matrix has no samples")
    support = m.sum(axis=1)
    predicted = m.sum(axis=0)
    tp = np.diag(m)
    with np.errstate(divide="ignore", invalid="ignore"):
        prec = np.where(predicted > 0, tp / predicted, 0.0)
        rec = np.where(support > 0, tp / support, 0.0)
        f1 = np.where(prec + rec > 0, 2 * prec * rec / (prec + rec), 0.0)
    w = support / total
    return (float(tp.sum() / total), float(w @ prec), float(w @ rec), float(w @ f1))


def evaluate(y_true, y_pred) -> EvalReport:
    cm = confusion_matrix(y_true, y_pred)
    acc, p, r, f = weighted_metrics(cm)
    return EvalReport(confusion=cm, accuracy=acc, precision_w=p, recall_w=r, f1_w=f)


def score(y_true, y_pred, metric: str = "accuracy") -> float:
    if metric not in METRICS:
        raise ValueError(f"unknown metric {metric!r}; expected one of {METRICS}")
    report = evaluate(y_true, y_pred)
    return report.accuracy if metric == "accuracy" else report.f1_w


def _check_fold(y_train, i):
    n_pos = int(y_train.sum())
    if n_pos == 0 or n_pos == y_train.size:
        raise DegenerateFold(f"training data for fold {i} contains a single class")


def _fold_score(X, y, train, test, params, metric, kernel=None, i=0):
    _check_fold(y[train], i)
    model = svm_train(X[train], y[train], params, kernel=kernel)
    return score(y[test], predict_many(model, X[test]), metric)


def cross_validate(X, y, params: SvmParams, k: int = 4, seed: int = 0, stratified: bool = True,
                   metric: str = "accuracy", folds=None):
    """Mean and per-fold scores; fold i is scored by a model trained on the rest."""
    X = np.asarray(X, dtype=float)
    y = _labels(y)
    if folds is None:
        folds = kfold_indices(len(y), k, seed, stratified, y)
    gram = rbf_kernel_matrix(X, X, params.gamma)
    scores = []
    for i, test in enumerate(folds):
        train = np.setdiff1d(np.arange(len(y)), test)
        sub = np.ascontiguousarray(gram[np.ix_(train, train)])
        scores.append(_fold_score(X, y, train, test, params, metric, kernel=sub, i=i))
    return float(np.mean(scores)), scores


def default_gamma_grid(X) -> tuple[float, ...]:
    """Fixed gammas plus 1 / (d * var(X))."""
    X = np.asarray(X, dtype=float)
    var = float(X.var())
    extra = (1.0 / (X.shape[1] * var),) if var > 0 else ()
    return DEFAULT_GAMMA_GRID + extra


def _gamma_column(args):
    """Scores for every C at one gamma; the Gram matrix is built once and sliced per fold."""
    X, y, folds, gamma, C_list, base, metric = args
    gram = rbf_kernel_matrix(X, X, gamma)
    everything = np.arange(len(y))
    out = {C: [] for C in C_list}
    for test in folds:
        train = np.setdiff1d(everything, test)
        sub = np.ascontiguousarray(gram[np.ix_(train, train)])
        for C in C_list:
            model = svm_train(X[train], y[train], replace(base, C=C, gamma=gamma), kernel=sub)
            out[C].append(score(y[test], predict_many(model, X[test]), metric))
    return out


def grid_search(X, y, C_list=DEFAULT_C_GRID, gamma_list=None, k: int = 4, seed: int = 0,
                stratified: bool = True, metric: str = "accuracy",
                base_params: Optional[SvmParams] = None, n_jobs: int = 1) -> GridResult:
    """Cross-validate every (C, gamma) cell on the same seeded folds.

    Folds depend only on ``seed``, so the table does not depend on the order
    cells are evaluated in.  Ties on the mean score go to the smallest C,
    then the smallest gamma.
    """
    X = np.asarray(X, dtype=float)
    y = _labels(y)
    if gamma_list is None:
        gamma_list = default_gamma_grid(X)
    C_list = sorted(set(float(c) for c in C_list))
    gamma_list = sorted(set(float(g) for g in gamma_list))
    if not C_list or not gamma_list:
        raise ValueError("C and gamma grids must be non-empty")
    base = base_params or SvmParams()
    folds = kfold_indices(len(y), k, seed, stratified, y)
    for i, test in enumerate(folds):
        _check_fold(np.delete(y, test), i)

    jobs = [(X, y, folds, g, C_list, base, metric) for g in gamma_list]
    if n_jobs > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            columns = list(pool.map(_gamma_column, jobs))
    else:
        columns = [_gamma_column(job) for job in jobs]
    results = {(C, g): col[C] for g, col in zip(gamma_list, columns) for C in C_list}

    rows = tuple(GridRow(C, g, float(np.mean(results[(C, g)])), tuple(results[(C, g)]))
                 for C in C_list for g in gamma_list)
    best = min(rows, key=lambda r: (-r.mean_score, r.C, r.gamma))
    return GridResult(rows=rows, best=(best.C, best.gamma), metric=metric)


def decision_grid(model: SvmModel, bounds, resolution: int):
    """Decision values on a uniform ``resolution x resolution`` grid.

    Returns ``(xs, ys, values)`` where ``values`` is flat, row-major with x
    varying fastest: ``values[r * resolution + c]`` is at ``(xs[c], ys[r])``.
    """
    if model.n_features != 2:
        raise WrongDimensionality(f"boundary grids need a 2-feature model, got {model.n_features}")
    if resolution < 2:
        raise ValueError(f"resolution must be at least 2, got {resolution}")
    xmin, xmax, ymin, ymax = map(float, bounds)
    xs = np.linspace(xmin, xmax, resolution)
    ys = np.linspace(ymin, ymax, resolution)
    gx, gy = np.meshgrid(xs, ys)
    pts = np.column_stack([gx.ravel(), gy.ravel()])
    return xs, ys, decision_function(model, pts)
