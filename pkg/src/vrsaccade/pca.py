"""Covariance PCA: fit, projection, variance accounting."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DimensionMismatch, KOutOfRange, TooFewRows, ZeroVarianceColumn

MODES = ("center", "zscore")


@dataclass(frozen=True)
class PcaModel:
    """Fitted PCA.

    Attributes
    ----------
    mean : (d,) array
    scale : (d,) array or None
        Column standard deviations in z-score mode.
    components : (k, d) array
        Orthonormal rows sorted by descending eigenvalue.
    eigenvalues : (k,) array
        Variances of the component scores (sample covariance, ddof=1).
    explained_variance_ratio : (k,) array
    """

    mean: np.ndarray
    scale: Optional[np.ndarray]
    components: np.ndarray
    eigenvalues: np.ndarray
    explained_variance_ratio: np.ndarray

    @property
    def n_features(self) -> int:
        return self.mean.shape[0]

    @property
    def n_components(self) -> int:
        return self.components.shape[0]

    def to_dict(self) -> dict:
        return {
            "mean": self.mean.tolist(),
            "scale": None if self.scale is None else self.scale.tolist(),
            "components": self.components.tolist(),
            "eigenvalues": self.eigenvalues.tolist(),
            "explained_variance_ratio": self.explained_variance_ratio.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PcaModel":
        return cls(
            mean=np.asarray(d["mean"], dtype=float),
            scale=None if d.get("scale") is None else np.asarray(d["scale"], dtype=float),
            components=np.asarray(d["components"], dtype=float),
            eigenvalues=np.asarray(d["eigenvalues"], dtype=float),
            explained_variance_ratio=np.asarray(d["explained_variance_ratio"], dtype=float),
        )


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    """Flip each row so its largest-magnitude entry is positive."""
    idx = np.argmax(np.abs(vectors), axis=1)
    signs = np.sign(vectors[np.arange(vectors.shape[0]), idx])
    signs[signs == 0] = 1.0
    return vectors * signs[:, None]


def pca_fit(X, mode: str = "center", n_components: Optional[int] = None) -> PcaModel:
    """Fit PCA by eigendecomposition of the sample covariance matrix.

    ``mode="center"`` only subtracts the column means; ``mode="zscore"``
    also divides by the column standard deviations.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise DimensionMismatch(f"expected a 2-D matrix, got shape {X.shape}")
    n, d = X.shape
    if n < 2:
        raise TooFewRows(f"PCA needs at least 2 rows, got {n}")
    if d < 1:
        raise DimensionMismatch("PCA needs at least one column")
    if mode not in MODES:
        raise ValueError(f"unknown PCA mode {mode!r}; expected one of {MODES}")

    mean = X.mean(axis=0)
    Xc = X - mean
    scale = None
    if mode == "zscore":
        scale = Xc.std(axis=0, ddof=1)
        bad = np.flatnonzero(scale == 0)
        if bad.size:
            raise ZeroVarianceColumn(f"columns {bad.tolist()} have zero variance")
        Xc = Xc / scale

    cov = Xc.T @ Xc / (n - 1)
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(evals, kind="stable")[::-1]
    evals = np.clip(evals[order], 0.0, None)
    comps = _fix_signs(evecs[:, order].T)

    total = evals.sum()
    ratios = evals / total if total > 0 else np.zeros_like(evals)
    k = d if n_components is None else n_components
    if not 1 <= k <= d:
        raise KOutOfRange(f"n_components must be in [1, {d}], got {k}")
    return PcaModel(mean=mean, scale=scale, components=comps[:k].copy(),
                    eigenvalues=evals[:k].copy(), explained_variance_ratio=ratios[:k].copy())


def _standardize(model: PcaModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != model.n_features:
        raise DimensionMismatch(f"model expects {model.n_features} features, got {X.shape[1]}")
    Xc = X - model.mean
    if model.scale is not None:
        Xc = Xc / model.scale
    return Xc


def pca_transform(model: PcaModel, X, k: Optional[int] = None) -> np.ndarray:
    k = model.n_components if k is None else k
    if not 1 <= k <= model.n_components:
        raise KOutOfRange(f"k must be in [1, {model.n_components}], got {k}")
    return _standardize(model, X) @ model.components[:k].T


def pca_inverse(model: PcaModel, scores) -> np.ndarray:
    scores = np.atleast_2d(np.asarray(scores, dtype=float))
    k = scores.shape[1]
    if not 1 <= k <= model.n_components:
        raise KOutOfRange(f"score width must be in [1, {model.n_components}], got {k}")
    Xc = scores @ model.components[:k]
    if model.scale is not None:
        Xc = Xc * model.scale
    return Xc + model.mean


def cumulative_variance(model: PcaModel, k: int) -> float:
    ratios = model.explained_variance_ratio
    if not 1 <= k <= len(ratios):
        raise KOutOfRange(f"k must be in [1, {len(ratios)}], got {k}")
    return float(np.sum(ratios[:k]))


def scree_table(model: PcaModel) -> list[tuple[int, float, float, float]]:
    """Rows of (1-based component index, eigenvalue, ratio, cumulative ratio)."""
    cum = np.cumsum(model.explained_variance_ratio)
    # cumsum can wobble by an ulp; keep the column non-decreasing
    cum = np.maximum.accumulate(cum)
    return [(i + 1, float(ev), float(r), float(c))
            for i, (ev, r, c) in enumerate(zip(model.eigenvalues, model.explained_variance_ratio, cum))]
