"""Binary soft-margin SVM with an RBF kernel, trained by SMO.

The dual problem

    min_a  1/2 a'Qa - e'a    s.t.  0 <= a_i <= C_i,  y'a = 0,
    Q_ij = y_i y_j K(x_i, x_j)

is solved by pairwise coordinate descent.  Each step takes i from I_up with
the maximal KKT violation (largest -y G).  With ``working_set="mvp"`` j is
its maximal violating partner in I_low; the default ``"second_order"`` picks
j among the violating partners by the largest guaranteed decrease of the
objective, which needs far fewer steps on overlapping classes.  The
two-variable subproblem is solved in closed form and training stops once
the violation gap m(a) - M(a) drops below ``tol``.
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import asdict, dataclass, field, replace
from typing import Optional

import numpy as np

from .errors import DimensionMismatch, NonConvergence, SingleClass

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is a declared dependency
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f

TAU = 1e-12
WORKING_SETS = ("second_order", "mvp")


@dataclass(frozen=True)
class SvmParams:
    C: float = 1.0
    gamma: float = 1.0
    # None means "balanced": n / (2 * n_class), resolved at training time
    class_weight_pos: Optional[float] = None
    class_weight_neg: Optional[float] = None
    tol: float = 1e-3
    max_passes: int = 1000
    working_set: str = "second_order"

    def __post_init__(self):
        if self.working_set not in WORKING_SETS:
            raise ValueError(f"working_set must be one of {WORKING_SETS}, got {self.working_set!r}")
        if not self.C > 0:
            raise ValueError(f"C must be positive, got {self.C}")
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        for w in (self.class_weight_pos, self.class_weight_neg):
            if w is not None and not w >= 0:
                raise ValueError(f"class weights must be non-negative, got {w}")

    @classmethod
    def unweighted(cls, C=1.0, gamma=1.0, **kw) -> "SvmParams":
        return cls(C=C, gamma=gamma, class_weight_pos=1.0, class_weight_neg=1.0, **kw)


@dataclass(frozen=True)
class SvmModel:
    support_vectors: np.ndarray
    dual_coef: np.ndarray  # alpha_i * y_i
    bias: float
    params: SvmParams
    training_meta: dict = field(default_factory=dict)

    @property
    def n_features(self) -> int:
        return self.support_vectors.shape[1]

    def to_dict(self) -> dict:
        return {
            "params": asdict(self.params),
            "bias": self.bias,
            "support_vectors": self.support_vectors.tolist(),
            "dual_coef": self.dual_coef.tolist(),
            "training_meta": self.training_meta,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SvmModel":
        sv = np.asarray(d["support_vectors"], dtype=float)
        if sv.ndim != 2:
            sv = sv.reshape(0, 0)
        return cls(
            support_vectors=sv,
            dual_coef=np.asarray(d["dual_coef"], dtype=float),
            bias=float(d["bias"]),
            params=SvmParams(**d["params"]),
            training_meta=dict(d.get("training_meta", {})),
        )


def rbf_kernel(x, y, gamma: float) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise DimensionMismatch(f"kernel arguments differ in shape: {x.shape} vs {y.shape}")
    if gamma < 0:
        raise ValueError(f"gamma must be non-negative, got {gamma}")
    diff = x - y
    return math.exp(-gamma * float(diff @ diff))


def rbf_kernel_matrix(A, B, gamma: float) -> np.ndarray:
    """K[i, j] = exp(-gamma * |A_i - B_j|^2)."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    if A.shape[1] != B.shape[1]:
        raise DimensionMismatch(f"feature counts differ: {A.shape[1]} vs {B.shape[1]}")
    sq = (A * A).sum(1)[:, None] + (B * B).sum(1)[None, :] - 2.0 * (A @ B.T)
    np.maximum(sq, 0.0, out=sq)
    sq *= -gamma
    return np.exp(sq, out=sq)


def _as_signs(y) -> np.ndarray:
    y = np.asarray(y)
    if y.dtype == bool:
        return np.where(y, 1.0, -1.0)
    return np.where(y.astype(float) > 0, 1.0, -1.0)


def balanced_weights(y) -> tuple[float, float]:
    """(positive, negative) weights n / (2 * n_class)."""
    s = _as_signs(y)
    n = s.size
    n_pos = int((s > 0).sum())
    n_neg = n - n_pos
    if n_pos == 0 or n_neg == 0:
        raise SingleClass("both classes are required")
    return n / (2.0 * n_pos), n / (2.0 * n_neg)


@njit(cache=True)
def _smo(K, y, C, tol, max_iter, second_order):
    n = y.shape[0]
    alpha = np.zeros(n)
    G = -np.ones(n)
    it = 0
    converged = False
    while it < max_iter:
        gmax = -np.inf
        gmin = np.inf
        i = -1
        j = -1
        for t in range(n):
            if (y[t] > 0 and alpha[t] < C[t]) or (y[t] < 0 and alpha[t] > 0):
                yg = -y[t] * G[t]
                if yg > gmax:
                    gmax = yg
                    i = t
        if i < 0:
            converged = True
            break
        Ki = K[i]
        best = np.inf
        for t in range(n):
            if (y[t] < 0 and alpha[t] < C[t]) or (y[t] > 0 and alpha[t] > 0):
                yg = -y[t] * G[t]
                if yg < gmin:
                    gmin = yg
                    if not second_order:
                        j = t
                if second_order:
                    b = gmax - yg
                    if b > 0:
                        a = K[i, i] + K[t, t] - 2.0 * Ki[t]
                        if a <= 0:
                            a = TAU
                        gain = -(b * b) / a
                        if gain <= best:
                            best = gain
                            j = t
        if i < 0 or j < 0 or gmax - gmin < tol:
            converged = True
            break
        it += 1

        Ci = C[i]
        Cj = C[j]
        ai_old = alpha[i]
        aj_old = alpha[j]
        quad = K[i, i] + K[j, j] - 2.0 * K[i, j]
        if quad <= 0:
            quad = TAU
        ai = ai_old
        aj = aj_old
        if y[i] != y[j]:
            delta = (-G[i] - G[j]) / quad
            diff = ai - aj
            ai += delta
            aj += delta
            if diff > 0:
                if aj < 0:
                    aj = 0.0
                    ai = diff
            else:
                if ai < 0:
                    ai = 0.0
                    aj = -diff
            if diff > Ci - Cj:
                if ai > Ci:
                    ai = Ci
                    aj = Ci - diff
            else:
                if aj > Cj:
                    aj = Cj
                    ai = Cj + diff
        else:
            delta = (G[i] - G[j]) / quad
            s = ai + aj
            ai -= delta
            aj += delta
            if s > Ci:
                if ai > Ci:
                    ai = Ci
                    aj = s - Ci
            else:
                if aj < 0:
                    aj = 0.0
                    ai = s
            if s > Cj:
                if aj > Cj:
                    aj = Cj
                    ai = s - Cj
            else:
                if ai < 0:
                    ai = 0.0
                    aj = s
        alpha[i] = ai
        alpha[j] = aj

        dai = (ai - ai_old) * y[i]
        daj = (aj - aj_old) * y[j]
        Kj = K[j]
        for t in range(n):
            G[t] += y[t] * (Ki[t] * dai + Kj[t] * daj)
    return alpha, G, it, converged


def _bias(alpha, G, y, C) -> float:
    """Mean of y_i - sum_j a_j y_j K_ij over free vectors; midpoint of the feasible range otherwise."""
    yG = y * G
    # clipping can leave a multiplier a few ulps inside its box
    upper = alpha >= C * (1.0 - 1e-12)
    lower = alpha <= C * 1e-12
    free = ~(upper | lower)
    if free.any():
        rho = float(yG[free].mean())
    else:
        # bounds on rho from KKT at alpha = 0 or alpha = C
        ub_mask = (upper & (y < 0)) | (lower & (y > 0))
        lb_mask = (upper & (y > 0)) | (lower & (y < 0))
        ub = float(yG[ub_mask].min()) if ub_mask.any() else np.inf
        lb = float(yG[lb_mask].max()) if lb_mask.any() else -np.inf
        rho = (ub + lb) / 2.0
    return -rho


def svm_train(X, y, params: SvmParams, kernel: Optional[np.ndarray] = None) -> SvmModel:
    """Train on rows of ``X`` with labels ``y`` (bool or +/-1).

    ``kernel`` may carry a precomputed Gram matrix for ``X`` at ``params.gamma``
    so that callers sweeping C can reuse it.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise DimensionMismatch(f"expected a 2-D matrix, got shape {X.shape}")
    ys = _as_signs(y)
    n = X.shape[0]
    if ys.shape[0] != n:
        raise DimensionMismatch(f"{n} rows but {ys.shape[0]} labels")
    if n < 2:
        raise SingleClass("need at least two samples")
    n_pos = int((ys > 0).sum())
    if n_pos == 0 or n_pos == n:
        raise SingleClass("training labels contain a single class")

    w_pos, w_neg = balanced_weights(ys)
    if params.class_weight_pos is not None:
        w_pos = params.class_weight_pos
    if params.class_weight_neg is not None:
        w_neg = params.class_weight_neg
    params = replace(params, class_weight_pos=float(w_pos), class_weight_neg=float(w_neg))
    Cvec = np.where(ys > 0, params.C * w_pos, params.C * w_neg)

    if kernel is None:
        kernel = rbf_kernel_matrix(X, X, params.gamma)
    elif kernel.shape != (n, n):
        raise DimensionMismatch(f"kernel shape {kernel.shape} does not match {n} rows")
    max_iter = int(params.max_passes) * max(n, 100)
    alpha, G, iters, converged = _smo(np.ascontiguousarray(kernel), ys, Cvec,
                                      float(params.tol), max_iter,
                                      params.working_set == "second_order")
    if not converged:
        warnings.warn(NonConvergence(
            f"SMO stopped after {iters} iterations without reaching tol={params.tol}"
        ))

    bias = _bias(alpha, G, ys, Cvec)
    objective = float(alpha.sum() - 0.5 * alpha @ (G + 1.0))
    sv = alpha > 0
    meta = {
        "iterations": int(iters),
        "objective": objective,
        "converged": bool(converged),
        "n_train": int(n),
        "n_support": int(sv.sum()),
    }
    return SvmModel(support_vectors=X[sv].copy(), dual_coef=(alpha * ys)[sv].copy(),
                    bias=float(bias), params=params, training_meta=meta)


def decision_function(model: SvmModel, X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != model.n_features:
        raise DimensionMismatch(f"model expects {model.n_features} features, got {X.shape[1]}")
    if model.dual_coef.size == 0:
        return np.full(X.shape[0], model.bias)
    out = np.empty(X.shape[0])
    # chunk to bound the kernel block at ~32 MB
    step = max(1, 4_000_000 // max(model.dual_coef.size, 1))
    for start in range(0, X.shape[0], step):
        Kb = rbf_kernel_matrix(X[start:start + step], model.support_vectors, model.params.gamma)
        out[start:start + step] = Kb @ model.dual_coef + model.bias
    return out


def decision_value(model: SvmModel, x) -> float:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise DimensionMismatch(f"expected a single feature vector, got shape {x.shape}")
    return float(decision_function(model, x[None, :])[0])


def predict(model: SvmModel, x) -> bool:
    """True (saccade) iff the decision value is strictly positive."""
    return decision_value(model, x) > 0.0


def predict_many(model: SvmModel, X) -> np.ndarray:
    return decision_function(model, X) > 0.0


def save_model(path, svm_model: SvmModel, pca_model=None, extra: Optional[dict] = None) -> None:
    """Write the classifier (and the PCA it expects upstream) as JSON.

    Floats are written with ``repr`` precision, so a round trip reproduces
    decision values exactly.
    """
    doc = {"format": "vrsaccade-model/1", "svm": svm_model.to_dict(),
           "pca": None if pca_model is None else pca_model.to_dict()}
    if extra:
        doc.update(extra)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def load_model(path):
    """Return ``(svm_model, pca_model_or_None, document)``."""
    from .pca import PcaModel

    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    svm_model = SvmModel.from_dict(doc["svm"])
    pca_model = None if doc.get("pca") is None else PcaModel.from_dict(doc["pca"])
    return svm_model, pca_model, doc
