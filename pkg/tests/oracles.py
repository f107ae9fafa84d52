"""Slow, independent reference implementations used only by the tests.

None of these share code with the package.  They trade speed for being
easy to check by eye.
"""
from __future__ import annotations

import math

import numpy as np


def quantile_bruteforce(values, p: float) -> float:
    """Linear-interpolation quantile straight from the order statistics."""
    xs = sorted(values)
    h = (len(xs) - 1) * p
    below = int(math.floor(h))
    above = min(below + 1, len(xs) - 1)
    return xs[below] + (h - below) * (xs[above] - xs[below])


def jacobi_eigenvalues(A, sweeps: int = 100, eps: float = 1e-15) -> np.ndarray:
    """Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, descending."""
    a = np.array(A, dtype=float)
    n = a.shape[0]
    for _ in range(sweeps):
        off = math.sqrt(sum(a[i, j] ** 2 for i in range(n) for j in range(n) if i != j))
        if off < eps * max(1.0, float(np.abs(a).max())):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if a[p, q] == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * a[p, q])
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                rot = np.eye(n)
                rot[p, p] = rot[q, q] = c
                rot[p, q] = s
                rot[q, p] = -s
                a = rot.T @ a @ rot
    return np.sort(np.diag(a))[::-1]


def covariance_bruteforce(X) -> np.ndarray:
    """Sample covariance (ddof=1) with explicit loops."""
    X = [list(map(float, row)) for row in X]
    n, d = len(X), len(X[0])
    mean = [sum(r[j] for r in X) / n for j in range(d)]
    out = np.zeros((d, d))
    for i in range(d):
        for j in range(d):
            out[i, j] = sum((r[i] - mean[i]) * (r[j] - mean[j]) for r in X) / (n - 1)
    return out


def rbf_gram(X, gamma: float) -> np.ndarray:
    n = len(X)
    K = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            diff = np.asarray(X[i], dtype=float) - np.asarray(X[j], dtype=float)
            K[i, j] = math.exp(-gamma * float(diff @ diff))
    return K


def _project(v, y, C):
    """Euclidean projection onto {0 <= a <= C, y.a = 0} by bisection on the multiplier."""
    def g(lam):
        return float(y @ np.clip(v - lam * y, 0.0, C))

    lo, hi = -1.0, 1.0
    while g(lo) < 0:
        lo *= 2
    while g(hi) > 0:
        hi *= 2
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if g(mid) > 0:
            lo = mid
        else:
            hi = mid
    return np.clip(v - 0.5 * (lo + hi) * y, 0.0, C)


def dual_qp(K, y, C, iters: int = 100_000, tol: float = 1e-10):
    """Maximize sum(a) - a'Qa/2 subject to the SVM dual constraints.

    Accelerated projected gradient ascent.  Every 50 steps the iterate is
    polished by solving the KKT system on its free multipliers, and the
    search stops once the polished point is optimal.  ``C`` may be a
    per-sample vector.  Returns ``(alpha, objective)``.
    """
    y = np.asarray(y, dtype=float)
    Q = (y[:, None] * y[None, :]) * np.asarray(K, dtype=float)
    C = np.broadcast_to(np.asarray(C, dtype=float), y.shape)
    step = 1.0 / max(np.linalg.eigvalsh(Q).max(), 1e-12)
    a = np.zeros_like(y)
    z = a.copy()
    t = 1.0
    for it in range(iters):
        if it % 50 == 49:
            cand = _polish(a, Q, y, C)
            if _kkt_gap(cand, Q, y, C) < tol:
                a = cand
                break
        a_next = _project(z + step * (1.0 - Q @ z), y, C)
        if (1.0 - Q @ a_next) @ (a_next - a) < 0:
            # objective went down: drop the momentum
            z, t = a.copy(), 1.0
            continue
        t_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
        z = a_next + ((t - 1.0) / t_next) * (a_next - a)
        a, t = a_next, t_next
    return a, float(a.sum() - 0.5 * a @ Q @ a)


def _kkt_gap(a, Q, y, C) -> float:
    """max over I_up of y*grad minus min over I_low of y*grad (<= 0 at the optimum)."""
    if np.any(a < 0) or np.any(a > C) or abs(float(y @ a)) > 1e-10:
        return math.inf
    yg = y * (1.0 - Q @ a)
    up = ((a < C) & (y > 0)) | ((a > 0) & (y < 0))
    low = ((a < C) & (y < 0)) | ((a > 0) & (y > 0))
    return float(yg[up].max() - yg[low].min())


def _polish(a, Q, y, C, eps: float = 1e-6):
    """Solve Q_FF a_F + b y_F = 1 - Q_FB a_B, y.a = 0 with the bound set held fixed."""
    fixed = np.where(a >= C - eps, C, 0.0)
    free = (a > eps) & (a < C - eps)
    F = np.flatnonzero(free)
    m = F.size
    if m == 0:
        return fixed
    A = np.zeros((m + 1, m + 1))
    A[:m, :m] = Q[np.ix_(F, F)]
    A[:m, m] = y[F]
    A[m, :m] = y[F]
    rhs = np.empty(m + 1)
    rhs[:m] = 1.0 - Q[F] @ fixed
    rhs[m] = -float(y @ fixed)
    try:
        sol = np.linalg.solve(A, rhs)
    except np.linalg.LinAlgError:
        return a
    out = fixed.copy()
    out[F] = sol[:m]
    return out


def dual_bias(alpha, K, y, C, eps: float = 1e-7) -> float:
    """Offset from free multipliers, or the middle of the feasible interval."""
    y = np.asarray(y, dtype=float)
    C = np.broadcast_to(np.asarray(C, dtype=float), y.shape)
    f0 = np.asarray(K) @ (alpha * y)
    free = (alpha > eps) & (alpha < C - eps)
    if free.any():
        return float(np.mean(y[free] - f0[free]))
    lower, upper = -np.inf, np.inf
    for i in range(y.size):
        at_zero = alpha[i] <= eps
        # y_i (f0_i + b) >= 1 at zero, <= 1 at C
        bound = y[i] - f0[i]
        if (at_zero and y[i] > 0) or (not at_zero and y[i] < 0):
            lower = max(lower, bound)
        else:
            upper = min(upper, bound)
    return 0.5 * (lower + upper)


def weighted_metrics_bruteforce(m):
    """Per-class precision/recall/F1 averaged by true-class support, spelled out."""
    (tn, fp), (fn, tp) = m
    total = tn + fp + fn + tp

    def div(a, b):
        return a / b if b else 0.0

    rows = []
    for tp_c, fp_c, fn_c in ((tn, fn, fp), (tp, fp, fn)):
        p = div(tp_c, tp_c + fp_c)
        r = div(tp_c, tp_c + fn_c)
        rows.append((p, r, div(2 * p * r, p + r), tp_c + fn_c))
    acc = div(tn + tp, total)
    pw = sum(p * s for p, _, _, s in rows) / total
    rw = sum(r * s for _, r, _, s in rows) / total
    fw = sum(f * s for _, _, f, s in rows) / total
    return acc, pw, rw, fw
