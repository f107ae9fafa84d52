"""Inter-eye gaze direction differences and their summary statistics."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import AllRemoved, EmptyAfterFiltering, EmptyInput, InvalidSample
from .ingest import GazeSample, Session
from .preprocess import EXTREME_K, IqrFences, filter_invalid, filter_outliers, iqr_fences

UNIT_TOL = 1e-6


@dataclass(frozen=True)
class DivergenceStats:
    min: float
    max: float
    mean: float
    n_used: int
    n_removed_invalid: int = 0
    n_removed_outlier: int = 0
    fences: IqrFences | None = None


def _check(sample: GazeSample):
    if not (sample.valid_left and sample.valid_right):
        raise InvalidSample(f"sample at t={sample.timestamp_s} has an invalid eye")
    for name in ("left_gaze_dir", "right_gaze_dir"):
        v = getattr(sample, name)
        if abs(math.hypot(*v) - 1.0) > UNIT_TOL:
            raise InvalidSample(f"{name} at t={sample.timestamp_s} is not unit length")


def per_eye_difference(sample: GazeSample) -> float:
    """Euclidean distance between the left and right unit gaze directions (0..2)."""
    _check(sample)
    return math.dist(sample.left_gaze_dir, sample.right_gaze_dir)


def per_eye_angle_deg(sample: GazeSample) -> float:
    """Angle between the two gaze directions; equals 2*asin(d/2) for distance d."""
    d = per_eye_difference(sample)
    return math.degrees(2.0 * math.asin(min(d / 2.0, 1.0)))


def divergence_series(session: Session) -> list[float]:
    clean, _ = filter_invalid(session)
    if not clean.samples:
        raise EmptyAfterFiltering(
            f"session {session.participant_id!r} has no samples with valid gaze rays"
        )
    return [per_eye_difference(s) for s in clean.samples]


def divergence_stats(series: Sequence[float], k: float = EXTREME_K) -> DivergenceStats:
    """Min/max/mean of ``series`` after one pass of IQR fences with multiplier ``k``."""
    if len(series) == 0:
        raise EmptyInput("divergence series is empty")
    fences = iqr_fences(series, k)
    kept, removed = filter_outliers(series, fences)
    if not kept:
        raise AllRemoved("every value fell outside the IQR fences")
    arr = np.asarray(kept, dtype=float)
    lo, hi = float(arr.min()), float(arr.max())
    # float summation can push the mean a hair outside [min, max]
    mean = min(max(float(arr.mean()), lo), hi)
    return DivergenceStats(min=lo, max=hi, mean=mean, n_used=len(kept),
                           n_removed_outlier=len(removed), fences=fences)


def analyze_session(session: Session, k: float = EXTREME_K):
    """Series (with timestamps) and stats for one session.

    Returns ``(timestamps, series, stats)`` where ``stats.n_removed_invalid``
    counts samples dropped for invalid gaze rays before the fences.
    """
    clean, n_invalid = filter_invalid(session)
    if not clean.samples:
        raise EmptyAfterFiltering(
            f"session {session.participant_id!r} has no samples with valid gaze rays"
        )
    series = [per_eye_difference(s) for s in clean.samples]
    stats = divergence_stats(series, k)
    stats = DivergenceStats(stats.min, stats.max, stats.mean, stats.n_used,
                            n_invalid, stats.n_removed_outlier, stats.fences)
    return clean.timestamps, series, stats
