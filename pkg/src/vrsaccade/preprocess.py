"""Row cleaning: invalid gaze rays and Tukey-fence outlier removal."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

from .errors import EmptyInput
from .ingest import Session

EXTREME_K = 3.0


@dataclass(frozen=True)
class IqrFences:
    q1: float
    q3: float
    iqr: float
    k: float
    lo: float
    hi: float

    def contains(self, value: float) -> bool:
        return self.lo <= value <= self.hi


def filter_invalid(session: Session) -> tuple[Session, int]:
    """Drop every sample with any false validity flag; order is preserved."""
    kept = tuple(s for s in session.samples if s.all_valid)
    return replace(session, samples=kept), len(session.samples) - len(kept)


def quantile(sorted_values: Sequence[float], p: float) -> float:
    """Linear interpolation between order statistics at position (n-1)*p."""
    n = len(sorted_values)
    pos = (n - 1) * p
    lo = math.floor(pos)
    hi = min(lo + 1, n - 1)
    frac = pos - lo
    a, b = sorted_values[lo], sorted_values[hi]
    # a + frac*(b-a) is not exact when a == b for large magnitudes
    return a if frac == 0.0 or a == b else a + frac * (b - a)


def iqr_fences(values: Sequence[float], k: float = EXTREME_K) -> IqrFences:
    if len(values) == 0:
        raise EmptyInput("cannot compute quartiles of an empty list")
    if not k >= 0:
        raise ValueError(f"fence multiplier must be non-negative, got {k}")
    ordered = sorted(float(v) for v in values)
    q1 = quantile(ordered, 0.25)
    q3 = quantile(ordered, 0.75)
    iqr = q3 - q1
    return IqrFences(q1=q1, q3=q3, iqr=iqr, k=k, lo=q1 - k * iqr, hi=q3 + k * iqr)


def filter_outliers(values: Sequence[float], fences: IqrFences) -> tuple[list[float], list[int]]:
    """Split ``values`` into those inside the closed fences and the indices of the rest."""
    kept, removed = [], []
    for i, v in enumerate(values):
        if fences.contains(v):
            kept.append(v)
        else:
            removed.append(i)
    return kept, removed
