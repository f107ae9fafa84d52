"""Sample moments and D'Agostino's K-squared omnibus normality test."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import TooFewSamples, ZeroVariance

MIN_K2_SAMPLES = 20
P_FLOOR = 1e-300


@dataclass(frozen=True)
class NormalityReport:
    n: int
    g1: float  # sample skewness
    g2: float  # sample excess kurtosis
    z1: float
    z2: float
    k2: float
    p: float

    def rejects(self, alpha: float = 0.05) -> bool:
        return self.p < alpha


def _as_array(values) -> np.ndarray:
    x = np.asarray(values, dtype=float).ravel()
    if x.size < 3:
        raise TooFewSamples(f"need at least 3 values for moments, got {x.size}")
    if np.ptp(x) == 0.0:
        raise ZeroVariance("all values are identical")
    return x


def moments(values: Sequence[float]) -> tuple[float, float]:
    """Biased sample skewness g1 and excess kurtosis g2."""
    x = _as_array(values)
    d = x - x.mean()
    m2 = np.mean(d**2)
    m3 = np.mean(d**3)
    m4 = np.mean(d**4)
    return float(m3 / m2**1.5), float(m4 / m2**2 - 3.0)


def skewness_z(g1: float, n: int) -> float:
    """D'Agostino's normalizing transform of the sample skewness."""
    y = g1 * math.sqrt((n + 1) * (n + 3) / (6.0 * (n - 2)))
    beta2 = (3.0 * (n * n + 27 * n - 70) * (n + 1) * (n + 3)
             / ((n - 2.0) * (n + 5) * (n + 7) * (n + 9)))
    w2 = -1.0 + math.sqrt(2.0 * (beta2 - 1.0))
    delta = 1.0 / math.sqrt(0.5 * math.log(w2))
    alpha = math.sqrt(2.0 / (w2 - 1.0))
    return delta * math.asinh(y / alpha)


def kurtosis_z(g2: float, n: int) -> float:
    """Anscombe-Glynn normalizing transform of the sample kurtosis."""
    b2 = g2 + 3.0
    mean_b2 = 3.0 * (n - 1) / (n + 1)
    var_b2 = 24.0 * n * (n - 2) * (n - 3) / ((n + 1) ** 2 * (n + 3) * (n + 5))
    x = (b2 - mean_b2) / math.sqrt(var_b2)
    sqrt_beta1 = (6.0 * (n * n - 5 * n + 2) / ((n + 7) * (n + 9))
                  * math.sqrt(6.0 * (n + 3) * (n + 5) / (n * (n - 2) * (n - 3))))
    a = 6.0 + 8.0 / sqrt_beta1 * (2.0 / sqrt_beta1 + math.sqrt(1.0 + 4.0 / sqrt_beta1**2))
    term1 = 1.0 - 2.0 / (9.0 * a)
    denom = 1.0 + x * math.sqrt(2.0 / (a - 4.0))
    if denom == 0.0:
        return math.nan
    term2 = math.copysign(((1.0 - 2.0 / a) / abs(denom)) ** (1.0 / 3.0), denom)
    return (term1 - term2) / math.sqrt(2.0 / (9.0 * a))


def chi2_2dof_sf(k2: float) -> float:
    """Survival function of chi-square with two degrees of freedom."""
    p = math.exp(-k2 / 2.0)
    return 0.0 if p < P_FLOOR else p


def dagostino_k2(values: Sequence[float]) -> NormalityReport:
    x = _as_array(values)
    n = x.size
    if n < MIN_K2_SAMPLES:
        raise TooFewSamples(f"K-squared test needs at least {MIN_K2_SAMPLES} values, got {n}")
    g1, g2 = moments(x)
    z1 = skewness_z(g1, n)
    z2 = kurtosis_z(g2, n)
    k2 = z1 * z1 + z2 * z2
    return NormalityReport(n=n, g1=g1, g2=g2, z1=z1, z2=z2, k2=k2, p=chi2_2dof_sf(k2))
