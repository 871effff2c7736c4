"""Paired comparison statistics."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import betainc


@dataclass(frozen=True)
class PairedTestResult:
    mean_diff: float
    t_statistic: float
    p_value: float
    n: int
    degenerate: bool = False


def student_t_sf2(t: float, df: int) -> float:
    """Two-sided tail probability of Student's t via the incomplete beta
    identity p = I_{df/(df+t^2)}(df/2, 1/2)."""
    if df < 1:
        raise ValueError("df must be >= 1")
    t2 = t * t
    return float(betainc(df / 2.0, 0.5, df / (df + t2)))


def paired_t_test(baseline: Sequence[float], treatment: Sequence[float]) -> PairedTestResult:
    """Two-sided paired t-test of treatment against baseline.

    Differences with zero sample variance leave t undefined; that case is
    reported as t=0, p=1 with the degenerate flag set (including the
    constant-shift case where the mean difference is nonzero).
    """
    x = np.asarray(baseline, dtype=np.float64)
    y = np.asarray(treatment, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("baseline and treatment must be equal-length 1-D sequences")
    n = x.size
    if n < 2:
        raise ValueError("need at least 2 pairs")
    d = y - x
    mean = float(np.mean(d))
    sd = float(np.std(d, ddof=1))
    if sd == 0.0 or not math.isfinite(sd):
        return PairedTestResult(mean, 0.0, 1.0, n, degenerate=True)
    t = mean / (sd / math.sqrt(n))
    return PairedTestResult(mean, t, student_t_sf2(t, n - 1), n)
