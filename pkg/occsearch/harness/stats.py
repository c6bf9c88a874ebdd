"""
Summary statistics and the one sided two sample t test
"""
import math

import numpy as np
from scipy import stats


def mean_stderr(values):
    """Mean and standard error (sample stddev / sqrt(n), 0 for one value)"""
    values = np.asarray(values, dtype=np.float64)
    if len(values) == 0:
        raise ValueError("values should not be empty")
    if len(values) == 1:
        return float(values[0]), 0.0
    return float(values.mean()), float(values.std(ddof=1) / math.sqrt(len(values)))


def welch_t(a, b):
    """
    Welch's t statistic for the hypothesis that a has the smaller mean

    Returns (t, df, p): t = (mean_b - mean_a) / se is positive when a is
    lower, p the one sided probability of a t at least that large. With no
    variance on either side t is infinite (0 when the means agree).
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if len(a) < 2 or len(b) < 2:
        return math.nan, math.nan, math.nan
    va = a.var(ddof=1) / len(a)
    vb = b.var(ddof=1) / len(b)
    diff = float(b.mean() - a.mean())
    se2 = va + vb
    if se2 == 0.0:
        if diff == 0.0:
            return 0.0, math.inf, 0.5
        return math.copysign(math.inf, diff), math.inf, 0.0 if diff > 0 else 1.0
    t = diff / math.sqrt(se2)
    df = se2 ** 2 / (va ** 2 / (len(a) - 1) + vb ** 2 / (len(b) - 1))
    return float(t), float(df), float(stats.t.sf(t, df))
