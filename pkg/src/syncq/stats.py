"""Output analysis: batch-means intervals, empirical CCDFs, running means."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import t as _student_t

__all__ = ["MeanCI", "mean_ci", "empirical_ccdf", "running_mean", "default_ccdf_grid"]


@dataclass(frozen=True)
class MeanCI:
    mean: float
    lo: float
    hi: float
    level: float
    batches: int
    batch_size: int

    def overlaps(self, other: "MeanCI") -> bool:
        return self.lo <= other.hi and other.lo <= self.hi


def mean_ci(samples, batches: int = 30, level: float = 0.95) -> MeanCI:
    """Batch-means Student-t interval from one long run.

    The samples are split into ``batches`` equal nonoverlapping batches
    (trailing remainder discarded) and the interval is built on the batch
    means, which absorbs serial correlation.
    """
    x = np.asarray(samples, dtype=float).ravel()
    if batches < 2:
        raise ValueError("need at least 2 batches")
    if x.size < 2 * batches:
        raise ValueError(f"need at least {2 * batches} samples for {batches} batches")
    if not 0.0 < level < 1.0:
        raise ValueError("confidence level must be in (0, 1)")
    size = x.size // batches
    means = x[:batches * size].reshape(batches, size).mean(axis=1)
    m = float(means.mean())
    s = float(means.std(ddof=1))
    tcrit = float(_student_t.ppf(0.5 + level / 2.0, batches - 1))
    half = tcrit * s / math.sqrt(batches)
    return MeanCI(mean=m, lo=m - half, hi=m + half, level=level,
                  batches=batches, batch_size=size)


def empirical_ccdf(samples, grid) -> np.ndarray:
    """Pairs (x, fraction of samples strictly greater than x); grid ascending."""
    x = np.asarray(samples, dtype=float).ravel()
    if x.size == 0:
        raise ValueError("empty sample")
    g = np.asarray(grid, dtype=float).ravel()
    if np.any(np.diff(g) < 0):
        raise ValueError("grid must be sorted ascending")
    xs = np.sort(x)
    tail = (x.size - np.searchsorted(xs, g, side="right")) / x.size
    return np.column_stack([g, tail])


def running_mean(samples) -> np.ndarray:
    """Element t is the mean of the first t samples (1-indexed prefixes)."""
    x = np.asarray(samples, dtype=float).ravel()
    if x.size == 0:
        raise ValueError("empty sample")
    return np.cumsum(x) / np.arange(1, x.size + 1)


def default_ccdf_grid(samples, points: int = 200) -> np.ndarray:
    """200 log-spaced points from the 1st percentile to the max sample.

    Falls back to linear spacing when the low end is not positive.
    """
    x = np.asarray(samples, dtype=float).ravel()
    if x.size == 0:
        raise ValueError("empty sample")
    lo = float(np.percentile(x, 1.0))
    hi = float(x.max())
    if hi <= lo:
        return np.array([lo])
    if lo > 0:
        return np.geomspace(lo, hi, points)
    return np.linspace(lo, hi, points)
