"""Otsu-style threshold search over per-sample agreement values.

Splitting the values at the threshold that maximizes between-class over
within-class variance yields a main threshold s plus the two class means
mu1 < mu2, giving four noisiness buckets and their mixing weights.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateDistributionError,
    RejectedInputError,
    RejectedThresholdError,
)

VARIANCE_EPS = 1e-12  # keeps the objective finite when a class collapses
TIE_REL_TOL = 1e-9    # objective values this close count as tied


def _as_unit_values(values, min_size: int = 1) -> np.ndarray:
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 1 or v.size < min_size:
        raise RejectedInputError(f"values must be 1-D with >= {min_size} entries")
    if v.size and (not np.all(np.isfinite(v)) or v.min() < 0.0 or v.max() > 1.0):
        raise RejectedInputError("values must lie in [0, 1]")
    return v


def otsu_objective(values, s: float) -> float:
    """Between-class over within-class variance ratio at threshold s.

    Classes are {v <= s} and {v > s}; variances are population variances and
    the denominator carries a 1e-12 floor. Both classes must be non-empty.
    """
    v = _as_unit_values(values)
    lower = v[v <= s]
    upper = v[v > s]
    if lower.size == 0 or upper.size == 0:
        raise RejectedThresholdError(f"threshold {s} leaves an empty class")
    mu = float(np.mean(v))
    n1, n2 = lower.size, upper.size
    mu1, mu2 = float(np.mean(lower)), float(np.mean(upper))
    var1, var2 = float(np.var(lower)), float(np.var(upper))
    between = n1 * (mu1 - mu) ** 2 + n2 * (mu2 - mu) ** 2
    within = n1 * var1 + n2 * var2
    return float(between / (within + VARIANCE_EPS))


@dataclass(frozen=True)
class OtsuSplit:
    """Chosen threshold with per-class statistics (mu1 <= s < mu2)."""

    s: float
    mu1: float
    mu2: float
    sigma1: float
    sigma2: float
    n1: int
    n2: int
    q: float


def otsu_split(values, step: float = 0.001) -> OtsuSplit:
    """Exhaustive objective maximization over the threshold grid {step, 2*step, ...}.

    Only grid points with both classes non-empty are admissible. Among the
    points whose objective is within relative 1e-9 of the maximum, the
    longest contiguous run wins (the first such run on a length tie) and its
    midpoint is returned, snapped to the grid (upper-middle for even runs).
    """
    if not (0.0 < step < 1.0):
        raise RejectedInputError(f"step must lie in (0, 1), got {step}")
    v = _as_unit_values(values, min_size=2)
    if float(v.max() - v.min()) < step:
        raise DegenerateDistributionError(
            "value range is narrower than the grid step; no admissible threshold"
        )

    n = v.size
    sv = np.sort(v)
    csum = np.cumsum(sv)
    csq = np.cumsum(sv * sv)
    total, total_sq = csum[-1], csq[-1]
    mu = total / n

    n_grid = int(round(1.0 / step)) - 1
    grid = np.arange(1, n_grid + 1) * step
    m1 = np.searchsorted(sv, grid, side="right")  # lower-class sizes per threshold
    admissible = (m1 >= 1) & (m1 <= n - 1)
    if not np.any(admissible):
        raise DegenerateDistributionError("no grid threshold separates the values")
    offset = int(np.argmax(admissible))  # admissible region is one contiguous block
    m1 = m1[admissible]

    s1 = csum[m1 - 1]
    q1 = csq[m1 - 1]
    n2 = n - m1
    mu1 = s1 / m1
    mu2 = (total - s1) / n2
    var1 = np.maximum(q1 / m1 - mu1 * mu1, 0.0)
    var2 = np.maximum((total_sq - q1) / n2 - mu2 * mu2, 0.0)
    q = (m1 * (mu1 - mu) ** 2 + n2 * (mu2 - mu) ** 2) / (m1 * var1 + n2 * var2 + VARIANCE_EPS)

    tied = q >= q.max() * (1.0 - TIE_REL_TOL)
    lo, hi = _longest_true_run(tied)
    mid = (lo + hi + 1) // 2
    s = float(grid[offset + mid])

    lower = v[v <= s]
    upper = v[v > s]
    return OtsuSplit(
        s=s,
        mu1=float(np.mean(lower)),
        mu2=float(np.mean(upper)),
        sigma1=float(np.std(lower)),
        sigma2=float(np.std(upper)),
        n1=int(lower.size),
        n2=int(upper.size),
        q=otsu_objective(v, s),
    )


def _longest_true_run(mask: np.ndarray) -> tuple[int, int]:
    """Bounds (inclusive) of the longest run of True; first run wins ties."""
    best_lo = best_hi = -1
    run_lo = None
    for i, flag in enumerate(mask):
        if flag and run_lo is None:
            run_lo = i
        elif not flag and run_lo is not None:
            if i - run_lo > best_hi - best_lo + 1 or best_lo < 0:
                best_lo, best_hi = run_lo, i - 1
            run_lo = None
    if run_lo is not None and (mask.size - run_lo > best_hi - best_lo + 1 or best_lo < 0):
        best_lo, best_hi = run_lo, mask.size - 1
    return best_lo, best_hi


@dataclass(frozen=True)
class AlphaSchedule:
    """Fixed mixing weights for the four noisiness buckets, strictly increasing."""

    alpha1: float
    alpha2: float
    alpha3: float
    alpha4: float

    def __post_init__(self):
        a = self.as_tuple()
        if any(not (0.0 <= x <= 1.0) for x in a):
            raise RejectedInputError(f"alpha values must lie in [0, 1], got {a}")
        if not (a[0] < a[1] < a[2] < a[3]):
            raise RejectedInputError(f"alpha values must be strictly increasing, got {a}")

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.alpha1, self.alpha2, self.alpha3, self.alpha4)


@dataclass(frozen=True)
class BucketAssignment:
    """Per-sample bucket index (1..4, 1 = most trusted) and mixing weight."""

    buckets: np.ndarray
    alphas: np.ndarray


def assign_buckets(agreement_at_label, split: OtsuSplit, schedule: AlphaSchedule) -> BucketAssignment:
    """Bucket samples by agreement value against (mu2, s, mu1), inclusive upward.

    bucket 1: v >= mu2; bucket 2: s <= v < mu2; bucket 3: mu1 <= v < s;
    bucket 4: v < mu1. Higher buckets trust the annotation less, so they get
    the larger alpha.
    """
    v = _as_unit_values(agreement_at_label)
    buckets = np.where(v >= split.mu2, 1, np.where(v >= split.s, 2, np.where(v >= split.mu1, 3, 4)))
    alphas = np.asarray(schedule.as_tuple())[buckets - 1]
    return BucketAssignment(buckets=buckets.astype(np.int64), alphas=alphas)
