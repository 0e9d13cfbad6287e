"""Classical test statistics used by the window gate and effect ranking.

The statistics themselves are computed here (the chi-square collapse rule
and the KS effective-n convention are part of this package's contract);
scipy supplies only the distribution tail functions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import chi2 as _chi2_dist
from scipy.stats import kstwobign as _kstwobign

from .errors import DegenerateTable, EmptySample, SingleClass

EXPECTED_MIN = 5.0  # chi-square small-cell collapse threshold


@dataclass(frozen=True)
class TestResult:
    statistic: float
    p_value: float
    dof: int | None = None
    effective_n: float | None = None


def chi2_homogeneity(left: np.ndarray, right: np.ndarray) -> TestResult:
    """Pearson chi-square test that two groups share one categorical law.

    ``left`` and ``right`` are per-category counts over the same category
    axis. Zero-total categories are dropped; categories whose expected count
    falls below 5 in either group are collapsed into a single bucket. If
    fewer than two categories remain the table is degenerate and
    DegenerateTable is raised (callers treat that as "cannot test").

    No continuity correction is applied. Degrees of freedom = C - 1 for the
    final C categories.
    """
    left = np.asarray(left, dtype=np.float64)
    right = np.asarray(right, dtype=np.float64)
    if left.shape != right.shape or left.ndim != 1:
        raise ValueError("left and right must be 1-D count vectors of equal length")
    n_left = float(left.sum())
    n_right = float(right.sum())
    total = n_left + n_right
    if n_left <= 0 or n_right <= 0:
        raise DegenerateTable("a group has zero total count")

    col = left + right
    keep = col > 0
    left = left[keep]
    right = right[keep]
    col = col[keep]

    exp_left = n_left * col / total
    exp_right = n_right * col / total
    small = (exp_left < EXPECTED_MIN) | (exp_right < EXPECTED_MIN)
    if small.any():
        big = ~small
        l2 = list(left[big])
        r2 = list(right[big])
        bucket_l = float(left[small].sum())
        bucket_r = float(right[small].sum())
        if bucket_l + bucket_r > 0:
            l2.append(bucket_l)
            r2.append(bucket_r)
        left = np.asarray(l2)
        right = np.asarray(r2)
        col = left + right

    if left.size < 2:
        raise DegenerateTable(f"{left.size} usable categor{'y' if left.size == 1 else 'ies'} after collapsing")

    exp_left = n_left * col / total
    exp_right = n_right * col / total
    stat = float(((left - exp_left) ** 2 / exp_left).sum() + ((right - exp_right) ** 2 / exp_right).sum())
    dof = int(left.size - 1)
    p = float(_chi2_dist.sf(stat, dof))
    return TestResult(statistic=stat, p_value=p, dof=dof)


def ks_two_sample(a: np.ndarray, b: np.ndarray) -> TestResult:
    """Two-sample Kolmogorov-Smirnov test.

    D is the sup-distance between empirical CDFs (tie-safe); the p-value
    uses the asymptotic Kolmogorov distribution evaluated at
    sqrt(n_eff) * D with n_eff = |a||b| / (|a| + |b|). Identical samples
    give D = 0, p = 1.
    """
    a = np.sort(np.asarray(a, dtype=np.float64))
    b = np.sort(np.asarray(b, dtype=np.float64))
    m, n = a.size, b.size
    if m == 0 or n == 0:
        raise EmptySample("both samples must be non-empty")
    grid = np.concatenate([a, b])
    grid.sort(kind="mergesort")
    cdf_a = np.searchsorted(a, grid, side="right") / m
    cdf_b = np.searchsorted(b, grid, side="right") / n
    d = float(np.abs(cdf_a - cdf_b).max())
    n_eff = m * n / (m + n)
    if d == 0.0:
        p = 1.0
    else:
        p = float(_kstwobign.sf(math.sqrt(n_eff) * d))
        p = min(1.0, max(0.0, p))
    return TestResult(statistic=d, p_value=p, effective_n=n_eff)


def bonferroni_alpha(alpha: float, m: int) -> float:
    """Per-test significance level alpha / m."""
    if not 0 < alpha <= 1:
        raise ValueError(f"alpha must be in (0, 1], got {alpha}")
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    return alpha / m


def youden_threshold(scores: np.ndarray, labels: np.ndarray) -> tuple[float, float]:
    """Threshold maximizing Youden's J = sensitivity + specificity - 1.

    Candidates are midpoints between consecutive distinct sorted scores plus
    -inf/+inf sentinels; a score >= threshold predicts positive. Ties in J
    resolve toward the larger threshold. Returns (threshold, J).
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise ValueError("scores and labels must be 1-D arrays of equal length")
    pos_total = int((labels == 1).sum())
    neg_total = int((labels == 0).sum())
    if pos_total == 0 or neg_total == 0:
        raise SingleClass("labels must contain both classes")

    order = np.argsort(scores, kind="mergesort")
    s = scores[order]
    y = labels[order]
    distinct = np.unique(s)
    candidates = np.concatenate(
        [[-np.inf], (distinct[:-1] + distinct[1:]) / 2.0, [np.inf]]
    )
    # cumulative positives/negatives with score < candidate
    pos_cum = np.cumsum(y == 1)
    neg_cum = np.cumsum(y == 0)
    idx = np.searchsorted(s, candidates, side="left")
    pos_below = np.where(idx > 0, pos_cum[np.maximum(idx - 1, 0)], 0)
    neg_below = np.where(idx > 0, neg_cum[np.maximum(idx - 1, 0)], 0)
    tp = pos_total - pos_below
    tn = neg_below
    j = tp / pos_total + tn / neg_total - 1.0

    best = 0
    for i in range(1, len(candidates)):
        if j[i] >= j[best]:
            best = i  # ties resolve to the larger threshold
    return float(candidates[best]), float(j[best])


def sample_power(fp: int, fn: int) -> float:
    """Window power = 1 - FP / (FN + FP); defined as 1.0 when FP = FN = 0."""
    if fp < 0 or fn < 0:
        raise ValueError("counts must be non-negative")
    if fp + fn == 0:
        return 1.0
    return 1.0 - fp / (fn + fp)
