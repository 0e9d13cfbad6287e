"""Window-gate and ranking statistics: chi-square, KS, Youden, power."""
from __future__ import annotations

import numpy as np
import pytest

from rdtrial.errors import DegenerateTable, EmptySample, SingleClass
from rdtrial.stats import (
    bonferroni_alpha,
    chi2_homogeneity,
    ks_two_sample,
    sample_power,
    youden_threshold,
)


# ---------------------------------------------------------------------------
# chi-square homogeneity
# ---------------------------------------------------------------------------

def test_chi2_identical_groups():
    res = chi2_homogeneity(np.array([10, 10]), np.array([10, 10]))
    assert res.statistic == 0.0
    assert res.p_value == 1.0
    assert res.dof == 1


def test_chi2_hand_value():
    # groups [50, 10] vs [10, 50]: every expected count is 30, every
    # deviation is 20, so the statistic is 4 * 400 / 30 = 160 / 3
    res = chi2_homogeneity(np.array([50, 10]), np.array([10, 50]))
    assert res.statistic == pytest.approx(160.0 / 3.0, abs=1e-9)
    assert res.p_value < 1e-10
    assert res.dof == 1


def test_chi2_drops_empty_categories():
    # a category absent from both groups must not contribute
    a = chi2_homogeneity(np.array([50, 0, 10]), np.array([10, 0, 50]))
    b = chi2_homogeneity(np.array([50, 10]), np.array([10, 50]))
    assert a.statistic == pytest.approx(b.statistic, abs=1e-12)
    assert a.dof == b.dof


def test_chi2_degenerate_tables():
    with pytest.raises(DegenerateTable):
        chi2_homogeneity(np.array([0, 0]), np.array([5, 5]))  # zero group total
    with pytest.raises(DegenerateTable):
        chi2_homogeneity(np.array([20]), np.array([30]))  # one category
    with pytest.raises(DegenerateTable):
        # every expected count is under 5: all categories collapse into one
        chi2_homogeneity(np.array([3, 2]), np.array([2, 3]))


def test_chi2_small_expected_collapse():
    # two sparse categories merge into one bucket: dof drops from 3 to 2
    res = chi2_homogeneity(np.array([50, 2, 3, 45]), np.array([50, 3, 2, 45]))
    assert res.dof == 2


def test_chi2_category_permutation_invariant():
    rng = np.random.default_rng(5)
    for _ in range(10):
        left = rng.integers(0, 60, size=5)
        right = rng.integers(0, 60, size=5)
        if left.sum() == 0 or right.sum() == 0:
            continue
        perm = rng.permutation(5)
        try:
            base = chi2_homogeneity(left, right)
        except DegenerateTable:
            with pytest.raises(DegenerateTable):
                chi2_homogeneity(left[perm], right[perm])
            continue
        alt = chi2_homogeneity(left[perm], right[perm])
        assert alt.statistic == pytest.approx(base.statistic, abs=1e-9)
        assert alt.dof == base.dof


def test_chi2_input_validation():
    with pytest.raises(ValueError):
        chi2_homogeneity(np.array([1, 2, 3]), np.array([1, 2]))


# ---------------------------------------------------------------------------
# Kolmogorov-Smirnov
# ---------------------------------------------------------------------------

def test_ks_identical_samples():
    a = np.array([0.3, 0.5, 0.5, 0.9])
    res = ks_two_sample(a, a.copy())
    assert res.statistic == 0.0
    assert res.p_value == 1.0


def test_ks_disjoint_samples():
    res = ks_two_sample(np.zeros(8), np.ones(8))
    assert res.statistic == 1.0
    assert res.p_value < 0.01


def test_ks_hand_distance():
    # CDFs interleave with sup-gap exactly 1/3
    res = ks_two_sample(np.array([1.0, 2.0, 3.0]), np.array([1.5, 2.5, 3.5]))
    assert res.statistic == pytest.approx(1.0 / 3.0, abs=1e-12)
    assert res.effective_n == pytest.approx(1.5, abs=1e-12)


def test_ks_symmetry_and_ties():
    a = np.array([1.0, 1.0, 2.0, 4.0])
    b = np.array([1.0, 3.0, 3.0, 5.0])
    ab = ks_two_sample(a, b)
    ba = ks_two_sample(b, a)
    assert ab.statistic == ba.statistic
    assert ab.p_value == ba.p_value


def test_ks_empty_sample():
    with pytest.raises(EmptySample):
        ks_two_sample(np.array([]), np.array([1.0]))


def test_ks_calibration_under_null():
    # same-distribution samples should reject at roughly the nominal rate
    rng = np.random.default_rng(42)
    rejections = 0
    trials = 200
    for _ in range(trials):
        a = rng.normal(size=400)
        b = rng.normal(size=400)
        if ks_two_sample(a, b).p_value < 0.05:
            rejections += 1
    assert 1 <= rejections <= 24  # nominal 10, generous band


# ---------------------------------------------------------------------------
# Bonferroni
# ---------------------------------------------------------------------------

def test_bonferroni_values():
    assert bonferroni_alpha(0.05, 6) == pytest.approx(0.05 / 6, abs=1e-15)
    assert bonferroni_alpha(0.05, 1) == 0.05
    assert bonferroni_alpha(1.0, 4) == 0.25
    with pytest.raises(ValueError):
        bonferroni_alpha(0.0, 3)
    with pytest.raises(ValueError):
        bonferroni_alpha(1.2, 3)
    with pytest.raises(ValueError):
        bonferroni_alpha(0.05, 0)


# ---------------------------------------------------------------------------
# Youden threshold
# ---------------------------------------------------------------------------

def test_youden_separable():
    thr, j = youden_threshold(
        np.array([0.1, 0.2, 0.8, 0.9]), np.array([0, 0, 1, 1])
    )
    assert thr == 0.5
    assert j == 1.0


def test_youden_overlapping():
    thr, j = youden_threshold(np.array([0.3, 0.6, 0.7]), np.array([0, 1, 0]))
    assert thr == pytest.approx(0.45, abs=1e-12)
    assert j == pytest.approx(0.5, abs=1e-12)


def test_youden_tie_resolves_to_larger_threshold():
    # inverted labels: every candidate has J <= 0, with J = 0 at both
    # sentinels; the tie must go to +inf
    thr, j = youden_threshold(np.array([0.2, 0.8]), np.array([1, 0]))
    assert thr == np.inf
    assert j == 0.0


def test_youden_monotone_transform_invariance():
    rng = np.random.default_rng(9)
    scores = rng.uniform(size=50)
    labels = (scores + rng.normal(scale=0.3, size=50) > 0.5).astype(int)
    if labels.min() == labels.max():
        labels[0] = 1 - labels[0]
    thr_a, j_a = youden_threshold(scores, labels)
    thr_b, j_b = youden_threshold(np.exp(scores), labels)
    assert j_a == pytest.approx(j_b, abs=1e-12)
    # the classifications agree even though the cut points differ
    assert np.array_equal(scores >= thr_a, np.exp(scores) >= thr_b)


def test_youden_single_class():
    with pytest.raises(SingleClass):
        youden_threshold(np.array([0.1, 0.9]), np.array([1, 1]))


# ---------------------------------------------------------------------------
# window power
# ---------------------------------------------------------------------------

def test_sample_power_values():
    assert sample_power(2, 6) == 0.75
    assert sample_power(0, 5) == 1.0
    assert sample_power(0, 0) == 1.0
    assert sample_power(5, 0) == 0.0
    with pytest.raises(ValueError):
        sample_power(-1, 3)


def test_sample_power_bounds():
    rng = np.random.default_rng(2)
    for _ in range(50):
        fp = int(rng.integers(0, 100))
        fn = int(rng.integers(0, 100))
        assert 0.0 <= sample_power(fp, fn) <= 1.0
