"""Plausibility screening and supervised discretization.

Continuous measurements pass through two steps before they become network
states: values outside a physiologic plausibility range are replaced by
missing (and logged), then the minimum description length principle (MDLP)
chooses cut points against a binary outcome. Cuts are class-boundary
midpoints; a split is kept only when its information gain clears the MDL
acceptance threshold, which makes the procedure conservative: labels that
carry no signal yield no cuts at all.

Binning convention: half-open intervals, value < cut goes left, so a value
equal to a cut lands in the right bin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cohort import Cohort
from .errors import DataError, NonFiniteValue
from .model import parse_node


# ---------------------------------------------------------------------------
# plausibility ranges
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PlausibilityRange:
    """Inclusive physiologic bounds for one variable (all of its columns)."""

    variable: str
    min: float
    max: float

    def __post_init__(self):
        if not (self.min <= self.max):
            raise ValueError(f"range for {self.variable!r}: min {self.min} > max {self.max}")


@dataclass(frozen=True)
class RangeChange:
    record_id: int
    column: str
    original: float


def apply_plausibility(
    cohort: Cohort, ranges: list[PlausibilityRange], source: str = "cohort"
) -> tuple[Cohort, list[RangeChange]]:
    """Replace out-of-range values with missing; return the change log.

    A range for variable ``v`` applies to every cohort column whose base
    name is ``v`` (all slices and the entry column). Values must parse as
    floats; anything unparseable raises DataError naming record and column.
    """
    by_var = {r.variable: r for r in ranges}
    col_range: list[PlausibilityRange | None] = []
    for col in cohort.columns:
        base, _ = parse_node(col)
        col_range.append(by_var.get(base))

    changes: list[RangeChange] = []
    new_rows: list[tuple[str | None, ...]] = []
    for r, row in enumerate(cohort.rows):
        out = list(row)
        for c, rng in enumerate(col_range):
            if rng is None or out[c] is None:
                continue
            try:
                value = float(out[c])
            except ValueError:
                raise DataError(
                    f"{source}: record {int(cohort.ids[r])}, column "
                    f"{cohort.columns[c]!r}: {out[c]!r} is not numeric"
                ) from None
            if not (rng.min <= value <= rng.max):
                changes.append(RangeChange(int(cohort.ids[r]), cohort.columns[c], value))
                out[c] = None
        new_rows.append(tuple(out))
    return Cohort(columns=cohort.columns, rows=new_rows, ids=cohort.ids.copy()), changes


# ---------------------------------------------------------------------------
# MDLP discretization
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BinningScheme:
    """Frozen cut points and the states they induce for one variable."""

    variable: str
    cuts: tuple[float, ...]
    labels: tuple[str, ...]
    intervals: tuple[tuple[float, float], ...]

    @classmethod
    def from_cuts(cls, variable: str, cuts: tuple[float, ...] | list[float]) -> "BinningScheme":
        cuts = tuple(float(c) for c in cuts)
        if any(cuts[i] >= cuts[i + 1] for i in range(len(cuts) - 1)):
            raise ValueError(f"cuts must be strictly increasing, got {cuts}")
        edges = (float("-inf"),) + cuts + (float("inf"),)
        intervals = tuple((edges[i], edges[i + 1]) for i in range(len(edges) - 1))
        labels = tuple(_interval_label(lo, hi) for lo, hi in intervals)
        return cls(variable=variable, cuts=cuts, labels=labels, intervals=intervals)


def _interval_label(lo: float, hi: float) -> str:
    left = "(-inf" if math.isinf(lo) else f"[{_fmt(lo)}"
    right = "inf)" if math.isinf(hi) else f"{_fmt(hi)})"
    return f"{left}, {right}"


def _fmt(x: float) -> str:
    return repr(float(x))


def _entropy_bits(counts: np.ndarray) -> float:
    total = counts.sum()
    if total == 0:
        return 0.0
    p = counts[counts > 0] / total
    return float(-(p * np.log2(p)).sum())


def _class_counts(labels: np.ndarray, classes: np.ndarray) -> np.ndarray:
    return np.array([(labels == c).sum() for c in classes], dtype=np.float64)


def _best_cut(values: np.ndarray, labels: np.ndarray, classes: np.ndarray):
    """Best boundary-midpoint cut by information gain, or None.

    Candidates are midpoints between consecutive distinct values whose label
    composition differs (with ties on the value axis, a boundary exists
    unless both value groups are pure and of the same class).
    """
    order = np.argsort(values, kind="mergesort")
    v = values[order]
    y = labels[order]
    n = v.size

    distinct, starts = np.unique(v, return_index=True)
    if distinct.size < 2:
        return None
    bounds = list(starts[1:]) + [n]

    # per value-group class composition
    group_pure_class: list[int | None] = []
    for g in range(distinct.size):
        seg = y[starts[g]:bounds[g]]
        first = seg[0]
        group_pure_class.append(int(first) if bool((seg == first).all()) else None)

    total_counts = _class_counts(y, classes)
    h_total = _entropy_bits(total_counts)

    best = None  # (gain, cut, left_counts, right_counts, split_pos)
    left = np.zeros_like(total_counts)
    pos = 0
    for g in range(distinct.size - 1):
        seg = y[starts[g]:bounds[g]]
        left = left + _class_counts(seg, classes)
        pos = bounds[g]
        same_pure = (
            group_pure_class[g] is not None
            and group_pure_class[g] == group_pure_class[g + 1]
        )
        if same_pure:
            continue
        right = total_counts - left
        h_left = _entropy_bits(left)
        h_right = _entropy_bits(right)
        gain = h_total - (pos / n) * h_left - ((n - pos) / n) * h_right
        if best is None or gain > best[0] + 1e-12:
            best = (gain, (v[pos - 1] + v[pos]) / 2.0, left.copy(), right, pos)
    return best


def _mdlp_accepts(gain: float, n: int, h_parent: float, h_left: float,
                  h_right: float, k: int, k1: int, k2: int) -> bool:
    delta = math.log2(3.0 ** k - 2.0) - (k * h_parent - k1 * h_left - k2 * h_right)
    threshold = (math.log2(n - 1) + delta) / n
    return gain > threshold


def mdlp_cuts(values: np.ndarray, labels: np.ndarray, variable: str = "x") -> BinningScheme:
    """Recursive MDLP cut selection against binary labels.

    Returns a BinningScheme; an empty cut tuple (single bin) means no split
    ever cleared the acceptance criterion. Values must be finite; labels are
    0/1. Invariant to input permutation.
    """
    values = np.asarray(values, dtype=np.float64)
    labels = np.asarray(labels)
    if values.shape != labels.shape or values.ndim != 1:
        raise ValueError("values and labels must be 1-D arrays of equal length")
    if values.size == 0:
        return BinningScheme.from_cuts(variable, ())
    if not np.all(np.isfinite(values)):
        raise NonFiniteValue(f"variable {variable!r}: non-finite value in MDLP input")
    classes = np.unique(labels)

    cuts: list[float] = []

    def recurse(v: np.ndarray, y: np.ndarray) -> None:
        n = v.size
        if n < 2:
            return
        found = _best_cut(v, y, classes)
        if found is None:
            return
        gain, cut, left_counts, right_counts, _ = found
        h_parent = _entropy_bits(left_counts + right_counts)
        h_left = _entropy_bits(left_counts)
        h_right = _entropy_bits(right_counts)
        k = int((left_counts + right_counts > 0).sum())
        k1 = int((left_counts > 0).sum())
        k2 = int((right_counts > 0).sum())
        if not _mdlp_accepts(gain, n, h_parent, h_left, h_right, k, k1, k2):
            return
        cuts.append(float(cut))
        mask = v < cut
        recurse(v[mask], y[mask])
        recurse(v[~mask], y[~mask])

    recurse(values, labels)
    cuts.sort()
    return BinningScheme.from_cuts(variable, tuple(cuts))


def apply_bins(value: float | None, scheme: BinningScheme) -> int | None:
    """Bin index for a value under the scheme; None passes through.

    value < cut goes left; a value equal to a cut lands in the right bin.
    Non-finite values raise NonFiniteValue.
    """
    if value is None:
        return None
    value = float(value)
    if not math.isfinite(value):
        raise NonFiniteValue(f"cannot bin non-finite value {value!r}")
    idx = 0
    for cut in scheme.cuts:
        if value < cut:
            break
        idx += 1
    return idx


def bin_column(values: list[str | None], scheme: BinningScheme, column: str,
               source: str = "cohort") -> list[str | None]:
    """Apply a scheme to a raw string column, producing state labels."""
    out: list[str | None] = []
    for r, cell in enumerate(values):
        if cell is None:
            out.append(None)
            continue
        try:
            value = float(cell)
        except ValueError:
            raise DataError(
                f"{source}: row {r}, column {column!r}: {cell!r} is not numeric"
            ) from None
        idx = apply_bins(value, scheme)
        out.append(scheme.labels[idx])
    return out
