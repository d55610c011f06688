"""Triage evaluation framework: sensitivity, tests saved, and NNT per threshold.

Tests saved is the fraction of the cohort NOT triaged to confirmatory
testing (zero at threshold 0, the test-everyone scenario). NNT is the number
of confirmatory tests per true positive found, i.e. 1/PPV; its interval
comes from inverting the PPV Wilson interval endpoints. One confirmatory
test per triaged subject; repeat-on-error logic is out of scope.
"""

import csv
import io
import math
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .stats import DEFAULT_LEVEL, ConfidenceInterval, wilson_ci
from .thresholds import match_operating_point


@dataclass(frozen=True)
class FrameworkPoint:
    threshold: float
    sensitivity: ConfidenceInterval
    tests_saved: ConfidenceInterval
    nnt: Optional[ConfidenceInterval]  # None when no true positive is triaged
    approximate: bool = False

    def as_dict(self) -> dict:
        return {
            "threshold": self.threshold,
            "sensitivity": self.sensitivity.as_dict(),
            "tests_saved": self.tests_saved.as_dict(),
            "nnt": self.nnt.as_dict() if self.nnt else None,
            "approximate": self.approximate,
        }


@dataclass(frozen=True)
class FrameworkSweep:
    product: str
    grid: Tuple[FrameworkPoint, ...]


def _point_from_counts(
    threshold: float, tp: int, fp: int, n_pos: int, n: int, level: float
) -> FrameworkPoint:
    saved = n - tp - fp  # tn + fn
    sens = wilson_ci(tp, n_pos, level)
    saved_ci = wilson_ci(saved, n, level)
    if tp == 0:
        nnt = None
    else:
        ppv = wilson_ci(tp, tp + fp, level)
        nnt = ConfidenceInterval(
            (tp + fp) / tp,
            1.0 / ppv.upper,
            math.inf if ppv.lower == 0.0 else 1.0 / ppv.lower,
            level,
        )
    return FrameworkPoint(float(threshold), sens, saved_ci, nnt)


def triage_metrics(
    scores, labels, threshold: float, level: float = DEFAULT_LEVEL
) -> FrameworkPoint:
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=bool)
    triaged = scores >= threshold
    tp = int(np.sum(triaged & labels))
    fp = int(np.sum(triaged & ~labels))
    return _point_from_counts(threshold, tp, fp, int(labels.sum()), labels.size, level)


def default_grid(scores) -> np.ndarray:
    """All distinct scores plus the unit-interval endpoints, ascending.

    The 0 and 1 anchors are appended even when they coincide with achieved
    scores, so the test-everyone and triage-nobody ends are always present.
    """
    uniq = np.unique(np.asarray(scores, dtype=np.float64))
    return np.sort(np.concatenate([uniq, [0.0, 1.0]]))


def uniform_grid(size: int = 1001) -> np.ndarray:
    return np.linspace(0.0, 1.0, size)


def framework_sweep(
    scores,
    labels,
    grid: Optional[Sequence[float]] = None,
    level: float = DEFAULT_LEVEL,
    product: str = "",
) -> FrameworkSweep:
    """One FrameworkPoint per grid threshold (default: exact distinct scores)."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=bool)
    if grid is None:
        grid = default_grid(scores)
    grid = np.asarray(grid, dtype=np.float64)
    if grid.size == 0:
        raise ValueError("grid must be non-empty")
    if np.any(np.diff(grid) < 0):
        raise ValueError("grid must be sorted ascending")
    pos_sorted = np.sort(scores[labels])
    neg_sorted = np.sort(scores[~labels])
    n_pos = pos_sorted.size
    n = scores.size
    tp = n_pos - np.searchsorted(pos_sorted, grid, side="left")
    fp = neg_sorted.size - np.searchsorted(neg_sorted, grid, side="left")
    points = [
        _point_from_counts(t, int(tpi), int(fpi), n_pos, n, level)
        for t, tpi, fpi in zip(grid, tp, fp)
    ]
    return FrameworkSweep(product, tuple(points))


def tradeoff_curve(scores, labels, level: float = DEFAULT_LEVEL) -> List[Tuple[float, float]]:
    """(tests_saved, sensitivity) pairs of the default sweep.

    Sorted by tests_saved ascending; duplicate savings keep the maximal
    sensitivity.
    """
    sweep = framework_sweep(scores, labels, level=level)
    best: dict = {}
    for pt in sweep.grid:
        saved = pt.tests_saved.estimate
        sens = pt.sensitivity.estimate
        if saved not in best or sens > best[saved]:
            best[saved] = sens
    return sorted(best.items())


def savings_at_sensitivity(
    scores, labels, sens_floor: float, level: float = DEFAULT_LEVEL
) -> FrameworkPoint:
    """Maximal tests-saved point subject to a sensitivity floor."""
    matched = match_operating_point(scores, labels, sens_floor, "sensitivity", level)
    point = triage_metrics(scores, labels, matched.threshold, level)
    if matched.approximate:
        point = replace(point, approximate=True)
    return point


def sweep_to_csv(sweep: FrameworkSweep) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        [
            "threshold",
            "sens", "sens_lo", "sens_hi",
            "saved", "saved_lo", "saved_hi",
            "nnt", "nnt_lo", "nnt_hi",
        ]
    )
    for pt in sweep.grid:
        nnt = pt.nnt
        writer.writerow(
            [
                repr(pt.threshold),
                repr(pt.sensitivity.estimate),
                repr(pt.sensitivity.lower),
                repr(pt.sensitivity.upper),
                repr(pt.tests_saved.estimate),
                repr(pt.tests_saved.lower),
                repr(pt.tests_saved.upper),
                repr(nnt.estimate) if nnt else "",
                repr(nnt.lower) if nnt else "",
                repr(nnt.upper) if nnt else "",
            ]
        )
    return buf.getvalue()
