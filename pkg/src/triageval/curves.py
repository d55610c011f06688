"""ROC and precision-recall curves over the continuous threshold range.

Decision rule everywhere: a subject is triage-positive iff score >= threshold.
Tied scores collapse into a single operating point, so no optimistic staircase
appears inside a tie group.
"""

import csv
import io
import math
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from . import ranking
from .errors import DegenerateLabels, LengthMismatch


@dataclass(frozen=True)
class CurvePoint:
    x: float
    y: float
    threshold: float


@dataclass(frozen=True)
class Curve:
    kind: str  # "roc" or "pr"
    points: Tuple[CurvePoint, ...]
    n_pos: int
    n_neg: int

    @property
    def baseline(self) -> float:
        """Random-classifier precision (prevalence); meaningful for PR curves."""
        return self.n_pos / (self.n_pos + self.n_neg)


@dataclass(frozen=True)
class AucResult:
    estimate: float
    n_pos: int
    n_neg: int


def _validate(scores, labels):
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=bool)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise LengthMismatch(
            f"scores {scores.shape} and labels {labels.shape} must be equal-length vectors"
        )
    n_pos = int(labels.sum())
    if n_pos == 0 or n_pos == labels.size:
        raise DegenerateLabels("both classes must be present")
    return scores, labels, n_pos, labels.size - n_pos


def threshold_counts(scores, labels):
    """(thresholds desc, tp, fp) at every distinct score under the >= rule."""
    scores, labels, n_pos, n_neg = _validate(scores, labels)
    uniq, inv = np.unique(scores, return_inverse=True)
    pos_at = np.bincount(inv[labels], minlength=uniq.size)
    neg_at = np.bincount(inv[~labels], minlength=uniq.size)
    thr = uniq[::-1]
    tp = np.cumsum(pos_at[::-1])
    fp = np.cumsum(neg_at[::-1])
    return thr, tp, fp, n_pos, n_neg


def roc_curve(scores, labels) -> Curve:
    """Operating points (FPR, TPR) at every distinct score plus both endpoints.

    (0, 0) is anchored at threshold +inf; the (1, 1) end coincides with the
    minimum-score point and keeps that achieved threshold.
    """
    thr, tp, fp, n_pos, n_neg = threshold_counts(scores, labels)
    points: List[CurvePoint] = [CurvePoint(0.0, 0.0, math.inf)]
    for t, tpi, fpi in zip(thr, tp, fp):
        points.append(CurvePoint(fpi / n_neg, tpi / n_pos, float(t)))
    if not (points[-1].x == 1.0 and points[-1].y == 1.0):
        points.append(CurvePoint(1.0, 1.0, -math.inf))
    deduped = [points[0]]
    for pt in points[1:]:
        if pt.x != deduped[-1].x or pt.y != deduped[-1].y:
            deduped.append(pt)
    return Curve("roc", tuple(deduped), n_pos, n_neg)


def auc(scores, labels) -> AucResult:
    """Mann-Whitney pair statistic: P(pos > neg) with ties credited one half.

    Equals the trapezoidal area under roc_curve exactly.
    """
    scores, labels, n_pos, n_neg = _validate(scores, labels)
    estimate, _, _ = ranking.auc_and_placements(scores, labels)
    return AucResult(estimate, n_pos, n_neg)


def pr_curve(scores, labels) -> Curve:
    """(recall, precision) at each distinct score where recall changes.

    A recall-0 anchor carries the precision of the highest-threshold point
    with nonzero recall, pinning the left end of the trapezoid integral.
    """
    thr, tp, fp, n_pos, n_neg = threshold_counts(scores, labels)
    points: List[CurvePoint] = []
    prev_tp = 0
    for t, tpi, fpi in zip(thr, tp, fp):
        if tpi > prev_tp:
            points.append(CurvePoint(tpi / n_pos, tpi / (tpi + fpi), float(t)))
            prev_tp = tpi
    anchor = CurvePoint(0.0, points[0].y, math.inf)
    return Curve("pr", (anchor, *points), n_pos, n_neg)


def prauc(scores, labels) -> float:
    """Trapezoidal area under pr_curve, recall-0 anchor included."""
    curve = pr_curve(scores, labels)
    area = 0.0
    for a, b in zip(curve.points, curve.points[1:]):
        area += (b.x - a.x) * (a.y + b.y) / 2.0
    return area


def trapezoid_area(curve: Curve) -> float:
    """Trapezoidal area under any curve's points, in stored order."""
    area = 0.0
    for a, b in zip(curve.points, curve.points[1:]):
        area += (b.x - a.x) * (a.y + b.y) / 2.0
    return area


def curve_to_csv(curve: Curve) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["kind", "x", "y", "threshold"])
    for pt in curve.points:
        writer.writerow([curve.kind, repr(pt.x), repr(pt.y), repr(pt.threshold)])
    return buf.getvalue()
