"""Operating points, threshold matching, TPP verdicts, human-vs-AI comparison.

Threshold matching uses floor semantics: to match a target sensitivity, take
the largest threshold whose sensitivity still meets the floor (which
maximizes specificity subject to it); to match a target specificity, the
smallest threshold meeting the floor. When score granularity defeats the
floor entirely, the closest achievable point is returned with an
``approximate`` flag.
"""

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .curves import threshold_counts
from .data_model import BinaryClassification, Cohort, radiologist_binary
from .errors import MissingGrade
from .stats import (
    DEFAULT_LEVEL,
    ConfidenceInterval,
    TestResult,
    mcnemar,
    paired_diff_ci,
    wilson_ci,
)
from ._dist import z_for_level

TPP_SENSITIVITY = 0.90
TPP_SPECIFICITY = 0.70


@dataclass(frozen=True)
class OperatingPoint:
    threshold: float  # nan for points not defined by a score cutoff
    tp: int
    fp: int
    tn: int
    fn: int
    sensitivity: ConfidenceInterval
    specificity: ConfidenceInterval
    ppv: Optional[ConfidenceInterval]  # None when nothing is triaged positive
    npv: Optional[ConfidenceInterval]  # None when nothing is triaged negative
    approximate: bool = False

    @property
    def n_pos(self) -> int:
        return self.tp + self.fn

    @property
    def n_neg(self) -> int:
        return self.fp + self.tn

    def as_dict(self) -> dict:
        return {
            "threshold": self.threshold,
            "tp": self.tp,
            "fp": self.fp,
            "tn": self.tn,
            "fn": self.fn,
            "sensitivity": self.sensitivity.as_dict(),
            "specificity": self.specificity.as_dict(),
            "ppv": self.ppv.as_dict() if self.ppv else None,
            "npv": self.npv.as_dict() if self.npv else None,
            "approximate": self.approximate,
        }


@dataclass(frozen=True)
class TppVerdict:
    met: bool
    point_at_sens90: OperatingPoint
    point_at_spec70: OperatingPoint

    def as_dict(self) -> dict:
        return {
            "met": self.met,
            "point_at_sens90": self.point_at_sens90.as_dict(),
            "point_at_spec70": self.point_at_spec70.as_dict(),
        }


@dataclass(frozen=True)
class HumanComparison:
    classification: BinaryClassification
    human: OperatingPoint
    matched_ai: OperatingPoint
    delta_specificity: ConfidenceInterval
    delta_ppv: Optional[ConfidenceInterval]
    delta_npv: Optional[ConfidenceInterval]
    mcnemar_specificity: TestResult

    def as_dict(self) -> dict:
        return {
            "classification": self.classification.value,
            "human": self.human.as_dict(),
            "matched_ai": self.matched_ai.as_dict(),
            "delta_specificity": self.delta_specificity.as_dict(),
            "delta_ppv": self.delta_ppv.as_dict() if self.delta_ppv else None,
            "delta_npv": self.delta_npv.as_dict() if self.delta_npv else None,
            "mcnemar_specificity": self.mcnemar_specificity.as_dict(),
        }


def confusion_from_predictions(
    predictions,
    labels,
    level: float = DEFAULT_LEVEL,
    threshold: float = math.nan,
    approximate: bool = False,
) -> OperatingPoint:
    """Confusion counts and Wilson-intervalled metrics for binary calls."""
    predictions = np.asarray(predictions, dtype=bool)
    labels = np.asarray(labels, dtype=bool)
    tp = int(np.sum(predictions & labels))
    fp = int(np.sum(predictions & ~labels))
    fn = int(np.sum(~predictions & labels))
    tn = int(np.sum(~predictions & ~labels))
    sens = wilson_ci(tp, tp + fn, level)
    spec = wilson_ci(tn, fp + tn, level)
    ppv = wilson_ci(tp, tp + fp, level) if tp + fp > 0 else None
    npv = wilson_ci(tn, tn + fn, level) if tn + fn > 0 else None
    return OperatingPoint(threshold, tp, fp, tn, fn, sens, spec, ppv, npv, approximate)


def confusion_at(scores, labels, threshold: float, level: float = DEFAULT_LEVEL) -> OperatingPoint:
    """Operating point of the score >= threshold rule."""
    scores = np.asarray(scores, dtype=np.float64)
    return confusion_from_predictions(scores >= threshold, labels, level, float(threshold))


def match_operating_point(
    scores, labels, target: float, kind: str, level: float = DEFAULT_LEVEL
) -> OperatingPoint:
    """Operating point matching a target sensitivity or specificity.

    Candidates are the achievable distinct-score thresholds. A sensitivity
    floor is always achievable (everything triaged at the minimum score); a
    specificity floor can be defeated by ties at the top score, in which
    case the closest achievable point comes back flagged approximate.
    """
    if not 0.0 < target <= 1.0:
        raise ValueError(f"target must be in (0, 1], got {target}")
    if kind not in ("sensitivity", "specificity"):
        raise ValueError(f"kind must be sensitivity or specificity, got {kind!r}")
    thr, tp, fp, n_pos, n_neg = threshold_counts(scores, labels)
    sens = tp / n_pos
    spec = 1.0 - fp / n_neg
    approximate = False
    if kind == "sensitivity":
        meets = np.flatnonzero(sens >= target)
        if meets.size:
            idx = int(meets[0])  # thresholds descend: first hit = largest threshold
        else:
            idx = int(np.argmin(np.abs(sens - target)))
            approximate = True
        cutoff = float(thr[idx])
    else:
        meets = np.flatnonzero(spec >= target)
        if meets.size:
            idx = int(meets[-1])  # last hit = smallest threshold meeting the floor
        else:
            idx = int(np.argmin(np.abs(spec - target)))
            approximate = True
        # Any cutoff in (next lower score, thr[idx]] realizes this confusion;
        # the floor's smallest threshold is an open bound, so report the
        # interval midpoint rather than the achieved score.
        if idx + 1 < thr.size:
            cutoff = float(thr[idx] + thr[idx + 1]) / 2.0
        else:
            cutoff = float(thr[idx])
    point = confusion_at(scores, labels, cutoff, level)
    return replace(point, approximate=True) if approximate else point


def tpp_check(scores, labels, level: float = DEFAULT_LEVEL) -> TppVerdict:
    """Verdict against the triage benchmark: >=90% sensitivity with >=70% specificity."""
    at_sens = match_operating_point(scores, labels, TPP_SENSITIVITY, "sensitivity", level)
    at_spec = match_operating_point(scores, labels, TPP_SPECIFICITY, "specificity", level)
    return TppVerdict(at_sens.specificity.estimate >= TPP_SPECIFICITY, at_sens, at_spec)


def _dependent_proportion_diff_ci(
    num_a: np.ndarray,
    denom_a: np.ndarray,
    num_h: np.ndarray,
    denom_h: np.ndarray,
    level: float,
) -> Optional[ConfidenceInterval]:
    """Wald CI for a difference of two ratio metrics on shared subjects.

    Delta method over per-subject indicators: the metric pair is
    (sum(num_a)/sum(denom_a), sum(num_h)/sum(denom_h)) with both readers
    classifying the same N subjects, so the variance comes from the influence
    values of the ratio difference. Returns None when either denominator is
    empty (the metric itself is undefined).
    """
    n = num_a.size
    u_mean = float(np.mean(denom_a))
    w_mean = float(np.mean(denom_h))
    if u_mean == 0.0 or w_mean == 0.0:
        return None
    x_mean = float(np.mean(num_a))
    y_mean = float(np.mean(num_h))
    est = x_mean / u_mean - y_mean / w_mean
    d = (num_a * u_mean - denom_a * x_mean) / (u_mean * u_mean)
    d -= (num_h * w_mean - denom_h * y_mean) / (w_mean * w_mean)
    var = float(np.mean(d * d) - np.mean(d) ** 2) / n
    if var <= 0.0:
        return ConfidenceInterval(est, est, est, level)
    half = z_for_level(level) * math.sqrt(var)
    return ConfidenceInterval(est, max(-1.0, est - half), min(1.0, est + half), level)


def human_vs_ai(
    cohort: Cohort,
    product: str,
    classification: BinaryClassification,
    level: float = DEFAULT_LEVEL,
    mcnemar_exact_threshold: int = 25,
) -> HumanComparison:
    """Compare the graded human reading against the AI at matched sensitivity.

    The AI threshold is matched to the human sensitivity (floor semantics),
    deltas are AI minus human. Specificity inference runs over the
    reference-negative subjects: the McNemar discordant pairs there are
    b = (human positive, AI negative) and c = (human negative, AI positive),
    and the delta CI is the paired Wald difference on the same counts.
    PPV/NPV deltas have subject-dependent denominators, so their CIs use the
    dependent-proportion Wald form over the shared cross-classification.
    """
    grades = [rec.radiologist_grade for rec in cohort.records]
    if any(g is None for g in grades):
        raise MissingGrade("every record needs a radiologist grade")
    labels = cohort.labels
    human_pred = np.array(
        [radiologist_binary(g, classification) for g in grades], dtype=bool
    )
    human = confusion_from_predictions(human_pred, labels, level)

    scores = cohort.scores_for(product)
    matched = match_operating_point(
        scores, labels, human.sensitivity.estimate, "sensitivity", level
    )
    ai_pred = scores >= matched.threshold

    neg = ~labels
    b = int(np.sum(neg & human_pred & ~ai_pred))
    c = int(np.sum(neg & ~human_pred & ai_pred))
    delta_spec = paired_diff_ci(b, c, int(neg.sum()), level)
    mcn = mcnemar(b, c, mcnemar_exact_threshold)

    delta_ppv = _dependent_proportion_diff_ci(
        num_a=(ai_pred & labels).astype(np.float64),
        denom_a=ai_pred.astype(np.float64),
        num_h=(human_pred & labels).astype(np.float64),
        denom_h=human_pred.astype(np.float64),
        level=level,
    )
    delta_npv = _dependent_proportion_diff_ci(
        num_a=(~ai_pred & ~labels).astype(np.float64),
        denom_a=(~ai_pred).astype(np.float64),
        num_h=(~human_pred & ~labels).astype(np.float64),
        denom_h=(~human_pred).astype(np.float64),
        level=level,
    )

    return HumanComparison(
        classification=classification,
        human=human,
        matched_ai=matched,
        delta_specificity=delta_spec,
        delta_ppv=delta_ppv,
        delta_npv=delta_npv,
        mcnemar_specificity=mcn,
    )
