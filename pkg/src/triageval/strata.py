"""Subgroup-stratified discrimination analysis and score-density summaries.

Age bands are fixed at 15-25 / 25-60 / 60+ with left-closed edges (a
25-year-old is middle-aged, a 60-year-old is old). Records with an unknown
covariate are excluded from stratification and their count reported, never
silently folded into a stratum. Subgroups are disjoint subjects, so pairwise
AUC comparisons use the unpaired DeLong test. PRAUC has no closed-form
variance; its interval is a stratified percentile bootstrap.
"""

import csv
import io
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from .curves import prauc
from .data_model import Cohort, Gender, PatientSource
from .errors import NoAnalyzableStrata
from .stats import (
    DEFAULT_LEVEL,
    ConfidenceInterval,
    bootstrap_percentile,
    delong_ci,
    delong_compare,
)

COVARIATES = ("age_group", "gender", "prior_tb", "patient_source")

AGE_BANDS = ("15-25", "25-60", "60+")
DEFAULT_PRAUC_REPLICATES = 2000


def age_band(age_years: Optional[int]) -> Optional[str]:
    if age_years is None:
        return None
    if age_years < 25:
        return AGE_BANDS[0]
    if age_years < 60:
        return AGE_BANDS[1]
    return AGE_BANDS[2]


def _stratum_key(record, covariate: str) -> Optional[str]:
    if covariate == "age_group":
        return age_band(record.age_years)
    if covariate == "gender":
        return None if record.gender is Gender.UNKNOWN else record.gender.value
    if covariate == "prior_tb":
        return "prior_tb" if record.prior_tb else "new"
    if covariate == "patient_source":
        if record.patient_source is PatientSource.UNKNOWN:
            return None
        return record.patient_source.value
    raise ValueError(f"unknown covariate {covariate!r}")


def _stratum_order(covariate: str) -> List[str]:
    if covariate == "age_group":
        return list(AGE_BANDS)
    if covariate == "gender":
        return [Gender.FEMALE.value, Gender.MALE.value]
    if covariate == "prior_tb":
        return ["new", "prior_tb"]
    if covariate == "patient_source":
        return [s.value for s in PatientSource if s is not PatientSource.UNKNOWN]
    raise ValueError(f"unknown covariate {covariate!r}")


@dataclass(frozen=True)
class StratumResult:
    label: str
    n: int
    n_pos: int
    analyzable: bool
    auc: Optional[ConfidenceInterval]
    prauc: Optional[float]
    prauc_ci: Optional[ConfidenceInterval]

    def as_dict(self) -> dict:
        return {
            "label": self.label,
            "n": self.n,
            "n_pos": self.n_pos,
            "analyzable": self.analyzable,
            "auc": self.auc.as_dict() if self.auc else None,
            "prauc": self.prauc,
            "prauc_ci": self.prauc_ci.as_dict() if self.prauc_ci else None,
        }


@dataclass(frozen=True)
class SubgroupReport:
    covariate: str
    product: str
    strata: Tuple[StratumResult, ...]
    pairwise_p: Tuple[Tuple[Optional[float], ...], ...]
    excluded_unknown: int

    def as_dict(self) -> dict:
        return {
            "covariate": self.covariate,
            "product": self.product,
            "strata": [s.as_dict() for s in self.strata],
            "pairwise_p": [list(row) for row in self.pairwise_p],
            "excluded_unknown": self.excluded_unknown,
        }


def subgroup_report(
    cohort: Cohort,
    product: str,
    covariate: str,
    level: float = DEFAULT_LEVEL,
    prauc_replicates: int = DEFAULT_PRAUC_REPLICATES,
    seed: int = 0,
) -> SubgroupReport:
    """Per-stratum AUC (DeLong) and PRAUC (bootstrap) with an all-pairs p matrix.

    Strata with fewer than 2 positives or 2 negatives are reported with
    counts only; inference fields stay null and their matrix entries too.
    """
    keys = [_stratum_key(rec, covariate) for rec in cohort.records]
    excluded = sum(1 for k in keys if k is None)
    present = [k for k in _stratum_order(covariate) if k in set(keys)]

    all_scores = cohort.scores_for(product)
    all_labels = cohort.labels
    strata: List[StratumResult] = []
    arrays = []
    for idx, label in enumerate(present):
        mask = np.array([k == label for k in keys])
        scores = all_scores[mask]
        labels = all_labels[mask]
        n_pos = int(labels.sum())
        n_neg = int(labels.size - n_pos)
        analyzable = n_pos >= 2 and n_neg >= 2
        if analyzable:
            auc_ci = delong_ci(scores, labels, level)
            stratum_seed = int(np.random.SeedSequence([seed, idx]).generate_state(1)[0])
            prauc_ci = bootstrap_percentile(
                prauc,
                scores,
                labels,
                replicates=prauc_replicates,
                seed=stratum_seed,
                level=level,
            )
            result = StratumResult(
                label, labels.size, n_pos, True, auc_ci, prauc_ci.estimate, prauc_ci
            )
        else:
            result = StratumResult(label, labels.size, n_pos, False, None, None, None)
        strata.append(result)
        arrays.append((scores, labels, analyzable))

    if not any(s.analyzable for s in strata):
        raise NoAnalyzableStrata(
            f"no stratum of {covariate!r} has >= 2 subjects of each class"
        )

    k = len(strata)
    matrix: List[List[Optional[float]]] = [[None] * k for _ in range(k)]
    for i in range(k):
        matrix[i][i] = 1.0
        for j in range(i + 1, k):
            si, li, ai = arrays[i]
            sj, lj, aj = arrays[j]
            if ai and aj:
                p = delong_compare(si, sj, li, paired=False, labels_b=lj).p_value
                matrix[i][j] = matrix[j][i] = p
    return SubgroupReport(
        covariate,
        product,
        tuple(strata),
        tuple(tuple(row) for row in matrix),
        excluded,
    )


@dataclass(frozen=True)
class DensitySummary:
    product: str
    n_bins: int
    groups: Dict[str, List[Tuple[float, float, int]]]

    def as_dict(self) -> dict:
        return {
            "product": self.product,
            "n_bins": self.n_bins,
            "groups": {
                g: [{"bin_lo": lo, "bin_hi": hi, "count": c} for lo, hi, c in bins]
                for g, bins in self.groups.items()
            },
        }


DENSITY_GROUPS = ("bac_pos_prior_tb", "bac_pos_new", "bac_neg_prior_tb", "bac_neg_new")


def density_hist(cohort: Cohort, product: str, n_bins: int) -> DensitySummary:
    """Equal-width score histogram per {reference label} x {prior TB} cell.

    Bins partition [0, 1]; only the last bin is right-closed, so a score of
    exactly 1.0 lands in the final bin.
    """
    if n_bins < 2:
        raise ValueError("need at least 2 bins")
    scores = cohort.scores_for(product)
    labels = cohort.labels
    prior = np.array([rec.prior_tb for rec in cohort.records], dtype=bool)
    # i/n_bins, not linspace: accumulation error would push an exact 0.3
    # into the wrong bin for n_bins=10.
    edges = np.arange(n_bins + 1, dtype=np.float64) / n_bins
    masks = {
        "bac_pos_prior_tb": labels & prior,
        "bac_pos_new": labels & ~prior,
        "bac_neg_prior_tb": ~labels & prior,
        "bac_neg_new": ~labels & ~prior,
    }
    groups = {}
    for name in DENSITY_GROUPS:
        counts, _ = np.histogram(scores[masks[name]], bins=edges)
        groups[name] = [
            (float(edges[i]), float(edges[i + 1]), int(counts[i]))
            for i in range(n_bins)
        ]
    return DensitySummary(product, n_bins, groups)


def density_to_csv(summary: DensitySummary) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["group", "bin_lo", "bin_hi", "count"])
    for group in DENSITY_GROUPS:
        for lo, hi, count in summary.groups[group]:
            writer.writerow([group, repr(lo), repr(hi), count])
    return buf.getvalue()


def gaussian_density(scores, grid_size: int = 256, bandwidth: Optional[float] = None):
    """Gaussian-kernel density on [0, 1] for plotting parity with smoothed views.

    Silverman bandwidth by default. Exactness is not promised; exports and
    acceptance work exclusively on the histogram form.
    """
    scores = np.asarray(scores, dtype=np.float64)
    n = scores.size
    if n == 0:
        raise ValueError("need at least one score")
    if bandwidth is None:
        std = float(np.std(scores, ddof=1)) if n > 1 else 0.0
        iqr = float(np.subtract(*np.percentile(scores, [75, 25])))
        spread = min(std, iqr / 1.34) if iqr > 0 else std
        bandwidth = 0.9 * spread * n ** (-0.2) if spread > 0 else 0.05
    grid = np.linspace(0.0, 1.0, grid_size)
    diffs = (grid[:, None] - scores[None, :]) / bandwidth
    dens = np.exp(-0.5 * diffs * diffs).sum(axis=1) / (n * bandwidth * np.sqrt(2 * np.pi))
    return grid, dens
