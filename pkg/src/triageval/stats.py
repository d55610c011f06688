"""Statistical inference kernels.

Wilson score intervals for proportions, DeLong variance and AUC comparison
tests built on placement values, McNemar for paired proportions (exact
binomial below a discordance threshold, continuity-corrected chi-squared
above), the paired Wald difference interval, and a stratified percentile
bootstrap.

Notes on conventions, fixed here because the downstream tables depend on
them: proportion intervals are Wilson; tests are two-sided; the McNemar
exact path triggers below 25 discordant pairs by default; normal quantiles
come from a rational approximation of the inverse normal CDF good to well
under 1e-9 (no lookup table).
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import ranking
from ._dist import binom_cdf_half, chi2_sf_1df, norm_sf, z_for_level
from .errors import BadLevel, DegenerateLabels, LengthMismatch, ZeroTrials

DEFAULT_LEVEL = 0.95
MCNEMAR_EXACT_THRESHOLD = 25


@dataclass(frozen=True)
class ConfidenceInterval:
    estimate: float
    lower: float
    upper: float
    level: float

    def covers(self, value: float) -> bool:
        return self.lower <= value <= self.upper

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def as_dict(self) -> dict:
        return {
            "estimate": self.estimate,
            "lower": self.lower,
            "upper": self.upper,
            "level": self.level,
        }


@dataclass(frozen=True)
class TestResult:
    statistic: float
    p_value: float
    method: str
    degenerate: bool = False

    def as_dict(self) -> dict:
        return {
            "statistic": self.statistic,
            "p_value": self.p_value,
            "method": self.method,
            "degenerate": self.degenerate,
        }


def _check_level(level: float) -> None:
    if not 0.0 < level < 1.0:
        raise BadLevel(f"confidence level must be in (0, 1), got {level}")


def wilson_ci(successes: int, trials: int, level: float = DEFAULT_LEVEL) -> ConfidenceInterval:
    """Wilson score interval for a binomial proportion."""
    _check_level(level)
    if trials < 1:
        raise ZeroTrials("wilson_ci needs at least one trial")
    if not 0 <= successes <= trials:
        raise ValueError(f"successes {successes} outside [0, {trials}]")
    z = z_for_level(level)
    phat = successes / trials
    z2 = z * z
    denom = 1.0 + z2 / trials
    center = (phat + z2 / (2.0 * trials)) / denom
    half = z * math.sqrt(phat * (1.0 - phat) / trials + z2 / (4.0 * trials * trials)) / denom
    return ConfidenceInterval(phat, max(0.0, center - half), min(1.0, center + half), level)


def _validate_scores(scores, labels, min_per_class: int = 1):
    scores = np.ascontiguousarray(scores, dtype=np.float64)
    labels = np.ascontiguousarray(labels, dtype=bool)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise LengthMismatch("scores and labels must be equal-length vectors")
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    if n_pos < min_per_class or n_neg < min_per_class:
        raise DegenerateLabels(
            f"need at least {min_per_class} subject(s) per class, got {n_pos}+/{n_neg}-"
        )
    return scores, labels, n_pos, n_neg


def fast_auc_kernel(scores, labels):
    """AUC with per-subject placement values, O(n log n).

    Placements match the naive O(n_pos * n_neg) pair enumeration exactly:
    v_pos[i] = (#neg below + 0.5 #neg tied) / n_neg, per positive i, and the
    mirror image for negatives. Placement arrays keep each class's original
    subject order so paired covariances line up across products.
    """
    scores, labels, _, _ = _validate_scores(scores, labels)
    return ranking.auc_and_placements(scores, labels)


def delong_variance(v_pos: np.ndarray, v_neg: np.ndarray) -> float:
    """DeLong structural-component variance S10/n_pos + S01/n_neg."""
    s10 = float(np.var(v_pos, ddof=1)) if v_pos.size > 1 else 0.0
    s01 = float(np.var(v_neg, ddof=1)) if v_neg.size > 1 else 0.0
    return s10 / v_pos.size + s01 / v_neg.size


def delong_ci(scores, labels, level: float = DEFAULT_LEVEL) -> ConfidenceInterval:
    """DeLong confidence interval for the AUC, truncated to [0, 1].

    Degenerate variance (e.g. perfect separation) yields a zero-width
    interval rather than an error.
    """
    _check_level(level)
    scores, labels, _, _ = _validate_scores(scores, labels, min_per_class=2)
    estimate, v_pos, v_neg = ranking.auc_and_placements(scores, labels)
    var = delong_variance(v_pos, v_neg)
    if var <= 0.0:
        return ConfidenceInterval(estimate, estimate, estimate, level)
    half = z_for_level(level) * math.sqrt(var)
    return ConfidenceInterval(
        estimate, max(0.0, estimate - half), min(1.0, estimate + half), level
    )


def delong_compare(
    scores_a,
    scores_b,
    labels,
    *,
    paired: bool = True,
    labels_b=None,
) -> TestResult:
    """Two-sided DeLong z-test for an AUC difference.

    Paired: both score vectors grade the same subjects (``labels`` applies to
    both) and the variance of the difference subtracts twice the placement
    covariance. Unpaired: disjoint cohorts, ``labels_b`` supplies the second
    cohort's labels and the variances simply add.
    """
    if paired:
        if labels_b is not None:
            raise ValueError("labels_b is only meaningful for unpaired comparisons")
        sa, la, m, n = _validate_scores(scores_a, labels, min_per_class=2)
        sb, lb, _, _ = _validate_scores(scores_b, labels, min_per_class=2)
        if sa.size != sb.size:
            raise LengthMismatch("paired comparison needs equal-length score vectors")
        auc_a, vp_a, vn_a = ranking.auc_and_placements(sa, la)
        auc_b, vp_b, vn_b = ranking.auc_and_placements(sb, lb)
        s10 = np.cov(vp_a, vp_b, ddof=1)
        s01 = np.cov(vn_a, vn_b, ddof=1)
        var = (s10[0, 0] + s10[1, 1] - 2.0 * s10[0, 1]) / m
        var += (s01[0, 0] + s01[1, 1] - 2.0 * s01[0, 1]) / n
        method = "delong_paired"
    else:
        if labels_b is None:
            raise ValueError("unpaired comparison requires labels_b")
        sa, la, _, _ = _validate_scores(scores_a, labels, min_per_class=2)
        sb, lb, _, _ = _validate_scores(scores_b, labels_b, min_per_class=2)
        auc_a, vp_a, vn_a = ranking.auc_and_placements(sa, la)
        auc_b, vp_b, vn_b = ranking.auc_and_placements(sb, lb)
        var = delong_variance(vp_a, vn_a) + delong_variance(vp_b, vn_b)
        method = "delong_unpaired"

    diff = auc_a - auc_b
    if var <= 0.0:
        if diff == 0.0:
            return TestResult(0.0, 1.0, method, degenerate=True)
        return TestResult(math.copysign(math.inf, diff), 0.0, method, degenerate=True)
    z = diff / math.sqrt(var)
    return TestResult(z, min(1.0, 2.0 * norm_sf(abs(z))), method)


def mcnemar(
    b: int, c: int, exact_threshold: int = MCNEMAR_EXACT_THRESHOLD
) -> TestResult:
    """McNemar test from the discordant-pair counts.

    b + c = 0 gives p = 1; below ``exact_threshold`` discordant pairs the
    exact two-sided binomial(1/2) test runs; otherwise the continuity
    corrected chi-squared, with the corrected statistic floored at zero so
    |b - c| <= 1 never produces a spurious signal.
    """
    if b < 0 or c < 0:
        raise ValueError("discordant counts must be non-negative")
    n = b + c
    if n == 0:
        return TestResult(0.0, 1.0, "mcnemar_exact")
    if n < exact_threshold:
        k = min(b, c)
        p = min(1.0, 2.0 * binom_cdf_half(k, n))
        return TestResult(float(k), p, "mcnemar_exact")
    d = max(0.0, abs(b - c) - 1.0)
    stat = d * d / n
    return TestResult(stat, chi2_sf_1df(stat), "mcnemar_asymptotic")


def paired_diff_ci(
    b: int, c: int, n: int, level: float = DEFAULT_LEVEL
) -> ConfidenceInterval:
    """Wald interval for a paired difference of proportions, (b - c)/n.

    b and c are the discordant counts over a common denominator n; the
    standard error is sqrt(b + c - (b - c)^2 / n) / n.
    """
    _check_level(level)
    if n < 1:
        raise ZeroTrials("paired_diff_ci needs n >= 1")
    if b < 0 or c < 0 or b + c > n:
        raise ValueError(f"need 0 <= b + c <= n, got b={b} c={c} n={n}")
    est = (b - c) / n
    se = math.sqrt(max(0.0, b + c - (b - c) ** 2 / n)) / n
    half = z_for_level(level) * se
    return ConfidenceInterval(est, max(-1.0, est - half), min(1.0, est + half), level)


def bootstrap_percentile(
    statistic: Callable[[np.ndarray, np.ndarray], float],
    scores,
    labels,
    *,
    replicates: int,
    seed: int,
    level: float = DEFAULT_LEVEL,
    workers: int = 1,
) -> ConfidenceInterval:
    """Stratified percentile bootstrap of a score/label statistic.

    Resampling is within-label (class counts preserved), so every replicate
    keeps both classes by construction. Replicate r draws from a child of
    SeedSequence(seed), which makes the result byte-deterministic for a
    fixed seed regardless of worker count or scheduling.
    """
    _check_level(level)
    if replicates < 100:
        raise ValueError("bootstrap needs at least 100 replicates")
    scores, labels, n_pos, n_neg = _validate_scores(scores, labels)
    pos_scores = scores[labels]
    neg_scores = scores[~labels]
    rep_labels = np.concatenate(
        [np.ones(n_pos, dtype=bool), np.zeros(n_neg, dtype=bool)]
    )
    children = np.random.SeedSequence(seed).spawn(replicates)

    def one(r: int) -> float:
        rng = np.random.Generator(np.random.PCG64(children[r]))
        sample = np.concatenate(
            [
                pos_scores[rng.integers(0, n_pos, n_pos)],
                neg_scores[rng.integers(0, n_neg, n_neg)],
            ]
        )
        assert rep_labels.sum() and (~rep_labels).sum()  # stratified by construction
        return float(statistic(sample, rep_labels))

    values = np.empty(replicates, dtype=np.float64)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for r, v in zip(range(replicates), pool.map(one, range(replicates))):
                values[r] = v
    else:
        for r in range(replicates):
            values[r] = one(r)

    alpha = 1.0 - level
    lower, upper = np.quantile(values, [alpha / 2.0, 1.0 - alpha / 2.0])
    estimate = float(statistic(scores, labels))
    return ConfidenceInterval(estimate, float(lower), float(upper), level)
