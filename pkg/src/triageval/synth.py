"""Seeded synthetic cohorts with analytically known discrimination.

Latent model: negatives draw from N(0, 1), positives from N(mu_sep, 1), so
the true AUC is Phi(mu_sep / sqrt(2)) in closed form. Class counts are exact
(round(prevalence * n) positives), not Bernoulli, which keeps analytic
comparisons tight. Scores reach [0, 1] through a strictly increasing squash,
so every rank statistic of the latent sample is preserved.

PRNG: numpy's PCG64 behind numpy.random.Generator, seeded via SeedSequence.
Bitwise reproducibility is promised within this implementation only;
distributional behavior is what a reimplementation should match.
"""

import math
from dataclasses import dataclass

import numpy as np

from ._dist import norm_ppf
from .data_model import Cohort, CohortRecord
from .errors import BadSpec

_SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class BinormalSpec:
    mu_sep: float
    prevalence: float
    n: int
    seed: int
    squash: str = "logistic"


@dataclass(frozen=True)
class PriorTbMixSpec:
    base: BinormalSpec
    prior_tb_fraction: float
    neg_shift: float


def analytic_auc(mu_sep: float) -> float:
    """Closed-form AUC of the binormal model: Phi(mu_sep / sqrt(2))."""
    if not math.isfinite(mu_sep):
        raise ValueError("mu_sep must be finite")
    return 0.5 * (1.0 + math.erf(mu_sep / 2.0))


def separation_for_auc(target_auc: float) -> float:
    """Inverse of analytic_auc: the latent separation giving a target AUC."""
    if not 0.0 < target_auc < 1.0:
        raise ValueError("target AUC must be in (0, 1)")
    return _SQRT2 * norm_ppf(target_auc)


def _positive_count(spec: BinormalSpec) -> int:
    k = math.floor(spec.prevalence * spec.n + 0.5)
    if k < 1 or k > spec.n - 1:
        raise BadSpec(
            f"prevalence {spec.prevalence} with n={spec.n} leaves a class empty"
        )
    return k


def _validate(spec: BinormalSpec) -> None:
    if spec.n < 10:
        raise BadSpec(f"n must be >= 10, got {spec.n}")
    if not 0.0 < spec.prevalence < 1.0:
        raise BadSpec(f"prevalence must be in (0, 1), got {spec.prevalence}")
    if spec.squash not in ("logistic", "none"):
        raise BadSpec(f"squash must be logistic or none, got {spec.squash!r}")
    if not math.isfinite(spec.mu_sep):
        raise BadSpec("mu_sep must be finite")


def _squash(latent: np.ndarray, mode: str) -> np.ndarray:
    if mode == "logistic":
        return 1.0 / (1.0 + np.exp(-latent))
    # "none": affine min-max rescale onto [0, 1]; rank-preserving like the
    # sigmoid, so the AUC is untouched, but the raw spacing survives.
    lo, hi = float(latent.min()), float(latent.max())
    if hi == lo:
        return np.full_like(latent, 0.5)
    return (latent - lo) / (hi - lo)


def _records(labels, scores, prior_tb, product: str):
    width = len(str(len(labels)))
    return [
        CohortRecord(
            id=f"s{i:0{width}d}",
            bac_label=bool(labels[i]),
            scores={product: float(scores[i])},
            prior_tb=bool(prior_tb[i]),
        )
        for i in range(len(labels))
    ]


def generate(spec: BinormalSpec, product: str = "synthetic") -> Cohort:
    """Deterministic binormal cohort with exactly round(prevalence*n) positives."""
    _validate(spec)
    k = _positive_count(spec)
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(spec.seed)))
    labels = np.zeros(spec.n, dtype=bool)
    labels[rng.permutation(spec.n)[:k]] = True
    latent = rng.standard_normal(spec.n) + spec.mu_sep * labels
    scores = _squash(latent, spec.squash)
    prior = np.zeros(spec.n, dtype=bool)
    return Cohort(_records(labels, scores, prior, product), [product])


def generate_mixed(mix: PriorTbMixSpec, product: str = "synthetic") -> Cohort:
    """Binormal cohort with a prior-TB fraction whose negatives shift upward.

    The flagged negatives' latent scores gain ``neg_shift`` before squashing,
    degrading whole-cohort discrimination relative to the unmixed model. The
    label/score draws replay those of ``generate`` for the same base spec, so
    neg_shift = 0 reproduces it exactly.
    """
    spec = mix.base
    _validate(spec)
    if not 0.0 <= mix.prior_tb_fraction <= 1.0:
        raise BadSpec(f"prior_tb_fraction must be in [0, 1], got {mix.prior_tb_fraction}")
    if not math.isfinite(mix.neg_shift):
        raise BadSpec("neg_shift must be finite")
    k = _positive_count(spec)
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(spec.seed)))
    labels = np.zeros(spec.n, dtype=bool)
    labels[rng.permutation(spec.n)[:k]] = True
    latent = rng.standard_normal(spec.n) + spec.mu_sep * labels
    n_prior = math.floor(mix.prior_tb_fraction * spec.n + 0.5)
    prior = np.zeros(spec.n, dtype=bool)
    prior[rng.permutation(spec.n)[:n_prior]] = True
    latent = latent + mix.neg_shift * (prior & ~labels)
    scores = _squash(latent, spec.squash)
    return Cohort(_records(labels, scores, prior, product), [product])
