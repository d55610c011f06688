"""triageval: evaluation toolkit for score-based triage classifiers.

Covers ROC/PR analysis with DeLong inference, threshold matching and
target-product-profile checks, the sensitivity / tests-saved / NNT triage
framework, subgroup analysis, density summaries, seeded synthetic cohorts
with known discrimination, and batch DICOM anonymization.
"""

from . import (
    anonymizer,
    curves,
    data_model,
    dicomio,
    framework,
    ranking,
    stats,
    strata,
    synth,
    thresholds,
)
from .ranking import BACKEND as kernel_backend

__version__ = "0.1.0"

__all__ = [
    "anonymizer",
    "curves",
    "data_model",
    "dicomio",
    "framework",
    "kernel_backend",
    "ranking",
    "stats",
    "strata",
    "synth",
    "thresholds",
    "__version__",
]
