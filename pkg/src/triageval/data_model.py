"""Cohort data model, CSV ingestion and serialization, reader-grade binarization.

The cohort CSV convention: required columns ``id`` and ``bac_label``
(0/1/true/false), optional covariates ``age``, ``gender`` (F/M), ``prior_tb``
(0/1), ``source`` (community|contacts|private|dots|public|walkin), ``grade``
(HS|PT|AN|N), ``mtb_burden`` (VL|L|M|H), and one or more ``score:<product>``
columns. Products are discovered from the header, never configured. Scores
are normalized to [0, 1] at ingestion; everything downstream works on the
unit interval.
"""

import csv
import io
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .errors import (
    BadValue,
    DuplicateId,
    EmptyCohort,
    MissingColumn,
    MissingGrade,
    OutOfRange,
)


class Gender(Enum):
    FEMALE = "female"
    MALE = "male"
    UNKNOWN = "unknown"


class PatientSource(Enum):
    COMMUNITY = "community"
    CONTACTS = "contacts"
    PRIVATE_REFERRAL = "private_referral"
    DOTS_RETESTING = "dots_retesting"
    PUBLIC_REFERRAL = "public_referral"
    WALK_IN = "walk_in"
    UNKNOWN = "unknown"


class RadiologistGrade(Enum):
    """Reader grades ordered by decreasing suspicion."""

    HIGHLY_SUGGESTIVE = "highly_suggestive"
    POSSIBLY_TB = "possibly_tb"
    ABNORMAL_NOT_TB = "abnormal_not_tb"
    NORMAL = "normal"

    @property
    def severity(self) -> int:
        return _GRADE_SEVERITY[self]


_GRADE_SEVERITY = {
    RadiologistGrade.HIGHLY_SUGGESTIVE: 3,
    RadiologistGrade.POSSIBLY_TB: 2,
    RadiologistGrade.ABNORMAL_NOT_TB: 1,
    RadiologistGrade.NORMAL: 0,
}


class MtbBurden(Enum):
    VERY_LOW = "very_low"
    LOW = "low"
    MEDIUM = "medium"
    HIGH = "high"


class BinaryClassification(Enum):
    """Dichotomizations of the reader grades, strictest (A) to loosest (C)."""

    A = "A"
    B = "B"
    C = "C"

    @property
    def positive_grades(self) -> frozenset:
        return _POSITIVE_GRADES[self]


_POSITIVE_GRADES = {
    BinaryClassification.A: frozenset({RadiologistGrade.HIGHLY_SUGGESTIVE}),
    BinaryClassification.B: frozenset(
        {RadiologistGrade.HIGHLY_SUGGESTIVE, RadiologistGrade.POSSIBLY_TB}
    ),
    BinaryClassification.C: frozenset(
        {
            RadiologistGrade.HIGHLY_SUGGESTIVE,
            RadiologistGrade.POSSIBLY_TB,
            RadiologistGrade.ABNORMAL_NOT_TB,
        }
    ),
}


@dataclass(frozen=True)
class CohortRecord:
    id: str
    bac_label: bool
    scores: Mapping[str, float]
    age_years: Optional[int] = None
    gender: Gender = Gender.UNKNOWN
    prior_tb: bool = False
    patient_source: PatientSource = PatientSource.UNKNOWN
    radiologist_grade: Optional[RadiologistGrade] = None
    mtb_burden: Optional[MtbBurden] = None


class Cohort:
    """Immutable, order-preserving collection of records.

    Score and label arrays are materialized once at construction; instances
    are safe to share across concurrent readers.
    """

    def __init__(self, records: Sequence[CohortRecord], product_names: Sequence[str]):
        self.records = list(records)
        self.product_names = list(product_names)
        seen = set()
        for rec in self.records:
            if not rec.id:
                raise ValueError("record with empty id")
            if rec.id in seen:
                raise ValueError(f"duplicate record id {rec.id!r}")
            seen.add(rec.id)
            if set(rec.scores) != set(self.product_names):
                raise ValueError(
                    f"record {rec.id!r} scores do not match product list"
                )
            for name, value in rec.scores.items():
                if not 0.0 <= value <= 1.0:
                    raise ValueError(
                        f"record {rec.id!r} score {name!r}={value} outside [0, 1]"
                    )
        self._labels = np.array([r.bac_label for r in self.records], dtype=bool)
        self._scores = {
            name: np.array([r.scores[name] for r in self.records], dtype=np.float64)
            for name in self.product_names
        }

    def __len__(self) -> int:
        return len(self.records)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Cohort)
            and self.product_names == other.product_names
            and self.records == other.records
        )

    @property
    def labels(self) -> np.ndarray:
        return self._labels

    @property
    def n_pos(self) -> int:
        return int(self._labels.sum())

    @property
    def n_neg(self) -> int:
        return len(self.records) - self.n_pos

    def scores_for(self, product: str) -> np.ndarray:
        if product not in self._scores:
            raise KeyError(f"unknown product {product!r}")
        return self._scores[product]

    def subset(self, mask) -> "Cohort":
        mask = np.asarray(mask)
        if mask.dtype == bool:
            idx = np.flatnonzero(mask)
        else:
            idx = mask
        return Cohort([self.records[i] for i in idx], self.product_names)


@dataclass(frozen=True)
class IngestOptions:
    """Score-scale declaration for ingestion.

    ``score_scale`` applies to every score column unless overridden per
    product in ``per_product_scale``. There is no auto-detection: a value
    outside the declared range is an error, never clamped.
    """

    score_scale: str = "unit"
    per_product_scale: Optional[Mapping[str, str]] = None

    def scale_for(self, product: str) -> str:
        if self.per_product_scale and product in self.per_product_scale:
            return self.per_product_scale[product]
        return self.score_scale


def normalize_score(raw: float, scale: str) -> float:
    """Map a raw score onto [0, 1] for the declared scale.

    ``unit`` is the identity on [0, 1]; ``percent`` divides by 100 on
    [0, 100]. Values outside the declared range raise OutOfRange; silent
    clamping would hide corrupt data.
    """
    if not math.isfinite(raw):
        raise OutOfRange(f"score {raw} is not finite")
    if scale == "unit":
        if not 0.0 <= raw <= 1.0:
            raise OutOfRange(f"score {raw} outside [0, 1] for unit scale")
        return raw
    if scale == "percent":
        if not 0.0 <= raw <= 100.0:
            raise OutOfRange(f"score {raw} outside [0, 100] for percent scale")
        return raw / 100.0
    raise ValueError(f"unknown scale {scale!r}")


def radiologist_binary(
    grade: Optional[RadiologistGrade], classification: BinaryClassification
) -> bool:
    """Dichotomize a reader grade under classification A, B, or C."""
    if grade is None:
        raise MissingGrade("record has no radiologist grade")
    return grade in classification.positive_grades


_GENDER_CODES = {"F": Gender.FEMALE, "M": Gender.MALE}
_SOURCE_CODES = {
    "community": PatientSource.COMMUNITY,
    "contacts": PatientSource.CONTACTS,
    "private": PatientSource.PRIVATE_REFERRAL,
    "dots": PatientSource.DOTS_RETESTING,
    "public": PatientSource.PUBLIC_REFERRAL,
    "walkin": PatientSource.WALK_IN,
}
_GRADE_CODES = {
    "HS": RadiologistGrade.HIGHLY_SUGGESTIVE,
    "PT": RadiologistGrade.POSSIBLY_TB,
    "AN": RadiologistGrade.ABNORMAL_NOT_TB,
    "N": RadiologistGrade.NORMAL,
}
_BURDEN_CODES = {
    "VL": MtbBurden.VERY_LOW,
    "L": MtbBurden.LOW,
    "M": MtbBurden.MEDIUM,
    "H": MtbBurden.HIGH,
}
_BOOL_CODES = {"0": False, "1": True, "false": False, "true": True}

_GENDER_OUT = {Gender.FEMALE: "F", Gender.MALE: "M", Gender.UNKNOWN: ""}
_SOURCE_OUT = {v: k for k, v in _SOURCE_CODES.items()} | {PatientSource.UNKNOWN: ""}
_GRADE_OUT = {v: k for k, v in _GRADE_CODES.items()}
_BURDEN_OUT = {v: k for k, v in _BURDEN_CODES.items()}

SCORE_PREFIX = "score:"


def _parse_bool(text: str, row: int, column: str) -> bool:
    try:
        return _BOOL_CODES[text.strip().lower()]
    except KeyError:
        raise BadValue(row, column, f"expected 0/1/true/false, got {text!r}") from None


def parse_cohort(stream, options: IngestOptions = IngestOptions()) -> Cohort:
    """Parse a cohort CSV into a Cohort.

    Row numbers in errors are 1-based physical rows, header included.
    Required fields (`id`, `bac_label`, scores) are strict; unrecognized
    covariate values degrade to the explicit unknown/missing variants so
    subgroup analysis can exclude rather than misclassify them.
    """
    if isinstance(stream, (bytes, str)):
        stream = io.StringIO(stream.decode() if isinstance(stream, bytes) else stream)
    reader = csv.reader(stream)
    try:
        header = next(reader)
    except StopIteration:
        raise MissingColumn("id") from None
    header = [h.strip() for h in header]
    col = {name: i for i, name in enumerate(header)}
    for required in ("id", "bac_label"):
        if required not in col:
            raise MissingColumn(required)
    products = [h[len(SCORE_PREFIX):] for h in header if h.startswith(SCORE_PREFIX)]
    if not products:
        raise MissingColumn("score:<product>")
    score_cols = {p: col[SCORE_PREFIX + p] for p in products}

    def cell(row_values, name):
        i = col.get(name)
        if i is None or i >= len(row_values):
            return ""
        return row_values[i].strip()

    records = []
    seen: dict = {}
    for row_no, values in enumerate(reader, start=2):
        if not values or all(not v.strip() for v in values):
            continue
        rid = cell(values, "id")
        if not rid:
            raise BadValue(row_no, "id", "empty id")
        if rid in seen:
            raise DuplicateId(row_no, rid)
        seen[rid] = row_no
        bac = _parse_bool(cell(values, "bac_label"), row_no, "bac_label")

        age: Optional[int] = None
        age_text = cell(values, "age")
        if age_text:
            try:
                age = int(age_text)
            except ValueError:
                raise BadValue(row_no, "age", f"not an integer: {age_text!r}") from None
            if age < 0:
                raise BadValue(row_no, "age", f"negative: {age}")

        gender = _GENDER_CODES.get(cell(values, "gender").upper(), Gender.UNKNOWN)
        prior_text = cell(values, "prior_tb")
        prior_tb = (
            _parse_bool(prior_text, row_no, "prior_tb") if prior_text else False
        )
        source = _SOURCE_CODES.get(cell(values, "source").lower(), PatientSource.UNKNOWN)
        grade = _GRADE_CODES.get(cell(values, "grade").upper())
        burden = _BURDEN_CODES.get(cell(values, "mtb_burden").upper())

        scores = {}
        for product, idx in score_cols.items():
            column = SCORE_PREFIX + product
            text = values[idx].strip() if idx < len(values) else ""
            if not text:
                raise BadValue(row_no, column, "missing score")
            try:
                raw = float(text)
            except ValueError:
                raise BadValue(row_no, column, f"not a number: {text!r}") from None
            try:
                scores[product] = normalize_score(raw, options.scale_for(product))
            except OutOfRange as exc:
                raise BadValue(row_no, column, str(exc)) from None

        records.append(
            CohortRecord(
                id=rid,
                bac_label=bac,
                scores=scores,
                age_years=age,
                gender=gender,
                prior_tb=prior_tb,
                patient_source=source,
                radiologist_grade=grade,
                mtb_burden=burden,
            )
        )
    return Cohort(records, products)


def write_cohort(cohort: Cohort, stream) -> None:
    """Serialize a cohort to CSV; inverse of parse_cohort for unit-scale data.

    Floats are written with repr so re-parsing reproduces them exactly.
    """
    writer = csv.writer(stream, lineterminator="\n")
    header = ["id", "bac_label", "age", "gender", "prior_tb", "source", "grade", "mtb_burden"]
    header += [SCORE_PREFIX + p for p in cohort.product_names]
    writer.writerow(header)
    for rec in cohort.records:
        row = [
            rec.id,
            "1" if rec.bac_label else "0",
            "" if rec.age_years is None else str(rec.age_years),
            _GENDER_OUT[rec.gender],
            "1" if rec.prior_tb else "0",
            _SOURCE_OUT[rec.patient_source],
            "" if rec.radiologist_grade is None else _GRADE_OUT[rec.radiologist_grade],
            "" if rec.mtb_burden is None else _BURDEN_OUT[rec.mtb_burden],
        ]
        row += [repr(rec.scores[p]) for p in cohort.product_names]
        writer.writerow(row)


def cohort_to_csv(cohort: Cohort) -> str:
    buf = io.StringIO()
    write_cohort(cohort, buf)
    return buf.getvalue()


@dataclass(frozen=True)
class QuartileSummary:
    n: int
    median: float
    q1: float
    q3: float

    @staticmethod
    def of(values) -> Optional["QuartileSummary"]:
        arr = np.asarray(values, dtype=np.float64)
        if arr.size == 0:
            return None
        q1, med, q3 = np.percentile(arr, [25, 50, 75])
        return QuartileSummary(int(arr.size), float(med), float(q1), float(q3))

    def as_dict(self) -> dict:
        return {"n": self.n, "median": self.median, "q1": self.q1, "q3": self.q3}


@dataclass(frozen=True)
class SummaryReport:
    n: int
    n_pos: int
    n_neg: int
    prevalence: float
    grade_counts: dict
    source_counts: dict
    gender_counts: dict
    prior_tb_counts: dict
    age: dict = field(default_factory=dict)
    score_summaries: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        def with_pct(counts):
            return {
                key: {"count": c, "pct": c / self.n} for key, c in counts.items()
            }

        def quartiles(d):
            return {k: (v.as_dict() if v else None) for k, v in d.items()}

        return {
            "n": self.n,
            "n_pos": self.n_pos,
            "n_neg": self.n_neg,
            "prevalence": self.prevalence,
            "grade_counts": with_pct(self.grade_counts),
            "source_counts": with_pct(self.source_counts),
            "gender_counts": with_pct(self.gender_counts),
            "prior_tb_counts": with_pct(self.prior_tb_counts),
            "age": quartiles(self.age),
            "scores": {
                p: quartiles(groups) for p, groups in self.score_summaries.items()
            },
        }


def cohort_summary(cohort: Cohort) -> SummaryReport:
    """Descriptive summary: counts by covariate, quartiles of age and scores."""
    if len(cohort) == 0:
        raise EmptyCohort("cannot summarize an empty cohort")
    labels = cohort.labels
    n = len(cohort)
    n_pos = int(labels.sum())

    def count_by(key_fn, keys):
        counts = {k: 0 for k in keys}
        for rec in cohort.records:
            counts[key_fn(rec)] += 1
        return counts

    grade_counts = count_by(
        lambda r: r.radiologist_grade.value if r.radiologist_grade else "ungraded",
        [g.value for g in RadiologistGrade] + ["ungraded"],
    )
    source_counts = count_by(
        lambda r: r.patient_source.value, [s.value for s in PatientSource]
    )
    gender_counts = count_by(lambda r: r.gender.value, [g.value for g in Gender])
    prior_counts = count_by(
        lambda r: "prior_tb" if r.prior_tb else "new", ["prior_tb", "new"]
    )

    ages = np.array(
        [r.age_years for r in cohort.records if r.age_years is not None],
        dtype=np.float64,
    )
    age_mask = np.array([r.age_years is not None for r in cohort.records])
    age = {
        "overall": QuartileSummary.of(ages),
        "pos": QuartileSummary.of(ages[labels[age_mask]]) if ages.size else None,
        "neg": QuartileSummary.of(ages[~labels[age_mask]]) if ages.size else None,
    }

    score_summaries = {}
    for product in cohort.product_names:
        s = cohort.scores_for(product)
        score_summaries[product] = {
            "overall": QuartileSummary.of(s),
            "pos": QuartileSummary.of(s[labels]),
            "neg": QuartileSummary.of(s[~labels]),
        }

    return SummaryReport(
        n=n,
        n_pos=n_pos,
        n_neg=n - n_pos,
        prevalence=n_pos / n,
        grade_counts=grade_counts,
        source_counts=source_counts,
        gender_counts=gender_counts,
        prior_tb_counts=prior_counts,
        age=age,
        score_summaries=score_summaries,
    )
