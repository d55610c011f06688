"""Rule-driven batch DICOM anonymization with audit CSV emission.

Rules come from a CSV with columns ``DicomTags`` ("(gggg,eeee)", hex),
``Hashing`` and ``Anonymisation Required`` (Yes/No): hashing wins when a row
marks both. Hashed values are replaced by the lowercase hex SHA-256 of the
original string's UTF-8 bytes (trailing DICOM padding stripped first);
blanked values become empty. Absent tags are skipped, and any per-tag
failure blanks that tag, records the error type, and processing continues.

A file is screened before anonymization: no DICM magic at offset 128 means
invalid; in strict mode a study description containing "mammo", "spine",
"upper extremities", or "lower extremities" is also rejected, while the
word filter can be switched off for emulation of pipelines that compute the
check without gating on it.

Batch output: anonymized files under their base name, plus exactly three
audit CSVs: AccessionNotAvailableData.csv (files with no accession number
after anonymization), Errors.csv (filename, empty column, error type;
headerless), and Hashes.csv (one row per file keyed by a "Filename" column,
one column pair per hashed tag: "<name>" and "<name> hash").
"""

import csv
import hashlib
import io
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Tuple

from . import dicomio
from .dicomio import DicomError, DicomFile, decode_text, tag_name
from .errors import BadTagSyntax, MissingColumn, UnreadableFile

WORD_FILTER = ("mammo", "spine", "upper extremities", "lower extremities")

ACCESSION_TAG = (0x0008, 0x0050)
STUDY_DESCRIPTION_TAG = (0x0008, 0x1030)


class TagAction(Enum):
    HASH = "hash"
    BLANK = "blank"
    KEEP = "keep"


@dataclass(frozen=True)
class TagRule:
    group: int
    element: int
    action: TagAction


@dataclass
class AnonRecord:
    source: str
    patient_id: Optional[str] = None
    accession_number: Optional[str] = None
    study_uid: Optional[str] = None
    series_uid: Optional[str] = None
    sop_uid: Optional[str] = None
    hashes: Dict[str, Tuple[str, str]] = field(default_factory=dict)
    errors: List[str] = field(default_factory=list)


@dataclass
class BatchReport:
    processed: int
    records: List[AnonRecord]
    rejected: List[Tuple[str, str]]

    @property
    def accepted(self) -> int:
        return len(self.records)

    def as_dict(self) -> dict:
        return {
            "processed": self.processed,
            "accepted": self.accepted,
            "rejected": [{"file": f, "reason": r} for f, r in self.rejected],
        }


def load_rules(stream) -> List[TagRule]:
    """Parse the tag-policy CSV; hashing takes precedence over blanking."""
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    reader = csv.DictReader(stream)
    required = ("DicomTags", "Hashing", "Anonymisation Required")
    if reader.fieldnames is None:
        raise MissingColumn("DicomTags")
    for name in required:
        if name not in reader.fieldnames:
            raise MissingColumn(name)
    rules: List[TagRule] = []
    for row_no, row in enumerate(reader, start=2):
        raw = (row["DicomTags"] or "").strip().split(" ")[0]
        if len(raw) < 2 or raw[0] != "(" or raw[-1] != ")":
            raise BadTagSyntax(row_no, f"expected (gggg,eeee), got {raw!r}")
        parts = raw[1:-1].split(",")
        if len(parts) != 2:
            raise BadTagSyntax(row_no, f"expected (gggg,eeee), got {raw!r}")
        try:
            group = int(parts[0], 16)
            element = int(parts[1], 16)
        except ValueError:
            raise BadTagSyntax(row_no, f"non-hex tag ids in {raw!r}") from None
        if (row["Hashing"] or "").strip() == "Yes":
            action = TagAction.HASH
        elif (row["Anonymisation Required"] or "").strip() == "Yes":
            action = TagAction.BLANK
        else:
            action = TagAction.KEEP
        rules.append(TagRule(group, element, action))
    return rules


@dataclass(frozen=True)
class CxrVerdict:
    valid: bool
    reason: Optional[str] = None


def validate_cxr(
    data: bytes, study_description: Optional[str] = None, word_filter: bool = True
) -> CxrVerdict:
    """Screen raw bytes: magic header always; body-part word filter optionally.

    When no study description is supplied it is read from the file itself;
    an unparsable body with a valid header counts as having none.
    """
    if not dicomio.has_magic(data):
        return CxrVerdict(False, "no-header")
    if word_filter:
        if study_description is None:
            try:
                ds = dicomio.read_dicom(data)
                study_description = ds.get_string(*STUDY_DESCRIPTION_TAG)
            except DicomError:
                study_description = None
        if study_description:
            lowered = study_description.lower()
            for word in WORD_FILTER:
                if word in lowered:
                    return CxrVerdict(False, "word-filter")
    return CxrVerdict(True)


def hash_value(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def anonymize_file(source: str, data: bytes, rules: List[TagRule]) -> Tuple[bytes, AnonRecord]:
    """Apply the tag rules to one file; raises UnreadableFile if it won't parse."""
    try:
        ds = dicomio.read_dicom(data)
    except DicomError as exc:
        raise UnreadableFile(f"{source}: {exc}") from exc
    record = AnonRecord(
        source=source,
        patient_id=ds.get_string(0x0010, 0x0020),
        accession_number=ds.get_string(*ACCESSION_TAG),
        study_uid=ds.get_string(0x0020, 0x000D),
        series_uid=ds.get_string(0x0020, 0x000E),
        sop_uid=ds.get_string(0x0008, 0x0018),
    )
    for rule in rules:
        el = ds.find(rule.group, rule.element)
        if el is None or rule.action is TagAction.KEEP:
            continue
        try:
            if rule.action is TagAction.HASH:
                original = decode_text(el.value)
                hashed = hash_value(original)
                ds.set_string(rule.group, rule.element, hashed)
                record.hashes[tag_name(rule.group, rule.element)] = (original, hashed)
            else:
                ds.set_string(rule.group, rule.element, "")
        except Exception as exc:  # per-tag failure: blank and continue
            el.value = b""
            el.undefined_length = False
            record.errors.append(type(exc).__name__)
    return ds.to_bytes(), record


def _walk_sorted(input_dir: str) -> List[str]:
    paths = []
    for root, dirs, files in os.walk(input_dir):
        dirs.sort()
        for name in sorted(files):
            paths.append(os.path.join(root, name))
    return paths


def _process_one(path: str, rules: List[TagRule], word_filter: bool):
    name = os.path.basename(path)
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        return name, None, None, type(exc).__name__
    verdict = validate_cxr(data, word_filter=word_filter)
    if not verdict.valid:
        return name, None, None, verdict.reason
    try:
        out, record = anonymize_file(name, data, rules)
    except UnreadableFile as exc:
        return name, None, None, type(exc).__name__
    return name, out, record, None


def run_batch(
    input_dir: str,
    output_dir: str,
    rules: List[TagRule],
    report_dir: str,
    word_filter: bool = True,
    workers: int = 1,
) -> BatchReport:
    """Anonymize every file under input_dir; reports are order-stable.

    Files are processed (possibly in parallel) in sorted path order and all
    outputs aggregate on sorted base names, so reports do not depend on the
    worker count. A base-name collision is an error for the later file, not
    a silent overwrite.
    """
    paths = _walk_sorted(input_dir)
    results = []
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda p: _process_one(p, rules, word_filter), paths))
    else:
        results = [_process_one(p, rules, word_filter) for p in paths]

    records: List[AnonRecord] = []
    rejected: List[Tuple[str, str]] = []
    missing_accession: List[str] = []
    written = set()
    for name, out, record, reason in results:
        if reason is not None:
            rejected.append((name, reason))
            continue
        if name in written:
            rejected.append((name, "OutputCollision"))
            continue
        written.add(name)
        with open(os.path.join(output_dir, name), "wb") as fh:
            fh.write(out)
        records.append(record)
        anonymized = dicomio.read_dicom(out)
        accession = anonymized.get_string(*ACCESSION_TAG)
        if accession is None or len(str(accession)) == 0:
            missing_accession.append(name)

    records.sort(key=lambda r: r.source)
    rejected.sort()
    missing_accession.sort()

    _write_rows(
        os.path.join(report_dir, "AccessionNotAvailableData.csv"),
        [[name] for name in missing_accession],
    )
    _write_rows(
        os.path.join(report_dir, "Errors.csv"),
        [[name, "", reason] for name, reason in rejected],
    )
    _write_hashes(os.path.join(report_dir, "Hashes.csv"), records)
    return BatchReport(len(paths), records, rejected)


def _write_rows(path: str, rows: List[List[str]]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        for row in rows:
            writer.writerow(row)


def _write_hashes(path: str, records: List[AnonRecord]) -> None:
    columns: List[str] = []
    for record in records:
        for name in record.hashes:
            for col in (name, name + " hash"):
                if col not in columns:
                    columns.append(col)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["Filename"] + columns)
        for record in records:
            flat = {}
            for name, (original, hashed) in record.hashes.items():
                flat[name] = original
                flat[name + " hash"] = hashed
            writer.writerow([record.source] + [flat.get(c, "") for c in columns])
