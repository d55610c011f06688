"""Minimal DICOM Part-10 codec: enough to read, edit string tags, and rewrite.

Supported transfer syntaxes are Implicit VR Little Endian (1.2.840.10008.1.2)
and Explicit VR Little Endian (1.2.840.10008.1.2.1). Elements are kept as raw
(tag, VR, value-bytes) triples so that everything untouched round-trips
byte-identically; undefined-length values (sequences, encapsulated pixel
data) are carried verbatim, delimiters included. This is a tag editor, not a
pixel codec: no decompression, no charset handling beyond UTF-8/Latin-1.
"""

import struct
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

MAGIC_OFFSET = 128
MAGIC = b"DICM"

IMPLICIT_VR_LE = "1.2.840.10008.1.2"
EXPLICIT_VR_LE = "1.2.840.10008.1.2.1"

_LONG_VRS = {"OB", "OD", "OF", "OL", "OW", "SQ", "UC", "UN", "UR", "UT"}
_UNDEFINED = 0xFFFFFFFF

_ITEM = (0xFFFE, 0xE000)
_ITEM_DELIM = (0xFFFE, 0xE00D)
_SEQ_DELIM = (0xFFFE, 0xE0DD)

# Keyword and VR for the identity-bearing tags this toolkit edits or reports.
_TAG_INFO = {
    (0x0008, 0x0018): ("SOPInstanceUID", "UI"),
    (0x0008, 0x0020): ("StudyDate", "DA"),
    (0x0008, 0x0030): ("StudyTime", "TM"),
    (0x0008, 0x0050): ("AccessionNumber", "SH"),
    (0x0008, 0x0060): ("Modality", "CS"),
    (0x0008, 0x0080): ("InstitutionName", "LO"),
    (0x0008, 0x0090): ("ReferringPhysicianName", "PN"),
    (0x0008, 0x1030): ("StudyDescription", "LO"),
    (0x0008, 0x103E): ("SeriesDescription", "LO"),
    (0x0010, 0x0010): ("PatientName", "PN"),
    (0x0010, 0x0020): ("PatientID", "LO"),
    (0x0010, 0x0030): ("PatientBirthDate", "DA"),
    (0x0010, 0x0040): ("PatientSex", "CS"),
    (0x0010, 0x1010): ("PatientAge", "AS"),
    (0x0010, 0x1030): ("PatientWeight", "DS"),
    (0x0020, 0x000D): ("StudyInstanceUID", "UI"),
    (0x0020, 0x000E): ("SeriesInstanceUID", "UI"),
    (0x0020, 0x0010): ("StudyID", "SH"),
    (0x0020, 0x0011): ("SeriesNumber", "IS"),
    (0x0020, 0x0013): ("InstanceNumber", "IS"),
    (0x7FE0, 0x0010): ("PixelData", "OW"),
}
_NAME_TO_TAG = {name: tag for tag, (name, _) in _TAG_INFO.items()}


class DicomError(Exception):
    pass


def tag_name(group: int, element: int) -> str:
    info = _TAG_INFO.get((group, element))
    return info[0] if info else f"({group:04x},{element:04x})"


def known_vr(group: int, element: int) -> Optional[str]:
    info = _TAG_INFO.get((group, element))
    return info[1] if info else None


@dataclass
class DicomElement:
    group: int
    element: int
    vr: Optional[str]  # None under implicit VR
    value: bytes
    undefined_length: bool = False

    @property
    def tag(self) -> Tuple[int, int]:
        return (self.group, self.element)


@dataclass
class DicomFile:
    preamble: bytes
    meta: List[DicomElement] = field(default_factory=list)
    elements: List[DicomElement] = field(default_factory=list)
    transfer_syntax: str = EXPLICIT_VR_LE

    @property
    def implicit(self) -> bool:
        return self.transfer_syntax == IMPLICIT_VR_LE

    def find(self, group: int, element: int) -> Optional[DicomElement]:
        for el in self.elements:
            if el.group == group and el.element == element:
                return el
        return None

    def get_string(self, group: int, element: int) -> Optional[str]:
        el = self.find(group, element)
        if el is None:
            return None
        return decode_text(el.value)

    def set_string(self, group: int, element: int, text: str) -> None:
        el = self.find(group, element)
        if el is None:
            raise KeyError(f"tag ({group:04x},{element:04x}) not present")
        vr = el.vr or known_vr(group, element) or "LO"
        el.value = encode_text(text, vr)
        el.undefined_length = False

    def to_bytes(self) -> bytes:
        out = bytearray()
        out += self.preamble
        out += MAGIC
        meta_body = bytearray()
        for el in self.meta:
            if el.tag == (0x0002, 0x0000):
                continue
            meta_body += _encode_element(el, implicit=False)
        group_len = DicomElement(0x0002, 0x0000, "UL", struct.pack("<I", len(meta_body)))
        out += _encode_element(group_len, implicit=False)
        out += meta_body
        for el in self.elements:
            out += _encode_element(el, implicit=self.implicit)
        return bytes(out)


def decode_text(value: bytes) -> str:
    try:
        text = value.decode("utf-8")
    except UnicodeDecodeError:
        text = value.decode("latin-1")
    return text.rstrip(" \x00")


def encode_text(text: str, vr: str) -> bytes:
    raw = text.encode("utf-8")
    if len(raw) % 2:
        raw += b"\x00" if vr == "UI" else b" "
    return raw


def has_magic(data: bytes) -> bool:
    return len(data) >= MAGIC_OFFSET + 4 and data[MAGIC_OFFSET:MAGIC_OFFSET + 4] == MAGIC


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def need(self, count: int) -> None:
        if self.pos + count > len(self.data):
            raise DicomError("truncated element")

    def u16(self) -> int:
        self.need(2)
        (v,) = struct.unpack_from("<H", self.data, self.pos)
        self.pos += 2
        return v

    def u32(self) -> int:
        self.need(4)
        (v,) = struct.unpack_from("<I", self.data, self.pos)
        self.pos += 4
        return v

    def raw(self, count: int) -> bytes:
        self.need(count)
        out = self.data[self.pos:self.pos + count]
        self.pos += count
        return out

    def peek_tag(self) -> Tuple[int, int]:
        self.need(4)
        return struct.unpack_from("<HH", self.data, self.pos)

    def at_end(self) -> bool:
        return self.pos >= len(self.data)


def _read_element(r: _Reader, implicit: bool) -> DicomElement:
    group = r.u16()
    element = r.u16()
    if implicit:
        vr = None
        length = r.u32()
    else:
        vr = r.raw(2).decode("ascii", errors="replace")
        if vr in _LONG_VRS:
            r.raw(2)
            length = r.u32()
        else:
            length = r.u16()
    if length == _UNDEFINED:
        start = r.pos
        _skip_undefined_value(r, implicit)
        return DicomElement(group, element, vr, r.data[start:r.pos], undefined_length=True)
    return DicomElement(group, element, vr, r.raw(length))


def _skip_undefined_value(r: _Reader, implicit: bool) -> None:
    """Advance past items up to and including the sequence delimiter."""
    while True:
        group = r.u16()
        element = r.u16()
        length = r.u32()
        if (group, element) == (_SEQ_DELIM):
            return
        if (group, element) != _ITEM:
            raise DicomError(
                f"unexpected tag ({group:04x},{element:04x}) inside undefined-length value"
            )
        if length == _UNDEFINED:
            _skip_undefined_item(r, implicit)
        else:
            r.raw(length)


def _skip_undefined_item(r: _Reader, implicit: bool) -> None:
    """Advance past an undefined-length item's dataset and its delimiter."""
    while True:
        if r.peek_tag() == _ITEM_DELIM:
            r.u16()
            r.u16()
            r.u32()
            return
        _read_element(r, implicit)


def _encode_element(el: DicomElement, implicit: bool) -> bytes:
    out = bytearray(struct.pack("<HH", el.group, el.element))
    length = _UNDEFINED if el.undefined_length else len(el.value)
    if implicit:
        out += struct.pack("<I", length)
    else:
        vr = el.vr or known_vr(el.group, el.element) or "UN"
        out += vr.encode("ascii")
        if vr in _LONG_VRS:
            out += b"\x00\x00"
            out += struct.pack("<I", length)
        else:
            if length > 0xFFFF:
                raise DicomError(f"value too long for short VR {vr}")
            out += struct.pack("<H", length)
    out += el.value
    return bytes(out)


def read_dicom(data: bytes) -> DicomFile:
    if not has_magic(data):
        raise DicomError("missing DICM magic header")
    r = _Reader(data)
    preamble = r.raw(MAGIC_OFFSET)
    r.raw(4)  # DICM
    meta: List[DicomElement] = []
    while not r.at_end() and r.peek_tag()[0] == 0x0002:
        meta.append(_read_element(r, implicit=False))
    syntax = EXPLICIT_VR_LE
    for el in meta:
        if el.tag == (0x0002, 0x0010):
            syntax = decode_text(el.value)
    if syntax not in (IMPLICIT_VR_LE, EXPLICIT_VR_LE):
        raise DicomError(f"unsupported transfer syntax {syntax!r}")
    implicit = syntax == IMPLICIT_VR_LE
    elements: List[DicomElement] = []
    while not r.at_end():
        elements.append(_read_element(r, implicit))
    return DicomFile(preamble, meta, elements, syntax)


def read_dicom_file(path) -> DicomFile:
    with open(path, "rb") as fh:
        return read_dicom(fh.read())


def new_dataset(transfer_syntax: str = EXPLICIT_VR_LE) -> DicomFile:
    """Fresh single-frame dataset skeleton with a standard file meta group."""
    meta = [
        DicomElement(0x0002, 0x0001, "OB", b"\x00\x01"),
        DicomElement(0x0002, 0x0002, "UI", encode_text("1.2.840.10008.5.1.4.1.1.1", "UI")),
        DicomElement(0x0002, 0x0003, "UI", encode_text("0.0.0.0", "UI")),
        DicomElement(0x0002, 0x0010, "UI", encode_text(transfer_syntax, "UI")),
    ]
    return DicomFile(b"\x00" * MAGIC_OFFSET, meta, [], transfer_syntax)


def add_string(ds: DicomFile, group: int, element: int, text: str, vr: Optional[str] = None) -> None:
    vr = vr or known_vr(group, element) or "LO"
    ds.elements.append(DicomElement(group, element, None if ds.implicit else vr, encode_text(text, vr)))
    ds.elements.sort(key=lambda el: el.tag)


def add_bytes(ds: DicomFile, group: int, element: int, value: bytes, vr: str = "OW") -> None:
    if len(value) % 2:
        value += b"\x00"
    ds.elements.append(DicomElement(group, element, None if ds.implicit else vr, value))
    ds.elements.sort(key=lambda el: el.tag)
