"""Loading of clinical letters (plain text / i2b2 XML), gold annotations, and lexicons."""
from __future__ import annotations

import csv
import io
import xml.etree.ElementTree as ET
from dataclasses import dataclass

from .types import (
    DeidError,
    Document,
    DocumentSource,
    EntitySpan,
    EntityType,
    SpanSource,
    validate_spans,
)


class XmlMalformed(DeidError):
    pass


class MissingTextElement(DeidError):
    pass


class MultipleTextElements(DeidError):
    pass


class UnknownCategory(DeidError):
    def __init__(self, label: str):
        self.label = label
        super().__init__(f"unknown annotation category {label!r}")


class SpanMismatch(DeidError):
    def __init__(self, start: int, end: int, expected: str, actual: str):
        super().__init__(
            f"annotation at [{start},{end}) declares text {expected!r} but document has {actual!r}"
        )


class EmptyLexicon(DeidError):
    pass


# i2b2 2014 sub-categories collapsed to the eight main types. Unknown labels
# are a hard error: silently dropping gold spans would corrupt evaluation.
CATEGORY_MAP: dict[str, EntityType] = {
    # names: patients, doctors, usernames (titles are excluded upstream by the annotators)
    "NAME": EntityType.NAME,
    "PATIENT": EntityType.NAME,
    "DOCTOR": EntityType.NAME,
    "USERNAME": EntityType.NAME,
    # professions of non-medical staff
    "PROFESSION": EntityType.PROFESSION,
    # locations: every address component carries its own tag
    "LOCATION": EntityType.LOCATION,
    "HOSPITAL": EntityType.LOCATION,
    "ORGANIZATION": EntityType.LOCATION,
    "STREET": EntityType.LOCATION,
    "CITY": EntityType.LOCATION,
    "STATE": EntityType.LOCATION,
    "COUNTRY": EntityType.LOCATION,
    "ZIP": EntityType.LOCATION,
    "LOCATION-OTHER": EntityType.LOCATION,
    "AGE": EntityType.AGE,
    # dates include seasons, exclude times
    "DATE": EntityType.DATE,
    # contact: phones (incl. pagers), fax, email, URLs, IP addresses
    "CONTACT": EntityType.CONTACT,
    "PHONE": EntityType.CONTACT,
    "FAX": EntityType.CONTACT,
    "EMAIL": EntityType.CONTACT,
    "URL": EntityType.CONTACT,
    "IPADDR": EntityType.CONTACT,
    "IPADDRESS": EntityType.CONTACT,
    "PAGER": EntityType.CONTACT,
    # unique identifiers
    "ID": EntityType.ID,
    "IDNUM": EntityType.ID,
    "MEDICALRECORD": EntityType.ID,
    "SSN": EntityType.ID,
    "SOCIALSECURITYNUMBER": EntityType.ID,
    "HEALTHPLAN": EntityType.ID,
    "ACCOUNT": EntityType.ID,
    "LICENSE": EntityType.ID,
    "VEHICLE": EntityType.ID,
    "DEVICE": EntityType.ID,
    "BIOID": EntityType.ID,
    "PHI": EntityType.PHI,
    "OTHER": EntityType.PHI,
}


@dataclass(frozen=True)
class GoldAnnotation:
    doc_id: str
    spans: tuple[EntitySpan, ...]


@dataclass(frozen=True)
class Lexicon:
    """Entity surface strings for one type; originals kept, lookups case-normalized."""

    etype: EntityType
    entries: tuple[str, ...]
    normalized: tuple[str, ...]

    def __post_init__(self):
        if any(not e.strip() for e in self.entries):
            raise EmptyLexicon(f"{self.etype.value} lexicon contains a blank entry")

    def __len__(self) -> int:
        return len(self.entries)


def fold(text: str) -> str:
    """Length-preserving case normalization (plain lower() can change length)."""
    lowered = text.lower()
    if len(lowered) == len(text):
        return lowered
    return "".join(c if len(c.lower()) != 1 else c.lower() for c in text)


def make_lexicon(etype: EntityType, raw_entries: list[str]) -> Lexicon:
    entries: list[str] = []
    seen: set[str] = set()
    for raw in raw_entries:
        entry = raw.strip()
        if not entry:
            continue
        key = fold(entry)
        if key in seen:
            continue
        seen.add(key)
        entries.append(entry)
    if not entries:
        raise EmptyLexicon(f"no usable entries for {etype.value}")
    return Lexicon(etype=etype, entries=tuple(entries), normalized=tuple(fold(e) for e in entries))


def _parse_xml(data: bytes) -> ET.Element:
    try:
        return ET.fromstring(data)
    except ET.ParseError as exc:
        raise XmlMalformed(str(exc)) from exc


def _find_text_element(root: ET.Element) -> ET.Element:
    found = list(root.iter("TEXT"))  # iter() includes the root itself when it matches
    if not found:
        raise MissingTextElement("no <TEXT> element")
    if len(found) > 1:
        raise MultipleTextElements(f"{len(found)} <TEXT> elements")
    return found[0]


def load_letter_xml(data: bytes, doc_id: str = "") -> Document:
    """Extract the plain text inside the single <TEXT> element of an i2b2 letter."""
    root = _parse_xml(data)
    text_el = _find_text_element(root)
    return Document(id=doc_id, text=text_el.text or "", source=DocumentSource.I2B2_XML)


def load_letter_text(data: bytes, doc_id: str = "") -> Document:
    return Document(id=doc_id, text=data.decode("utf-8"), source=DocumentSource.PLAIN_TEXT)


def document_to_xml(doc: Document) -> bytes:
    """Render a document back into the letter XML template (round-trip aid)."""
    root = ET.Element("deIdi2b2")
    text_el = ET.SubElement(root, "TEXT")
    text_el.text = doc.text
    return ET.tostring(root, encoding="utf-8")


def load_gold_annotations(data: bytes, doc: Document) -> GoldAnnotation:
    """Read i2b2-style gold tags (start/end/TYPE attributes) against an extracted document."""
    root = _parse_xml(data)
    spans: list[EntitySpan] = []
    tags = root.find("TAGS")
    elements = list(tags) if tags is not None else [
        el for el in root.iter() if "start" in el.attrib and "end" in el.attrib
    ]
    for el in elements:
        if "start" not in el.attrib or "end" not in el.attrib:
            continue
        start = int(el.attrib["start"])
        end = int(el.attrib["end"])
        label = (el.attrib.get("TYPE") or el.tag).upper()
        if label not in CATEGORY_MAP:
            raise UnknownCategory(label)
        surface = doc.text[start:end]
        declared = el.attrib.get("text")
        if declared is not None and declared != surface:
            raise SpanMismatch(start, end, declared, surface)
        spans.append(
            EntitySpan(start=start, end=end, etype=CATEGORY_MAP[label],
                       source=SpanSource.MANUAL, surface=surface)
        )
    return GoldAnnotation(doc_id=doc.id, spans=tuple(validate_spans(doc, spans)))


def load_lexicon_csv(data: bytes, etype: EntityType) -> Lexicon:
    """First CSV column, RFC 4180 quoting; a leading 'name' cell is treated as a header."""
    text = data.decode("utf-8-sig")
    rows = [row for row in csv.reader(io.StringIO(text)) if row]
    values = [row[0] for row in rows]
    if values and values[0].strip().lower() == "name":
        values = values[1:]
    return make_lexicon(etype, values)


def load_lexicon_txt(data: bytes, etype: EntityType) -> Lexicon:
    """One entry per line."""
    return make_lexicon(etype, data.decode("utf-8").splitlines())
