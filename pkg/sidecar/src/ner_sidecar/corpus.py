"""i2b2 XML corpus loading for fine-tuning: letters, gold spans, sentences."""
from __future__ import annotations

import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from pathlib import Path

from .labels import main_category


@dataclass(frozen=True)
class AnnotatedLetter:
    doc_id: str
    text: str
    spans: tuple[tuple[int, int, str], ...]  # (start, end, main tag)


def load_letter(path: Path) -> AnnotatedLetter:
    root = ET.fromstring(path.read_bytes())
    text_el = next(iter(root.iter("TEXT")), None)
    if text_el is None:
        raise ValueError(f"{path.name}: no TEXT element")
    text = text_el.text or ""
    spans = []
    tags = root.find("TAGS")
    for el in (list(tags) if tags is not None else []):
        if "start" not in el.attrib or "end" not in el.attrib:
            continue
        label = main_category(el.attrib.get("TYPE") or el.tag)
        spans.append((int(el.attrib["start"]), int(el.attrib["end"]), label))
    return AnnotatedLetter(doc_id=path.stem, text=text, spans=tuple(sorted(spans)))


def load_corpus(directory: Path) -> list[AnnotatedLetter]:
    letters = [load_letter(p) for p in sorted(directory.glob("*.xml"))]
    if not letters:
        raise ValueError(f"no .xml letters under {directory}")
    return letters


_BOUNDARY = re.compile(r"[.!?;]\s+(?=[A-Z0-9(\"'])|\n+")


def sentences_with_offsets(text: str) -> list[tuple[str, int]]:
    """Same splitting shape the client uses; offsets are document-absolute."""
    out: list[tuple[str, int]] = []

    def emit(lo: int, hi: int):
        while lo < hi and text[lo].isspace():
            lo += 1
        while hi > lo and text[hi - 1].isspace():
            hi -= 1
        if lo < hi:
            out.append((text[lo:hi], lo))

    pos = 0
    for m in _BOUNDARY.finditer(text):
        emit(pos, m.end() if m.group(0)[0] in ".!?;" else m.start())
        pos = m.end()
    emit(pos, len(text))
    return out


def char_tag(spans: tuple[tuple[int, int, str], ...], start: int, end: int) -> str:
    """IO label for a token covering [start, end): the first span that overlaps."""
    for s, e, tag in spans:
        if max(s, start) < min(e, end):
            return tag
    return "O"
