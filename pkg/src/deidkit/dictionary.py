"""Dictionary look-up layer: flag lexicon entries (names, professions, locations)
as entity spans, skipping honorific titles such as "Dr." before a name."""
from __future__ import annotations

import re
from dataclasses import dataclass, field

from .ingestion import EmptyLexicon, Lexicon, fold
from .types import Document, EntitySpan, EntityType, SpanSource

DEFAULT_TITLES = ("Dr", "Mr", "Mrs", "Ms", "Prof")

# title + optional period + whitespace, repeated ("Prof. Dr. Thiel")
def _title_prefix_re(titles: tuple[str, ...]) -> re.Pattern:
    alt = "|".join(re.escape(t) for t in titles)
    return re.compile(rf"^(?:(?:{alt})\.?(?:\s+|$))+", re.IGNORECASE)


def _word_start(text: str, i: int) -> bool:
    return i == 0 or not text[i - 1].isalnum()


def _word_end(text: str, j: int) -> bool:
    return j == len(text) or not text[j].isalnum()


@dataclass
class CompiledLexicon:
    """Character trie over normalized entries; matches only at word boundaries,
    longest entry first, never the empty string."""

    etype: EntityType
    case_insensitive: bool = True
    titles: tuple[str, ...] = DEFAULT_TITLES
    source: SpanSource = SpanSource.DICTIONARY
    _trie: dict = field(default_factory=dict, repr=False)
    _max_len: int = 0
    _title_re: re.Pattern = field(init=False, repr=False)

    def __post_init__(self):
        self._title_re = _title_prefix_re(self.titles)

    def _add(self, entry: str):
        node = self._trie
        for ch in entry:
            node = node.setdefault(ch, {})
        node[""] = entry  # terminal marker stores the normalized entry
        self._max_len = max(self._max_len, len(entry))

    def _norm(self, text: str) -> str:
        return fold(text) if self.case_insensitive else text

    def longest_match_at(self, text: str, norm: str, start: int) -> int | None:
        """Length of the longest entry matching at `start` with a word-boundary end."""
        node = self._trie
        best = None
        j = start
        limit = min(len(norm), start + self._max_len)
        while j < limit:
            node = node.get(norm[j])
            if node is None:
                break
            j += 1
            if "" in node and _word_end(text, j):
                best = j - start
        return best

    def scan(self, doc: Document) -> list[EntitySpan]:
        """Leftmost-longest, non-overlapping matches as spans of this lexicon's type."""
        text = doc.text
        norm = self._norm(text)
        spans: list[EntitySpan] = []
        i = 0
        n = len(text)
        while i < n:
            if not _word_start(text, i):
                i += 1
                continue
            length = self.longest_match_at(text, norm, i)
            if length is None:
                i += 1
                continue
            start, end = i, i + length
            start = self._strip_title(norm, start, end)
            if start < end:
                spans.append(
                    EntitySpan(start=start, end=end, etype=self.etype,
                               source=self.source, surface=text[start:end])
                )
            i = end
        return spans

    def _strip_title(self, norm: str, start: int, end: int) -> int:
        m = self._title_re.match(norm[start:end])
        return start + m.end() if m else start


def compile_lexicon(
    lexicon: Lexicon,
    case_insensitive: bool = True,
    titles: tuple[str, ...] = DEFAULT_TITLES,
) -> CompiledLexicon:
    if not lexicon.entries:
        raise EmptyLexicon(f"cannot compile empty {lexicon.etype.value} lexicon")
    compiled = CompiledLexicon(etype=lexicon.etype, case_insensitive=case_insensitive, titles=titles)
    for original, normalized in zip(lexicon.entries, lexicon.normalized):
        compiled._add(normalized if case_insensitive else original)
    return compiled


def scan(doc: Document, lexicons: list[CompiledLexicon]) -> list[EntitySpan]:
    """Run every compiled lexicon over the document; overlap resolution is the merger's job."""
    spans: list[EntitySpan] = []
    for lexicon in lexicons:
        spans.extend(lexicon.scan(doc))
    return sorted(spans)
