"""Client for the token-classification model layer.

Sentence segmentation, the JSON-over-HTTP wire contract, and reconstruction of
character-accurate entity spans from (possibly subword) token predictions.
The sidecar must return character offsets per token, computed where alignment
is cheap (inside the tokenizer); the client never re-aligns text. A
deterministic stub endpoint implements the same contract in-process.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from importlib import resources

import httpx

from .rules import RuleSet, default_ruleset, scan_rules
from .types import (
    DeidError,
    Document,
    EntitySpan,
    EntityType,
    SpanSource,
    StubModel,
)

WIRE_VERSION = "1"
WIRE_VERSION_HEADER = "X-Deid-Wire-Version"

TAGS = ("O", "ID", "PHI", "NAME", "CONTACT", "DATE", "AGE", "PROFESSION", "LOCATION", "PAD")
SUBWORD_MARK = "##"


class EndpointUnreachable(DeidError):
    pass


class MalformedResponse(DeidError):
    pass


class SequenceTooLong(DeidError):
    pass


class OffsetMismatch(DeidError):
    def __init__(self, token: str, expected: str):
        super().__init__(f"prediction token {token!r} disagrees with document text {expected!r}")


@dataclass(frozen=True)
class TokenPrediction:
    token: str
    start: int  # sentence-relative character offsets
    end: int
    tag: str

    def __post_init__(self):
        if self.tag not in TAGS:
            raise MalformedResponse(f"unknown tag {self.tag!r}")
        if self.tag != "PAD" and self.start >= self.end:
            raise MalformedResponse(f"empty token offsets [{self.start},{self.end})")


@dataclass(frozen=True)
class Sentence:
    text: str
    offset: int  # document-absolute offset of the first character


_BOUNDARY = re.compile(r"[.!?;]\s+(?=[A-Z0-9(\"'])|\n+")


def split_sentences(doc: Document) -> list[Sentence]:
    """Terminator + whitespace + capital heuristic, with newlines as hard breaks
    (clinical letters carry header lines without terminators)."""
    text = doc.text
    sentences: list[Sentence] = []

    def emit(lo: int, hi: int):
        while lo < hi and text[lo].isspace():
            lo += 1
        while hi > lo and text[hi - 1].isspace():
            hi -= 1
        if lo < hi:
            sentences.append(Sentence(text[lo:hi], lo))

    pos = 0
    for m in _BOUNDARY.finditer(text):
        # keep the terminator inside the sentence, drop the whitespace gap
        end = m.end() if m.group(0)[0] in ".!?;" else m.start()
        emit(pos, end)
        pos = m.end()
    emit(pos, len(text))
    return sentences


# --- endpoints --------------------------------------------------------------

# words (with internal apostrophes/hyphens) or single punctuation marks,
# mirroring how wordpiece tokenizers detach punctuation
_WORD = re.compile(r"[^\W_]+(?:['\-][^\W_]+)*|\S")


@dataclass
class StubEndpoint:
    """Pure in-process endpoint: surface-table lookups plus the DATE/AGE rules."""

    model: StubModel
    ruleset: RuleSet = field(default_factory=default_ruleset)

    def predict(self, sentences: list[Sentence]) -> list[list[TokenPrediction]]:
        return [self._predict_one(s) for s in sentences]

    def _predict_one(self, sentence: Sentence) -> list[TokenPrediction]:
        text = sentence.text
        tags = self._char_tags(text)
        predictions = []
        for m in _WORD.finditer(text):
            token_tags = {tags[i] for i in range(m.start(), m.end())}
            token_tags.discard("O")
            tag = token_tags.pop() if len(token_tags) == 1 else "O"
            predictions.append(TokenPrediction(m.group(0), m.start(), m.end(), tag))
        return predictions

    def _char_tags(self, text: str) -> list[str]:
        tags = ["O"] * len(text)
        pseudo = Document(id="", text=text)
        spans = scan_rules(pseudo, self.ruleset)
        folded = text.lower()
        for surface, etype in self.model.table:
            needle = surface.lower()
            start = 0
            while True:
                i = folded.find(needle, start)
                if i < 0:
                    break
                j = i + len(needle)
                boundary = (i == 0 or not text[i - 1].isalnum()) and (
                    j == len(text) or not text[j].isalnum()
                )
                if boundary:
                    spans.append(EntitySpan(i, j, etype, SpanSource.MODEL, text[i:j]))
                start = i + 1
        for span in spans:
            for i in range(span.start, span.end):
                tags[i] = span.etype.value
        return tags


@dataclass
class RemoteEndpoint:
    """HTTP client for the sidecar; requests are matched to sentences by order."""

    base_url: str
    model_name: str = "clinicalbert"
    timeout: float = 30.0
    max_sentence_chars: int | None = 2000
    chunking: bool = True
    transport: httpx.BaseTransport | None = None  # injectable for tests

    def predict(self, sentences: list[Sentence]) -> list[list[TokenPrediction]]:
        payload = {
            "sentences": [{"text": s.text, "offset": s.offset} for s in sentences],
            "model": self.model_name,
        }
        headers = {WIRE_VERSION_HEADER: WIRE_VERSION}
        try:
            with httpx.Client(transport=self.transport, timeout=self.timeout) as client:
                response = client.post(
                    self.base_url.rstrip("/") + "/predict", json=payload, headers=headers
                )
        except httpx.TransportError as exc:
            raise EndpointUnreachable(str(exc)) from exc
        if response.status_code != 200:
            raise MalformedResponse(f"status {response.status_code}: {response.text[:200]}")
        return parse_response(response.json(), expected=len(sentences))


def parse_response(body: dict, expected: int) -> list[list[TokenPrediction]]:
    """Validate the wire shape and drop PAD entries; offsets stay sentence-relative."""
    if not isinstance(body, dict) or "predictions" not in body:
        raise MalformedResponse("missing 'predictions'")
    rows = body["predictions"]
    if not isinstance(rows, list) or len(rows) != expected:
        raise MalformedResponse(f"expected {expected} sentence prediction lists")
    out: list[list[TokenPrediction]] = []
    for row in rows:
        if not isinstance(row, list):
            raise MalformedResponse("sentence predictions must be a list")
        preds = []
        for item in row:
            try:
                pred = TokenPrediction(
                    token=item["token"], start=int(item["start"]),
                    end=int(item["end"]), tag=item["tag"],
                )
            except (KeyError, TypeError) as exc:
                raise MalformedResponse(f"bad prediction entry: {item!r}") from exc
            if pred.tag != "PAD":
                preds.append(pred)
        out.append(preds)
    return out


def wire_schema() -> dict:
    """The JSON schema shared with the sidecar's contract tests."""
    with resources.files("deidkit.schemas").joinpath("model_wire_v1.json").open("rb") as fh:
        return json.load(fh)


def chunk_sentence(sentence: Sentence, max_chars: int) -> list[Sentence]:
    """Split an oversize sentence at whitespace, keeping document-absolute offsets."""
    if len(sentence.text) <= max_chars:
        return [sentence]
    chunks: list[Sentence] = []
    text, base = sentence.text, sentence.offset
    pos = 0
    while len(text) - pos > max_chars:
        cut = text.rfind(" ", pos + 1, pos + max_chars + 1)
        if cut <= pos:
            cut = pos + max_chars
        chunk = text[pos:cut].rstrip()
        if chunk:
            chunks.append(Sentence(chunk, base + pos))
        pos = cut
        while pos < len(text) and text[pos] == " ":
            pos += 1
    tail = text[pos:].rstrip()
    if tail:
        chunks.append(Sentence(tail, base + pos))
    return chunks


def predict(
    sentences: list[Sentence], endpoint: StubEndpoint | RemoteEndpoint
) -> list[tuple[Sentence, list[TokenPrediction]]]:
    """Run the endpoint, chunking oversize sentences at word boundaries first."""
    max_chars = getattr(endpoint, "max_sentence_chars", None)
    if max_chars is not None:
        chunked: list[Sentence] = []
        for s in sentences:
            if len(s.text) > max_chars and not getattr(endpoint, "chunking", True):
                raise SequenceTooLong(f"sentence of {len(s.text)} chars exceeds {max_chars}")
            chunked.extend(chunk_sentence(s, max_chars))
        sentences = chunked
    return list(zip(sentences, endpoint.predict(sentences)))


# --- span reconstruction ----------------------------------------------------

def _fuse_subwords(preds: list[TokenPrediction]) -> list[TokenPrediction]:
    """Merge '##' continuation runs into their head token; the head's tag wins."""
    fused: list[TokenPrediction] = []
    for pred in preds:
        if (
            pred.token.startswith(SUBWORD_MARK)
            and fused
            and fused[-1].end == pred.start
        ):
            head = fused[-1]
            fused[-1] = TokenPrediction(
                token=head.token + pred.token[len(SUBWORD_MARK):],
                start=head.start, end=pred.end, tag=head.tag,
            )
        else:
            fused.append(pred)
    return fused


def _surface_consistent(token: str, actual: str) -> bool:
    clean = token.replace(SUBWORD_MARK, "")
    if clean == "[UNK]":
        return True
    return clean.lower() == actual.lower()


def reconstruct_spans(
    doc: Document, predicted: list[tuple[Sentence, list[TokenPrediction]]]
) -> list[EntitySpan]:
    """Fuse subwords, merge whitespace-separated same-tag runs, emit document spans."""
    units: list[tuple[int, int, str]] = []  # absolute (start, end, tag)
    for sentence, preds in predicted:
        for pred in _fuse_subwords(preds):
            absolute = (pred.start + sentence.offset, pred.end + sentence.offset)
            actual = doc.text[absolute[0]:absolute[1]]
            if not _surface_consistent(pred.token, actual):
                raise OffsetMismatch(pred.token, actual)
            if pred.tag != "O":
                units.append((absolute[0], absolute[1], pred.tag))
    units.sort()
    spans: list[EntitySpan] = []
    for start, end, tag in units:
        etype = EntityType(tag)
        if spans and spans[-1].etype is etype:
            gap = doc.text[spans[-1].end:start]
            if start >= spans[-1].end and gap.strip() == "":
                prev = spans[-1]
                spans[-1] = EntitySpan(prev.start, end, etype, SpanSource.MODEL,
                                       doc.text[prev.start:end])
                continue
        if spans and start < spans[-1].end:
            continue  # chunk overlap duplicates
        spans.append(EntitySpan(start, end, etype, SpanSource.MODEL, doc.text[start:end]))
    return spans
