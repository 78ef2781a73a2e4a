"""Shared domain types and span algebra used by every other module."""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional


class DeidError(Exception):
    """Base class for all toolkit errors."""


class OutOfBounds(DeidError):
    def __init__(self, span: "EntitySpan", doc_length: int):
        self.span = span
        self.doc_length = doc_length
        super().__init__(f"span [{span.start},{span.end}) out of bounds for text of length {doc_length}")


class SurfaceMismatch(DeidError):
    def __init__(self, span: "EntitySpan", actual: str):
        self.span = span
        self.actual = actual
        super().__init__(f"span [{span.start},{span.end}) surface {span.surface!r} != document text {actual!r}")


class DocumentSource(str, Enum):
    PLAIN_TEXT = "plain_text"
    I2B2_XML = "i2b2_xml"


class EntityType(str, Enum):
    """The eight labeled PHI classes. O/PAD exist only in the model wire protocol."""

    NAME = "NAME"
    DATE = "DATE"
    AGE = "AGE"
    LOCATION = "LOCATION"
    PROFESSION = "PROFESSION"
    ID = "ID"
    CONTACT = "CONTACT"
    PHI = "PHI"

    @property
    def placeholder(self) -> str:
        """Title-case name used after the 'XXX-' redaction prefix, e.g. 'XXX-Name'."""
        return self.value.capitalize()

    @property
    def rank(self) -> int:
        return _TYPE_RANK[self]


_TYPE_RANK = {t: i for i, t in enumerate(EntityType)}

REDACTION_PREFIX = "XXX-"


class SpanSource(str, Enum):
    DICTIONARY = "dictionary"
    RULE = "rule"
    MODEL = "model"
    MANUAL = "manual"


class Action(str, Enum):
    REDACT = "redact"
    REPLACE = "replace"
    IGNORE = "ignore"


@dataclass(frozen=True)
class Document:
    """A clinical letter: opaque id plus immutable text."""

    id: str
    text: str
    source: DocumentSource = DocumentSource.PLAIN_TEXT


@dataclass(frozen=True, order=True)
class EntitySpan:
    """Half-open character interval [start, end) labeled with an entity type.

    Offsets count Unicode scalar values of the owning document's text.
    Ordering is (start, end, type rank) so sorted() yields the canonical
    serialization order.
    """

    start: int
    end: int
    etype: EntityType = field(compare=False)
    source: SpanSource = field(compare=False)
    surface: str = field(compare=False)
    _type_rank: int = field(init=False, repr=False)

    def __post_init__(self):
        if self.start >= self.end:
            raise ValueError(f"empty or inverted span [{self.start},{self.end})")
        object.__setattr__(self, "_type_rank", self.etype.rank)

    def __len__(self) -> int:
        return self.end - self.start

    def overlaps(self, other: "EntitySpan") -> bool:
        return span_overlaps(self, other)


def span_overlaps(a: EntitySpan, b: EntitySpan) -> bool:
    """True iff the half-open intervals strictly intersect."""
    return max(a.start, b.start) < min(a.end, b.end)


def sort_spans(spans: list[EntitySpan]) -> list[EntitySpan]:
    return sorted(spans)


def validate_spans(doc: Document, spans: list[EntitySpan]) -> list[EntitySpan]:
    """Check bounds and surface consistency; return spans sorted by (start, end, type).

    Raises OutOfBounds or SurfaceMismatch on the first offending span.
    """
    n = len(doc.text)
    for span in spans:
        if span.start < 0 or span.end > n:
            raise OutOfBounds(span, n)
        actual = doc.text[span.start:span.end]
        if actual != span.surface:
            raise SurfaceMismatch(span, actual)
    return sort_spans(spans)


@dataclass(frozen=True)
class StubModel:
    """Deterministic in-process recognizer: a (surface -> type) table plus the
    rule engine's DATE/AGE patterns. Lets the whole pipeline run with no sidecar."""

    table: tuple[tuple[str, EntityType], ...] = ()

    @staticmethod
    def from_dict(table: dict[str, EntityType]) -> "StubModel":
        return StubModel(tuple(sorted(table.items())))

    def as_dict(self) -> dict[str, EntityType]:
        return dict(self.table)


@dataclass(frozen=True)
class RemoteModel:
    """A named sidecar model; the endpoint URL is deployment config, not settings."""

    name: str

    SUPPORTED = ("clinicalbert", "biobert")

    def __post_init__(self):
        if self.name not in self.SUPPORTED:
            raise ValueError(f"unsupported model {self.name!r}; expected one of {self.SUPPORTED}")


DEFAULT_RISK_THRESHOLD = 0.5
DEFAULT_CONTEXT_RADIUS = 5


@dataclass(frozen=True)
class DeidSettings:
    """Per-run configuration: what to do with each entity type, which model to
    use, user-supplied dictionary entries, and the replacement RNG seed."""

    actions: dict[EntityType, Action] = field(default_factory=dict)
    model: StubModel | RemoteModel = field(default_factory=StubModel)
    custom_dictionaries: dict[EntityType, tuple[str, ...]] = field(default_factory=dict)
    rng_seed: int = 0
    risk_threshold: float = DEFAULT_RISK_THRESHOLD
    context_radius_words: int = DEFAULT_CONTEXT_RADIUS

    def __post_init__(self):
        if not 0.0 <= self.risk_threshold <= 1.0:
            raise ValueError(f"risk_threshold {self.risk_threshold} outside [0,1]")
        if self.context_radius_words < 1:
            raise ValueError("context_radius_words must be >= 1")
        if not 0 <= self.rng_seed < 2**64:
            raise ValueError("rng_seed must fit in 64 unsigned bits")

    def action_for(self, etype: EntityType) -> Action:
        return self.actions.get(etype, Action.REDACT)

    @property
    def replaces_anything(self) -> bool:
        return any(a is Action.REPLACE for a in self.actions.values())


@dataclass(frozen=True)
class SpanMapping:
    """One span_map row: where an original span landed in the masked text."""

    original: EntitySpan
    new_start: int
    new_end: int
    action: Action
    replacement: str
    fallback: bool = False  # set when a date could not be shape-parsed


@dataclass(frozen=True)
class MaskedDocument:
    doc_id: str
    masked_text: str
    span_map: tuple[SpanMapping, ...]
    replacement_map: dict[tuple[EntityType, str], str]
    seed: int = 0


# --- canonical JSON forms -------------------------------------------------

def span_to_dict(span: EntitySpan) -> dict:
    return {
        "start": span.start,
        "end": span.end,
        "type": span.etype.value,
        "source": span.source.value,
        "text": span.surface,
    }


def span_from_dict(d: dict) -> EntitySpan:
    return EntitySpan(
        start=int(d["start"]),
        end=int(d["end"]),
        etype=EntityType(d["type"]),
        source=SpanSource(d["source"]),
        surface=d["text"],
    )


def settings_to_dict(s: DeidSettings) -> dict:
    if isinstance(s.model, StubModel):
        model: dict = {"kind": "stub", "table": {k: v.value for k, v in s.model.table}}
    else:
        model = {"kind": "remote", "name": s.model.name}
    return {
        "actions": {t.value: a.value for t, a in sorted(s.actions.items(), key=lambda kv: kv[0].rank)},
        "model": model,
        "custom_dictionaries": {
            t.value: list(entries)
            for t, entries in sorted(s.custom_dictionaries.items(), key=lambda kv: kv[0].rank)
        },
        "rng_seed": s.rng_seed,
        "risk_threshold": s.risk_threshold,
        "context_radius_words": s.context_radius_words,
    }


def settings_from_dict(d: dict) -> DeidSettings:
    model_spec = d.get("model", {"kind": "stub", "table": {}})
    if model_spec.get("kind") == "remote":
        model: StubModel | RemoteModel = RemoteModel(model_spec["name"])
    elif model_spec.get("kind") == "stub":
        model = StubModel.from_dict(
            {surf: EntityType(t) for surf, t in model_spec.get("table", {}).items()}
        )
    else:
        raise ValueError(f"unknown model kind {model_spec.get('kind')!r}")
    return DeidSettings(
        actions={EntityType(t): Action(a) for t, a in d.get("actions", {}).items()},
        model=model,
        custom_dictionaries={
            EntityType(t): tuple(entries) for t, entries in d.get("custom_dictionaries", {}).items()
        },
        rng_seed=int(d.get("rng_seed", 0)),
        risk_threshold=float(d.get("risk_threshold", DEFAULT_RISK_THRESHOLD)),
        context_radius_words=int(d.get("context_radius_words", DEFAULT_CONTEXT_RADIUS)),
    )


def masked_doc_to_dict(m: MaskedDocument) -> dict:
    return {
        "doc_id": m.doc_id,
        "masked_text": m.masked_text,
        "seed": m.seed,
        "span_map": [
            {
                "original": span_to_dict(row.original),
                "new_start": row.new_start,
                "new_end": row.new_end,
                "action": row.action.value,
                "replacement": row.replacement,
                "fallback": row.fallback,
            }
            for row in m.span_map
        ],
        "replacement_map": [
            {"type": t.value, "surface": surface, "replacement": rep}
            for (t, surface), rep in sorted(
                m.replacement_map.items(), key=lambda kv: (kv[0][0].rank, kv[0][1])
            )
        ],
    }


def masked_doc_from_dict(d: dict) -> MaskedDocument:
    return MaskedDocument(
        doc_id=d["doc_id"],
        masked_text=d["masked_text"],
        seed=int(d.get("seed", 0)),
        span_map=tuple(
            SpanMapping(
                original=span_from_dict(row["original"]),
                new_start=int(row["new_start"]),
                new_end=int(row["new_end"]),
                action=Action(row["action"]),
                replacement=row["replacement"],
                fallback=bool(row.get("fallback", False)),
            )
            for row in d.get("span_map", [])
        ),
        replacement_map={
            (EntityType(row["type"]), row["surface"]): row["replacement"]
            for row in d.get("replacement_map", [])
        },
    )
