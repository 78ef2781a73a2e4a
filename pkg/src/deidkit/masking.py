"""Masking: apply redact/replace actions to merged spans.

Redaction writes "XXX-<Type>" placeholders. Replacement draws surrogates from
lexicons (names, locations, professions) or shifts the original value (ages by
±N years, dates by ±N months, format preserved). A seeded RNG plus a
replacement map keyed on (type, normalized surface) make runs reproducible and
repeated surfaces consistent across a batch.
"""
from __future__ import annotations

import random
import re
from dataclasses import dataclass, field
from enum import Enum

from .ingestion import Lexicon, fold
from .rules import MONTH_NUMBER
from .types import (
    Action,
    DeidError,
    DeidSettings,
    Document,
    EntitySpan,
    EntityType,
    MaskedDocument,
    REDACTION_PREFIX,
    SpanMapping,
    span_overlaps,
)


class OverlappingSpans(DeidError):
    pass


class MissingSurrogateSource(DeidError):
    def __init__(self, etype: EntityType):
        self.etype = etype
        super().__init__(f"no surrogate lexicon configured for {etype.value}")


DEFAULT_AGE_DELTA = 5
DEFAULT_MONTH_DELTA = 2


@dataclass(frozen=True)
class SurrogateSources:
    surnames: Lexicon | None = None
    full_names: Lexicon | None = None
    locations: Lexicon | None = None
    professions: Lexicon | None = None
    age_delta_max: int = DEFAULT_AGE_DELTA
    date_month_delta_max: int = DEFAULT_MONTH_DELTA


class ReplacementScope(str, Enum):
    PER_DOCUMENT = "per_document"
    PER_BATCH = "per_batch"


@dataclass
class ReplacementContext:
    """Mutable per-batch state: the RNG stream and the surface->surrogate map."""

    rng: random.Random
    scope: ReplacementScope = ReplacementScope.PER_BATCH
    mapping: dict[tuple[EntityType, str], str] = field(default_factory=dict)

    @staticmethod
    def from_seed(seed: int, scope: ReplacementScope = ReplacementScope.PER_BATCH) -> "ReplacementContext":
        return ReplacementContext(rng=random.Random(seed), scope=scope)

    def reset_for_document(self):
        if self.scope is ReplacementScope.PER_DOCUMENT:
            self.mapping.clear()


def _check_disjoint(spans: list[EntitySpan]) -> list[EntitySpan]:
    ordered = sorted(spans)
    for a, b in zip(ordered, ordered[1:]):
        if span_overlaps(a, b):
            raise OverlappingSpans(f"{a} overlaps {b}")
    return ordered


def _render(doc: Document, pieces: list[tuple[EntitySpan, Action, str, bool]], seed: int,
            replacement_map: dict[tuple[EntityType, str], str]) -> MaskedDocument:
    """Splice replacements into the text, tracking cumulative offset shift."""
    out: list[str] = []
    span_map: list[SpanMapping] = []
    cursor = 0
    shift = 0
    for span, action, replacement, fallback in pieces:
        out.append(doc.text[cursor:span.start])
        new_start = span.start + shift
        out.append(replacement)
        span_map.append(SpanMapping(span, new_start, new_start + len(replacement),
                                    action, replacement, fallback))
        shift += len(replacement) - len(span)
        cursor = span.end
    out.append(doc.text[cursor:])
    return MaskedDocument(
        doc_id=doc.id,
        masked_text="".join(out),
        span_map=tuple(span_map),
        replacement_map=dict(replacement_map),
        seed=seed,
    )


def redact(doc: Document, spans: list[EntitySpan], settings: DeidSettings) -> MaskedDocument:
    """Replace each non-ignored span with its "XXX-<Type>" placeholder."""
    pieces = []
    for span in _check_disjoint(spans):
        action = settings.action_for(span.etype)
        if action is Action.IGNORE:
            pieces.append((span, Action.IGNORE, span.surface, False))
        else:
            pieces.append((span, Action.REDACT, REDACTION_PREFIX + span.etype.placeholder, False))
    return _render(doc, pieces, settings.rng_seed, {})


def replace(
    doc: Document,
    spans: list[EntitySpan],
    settings: DeidSettings,
    sources: SurrogateSources,
    ctx: ReplacementContext,
) -> MaskedDocument:
    """Apply the per-type actions, drawing surrogates through the shared context."""
    ctx.reset_for_document()
    pieces = []
    for span in _check_disjoint(spans):
        action = settings.action_for(span.etype)
        if action is Action.IGNORE:
            pieces.append((span, Action.IGNORE, span.surface, False))
        elif action is Action.REDACT:
            pieces.append((span, Action.REDACT, REDACTION_PREFIX + span.etype.placeholder, False))
        else:
            replacement, fallback = _surrogate_for(span, sources, ctx)
            pieces.append((span, Action.REPLACE, replacement, fallback))
    return _render(doc, pieces, settings.rng_seed, ctx.mapping)


def _surrogate_for(
    span: EntitySpan, sources: SurrogateSources, ctx: ReplacementContext
) -> tuple[str, bool]:
    if span.etype is EntityType.AGE:
        return _shift_age(span.surface, sources.age_delta_max, ctx.rng)
    if span.etype is EntityType.DATE:
        return _shift_date(span.surface, sources.date_month_delta_max, ctx.rng)
    key = (span.etype, fold(span.surface).strip())
    if key in ctx.mapping:
        return ctx.mapping[key], False
    replacement, fallback = _draw_surrogate(span, sources, ctx.rng)
    ctx.mapping[key] = replacement
    return replacement, fallback


def _draw_surrogate(span: EntitySpan, sources: SurrogateSources, rng: random.Random) -> tuple[str, bool]:
    if span.etype is EntityType.NAME:
        multi_word = len(span.surface.split()) > 1
        lexicon = sources.full_names if multi_word else sources.surnames
    elif span.etype is EntityType.LOCATION:
        lexicon = sources.locations
    elif span.etype is EntityType.PROFESSION:
        lexicon = sources.professions
    else:
        # no surrogate pool for ID/CONTACT/PHI: fall back to the placeholder
        return REDACTION_PREFIX + span.etype.placeholder, True
    if lexicon is None:
        raise MissingSurrogateSource(span.etype)
    # never hand back the original surface
    candidates = [e for e in lexicon.entries if fold(e) != fold(span.surface)]
    if not candidates:
        return REDACTION_PREFIX + span.etype.placeholder, True
    return rng.choice(candidates), False


_DIGITS = re.compile(r"\d+")


def _shift_age(surface: str, delta_max: int, rng: random.Random) -> tuple[str, bool]:
    m = _DIGITS.search(surface)
    delta = rng.randint(-delta_max, delta_max)
    if m is None:
        return str(rng.randint(20, 90)), True
    shifted = max(0, int(m.group(0)) + delta)
    return surface[:m.start()] + str(shifted) + surface[m.end():], False


# --- date shifting ----------------------------------------------------------

_MONTH_WORD = r"(?P<month>[A-Za-z]+)(?P<dot>\.??)"
_DATE_SHAPES = (
    ("iso", re.compile(r"^(?P<y>\d{4})(?P<sep>[-/])(?P<m>\d{1,2})(?P=sep)(?P<d>\d{1,2})$")),
    ("month_day_year", re.compile(rf"^{_MONTH_WORD}\s+(?P<d>\d{{1,2}})(?:st|nd|rd|th)?(?P<comma>\s*,)?\s+(?P<y>\d{{4}})$", re.IGNORECASE)),
    ("day_month_year", re.compile(rf"^(?P<d>\d{{1,2}})(?:st|nd|rd|th)?\s+{_MONTH_WORD}\s+(?P<y>\d{{4}})$", re.IGNORECASE)),
    ("month_year", re.compile(rf"^{_MONTH_WORD}(?P<sep>[\s-]+)(?P<y>\d{{4}})$", re.IGNORECASE)),
    ("numeric_slash", re.compile(r"^(?P<a>\d{1,2})/(?P<b>\d{1,2})/(?P<y>\d{4})$")),
    ("partial", re.compile(r"^(?P<m>\d{1,2})/(?P<y>\d{2})$")),
    ("bare_year", re.compile(r"^(?P<y>\d{4})$")),
)

_MONTH_DAYS = (31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31)


def _days_in_month(year: int, month: int) -> int:
    if month == 2 and (year % 4 == 0 and (year % 100 != 0 or year % 400 == 0)):
        return 29
    return _MONTH_DAYS[month - 1]


def _add_months(year: int, month: int, delta: int) -> tuple[int, int]:
    total = year * 12 + (month - 1) + delta
    return total // 12, total % 12 + 1


def _month_name_like(template: str, month: int, abbreviated: bool) -> str:
    from .rules import MONTHS

    name = MONTHS[month - 1]
    if abbreviated:
        name = name[:3]
    if template.isupper():
        return name.upper()
    if template[:1].isupper():
        return name.capitalize()
    return name


def _pad_like(template: str, value: int) -> str:
    return str(value).zfill(2) if len(template) == 2 else str(value)


def _shift_date(surface: str, delta_max: int, rng: random.Random) -> tuple[str, bool]:
    delta = rng.randint(-delta_max, delta_max)
    for shape, pattern in _DATE_SHAPES:
        m = pattern.match(surface.strip())
        if m is None:
            continue
        if surface != surface.strip():
            break  # shapes are anchored; surrounding whitespace means odd input
        rendered = _render_shifted(shape, m, delta)
        if rendered is not None:
            return rendered, False
        break
    # unparseable: random ISO date in the plausible-year window, flagged
    year = rng.randint(1950, 2150)
    month = rng.randint(1, 12)
    day = rng.randint(1, _days_in_month(year, month))
    return f"{year:04d}-{month:02d}-{day:02d}", True


def _render_shifted(shape: str, m: re.Match, delta: int) -> str | None:
    if shape == "iso":
        year, month, day = int(m["y"]), int(m["m"]), int(m["d"])
        if not 1 <= month <= 12:
            return None
        year, month = _add_months(year, month, delta)
        day = min(day, _days_in_month(year, month))
        sep = m["sep"]
        return f"{year:04d}{sep}{_pad_like(m['m'], month)}{sep}{_pad_like(m['d'], day)}"
    if shape in ("month_day_year", "day_month_year", "month_year"):
        word = m["month"]
        number = MONTH_NUMBER.get(word.lower().rstrip("."))
        if number is None:
            return None
        abbreviated = len(word.rstrip(".")) == 3 and word.lower().rstrip(".") not in ("may",)
        year, month = _add_months(int(m["y"]), number, delta)
        name = _month_name_like(word, month, abbreviated) + (m["dot"] or "")
        if shape == "month_year":
            return f"{name}{m['sep']}{year:04d}"
        day = min(int(m["d"]), _days_in_month(year, month))
        if shape == "month_day_year":
            comma = m["comma"] or ""
            return f"{name} {_pad_like(m['d'], day)}{comma} {year:04d}"
        return f"{_pad_like(m['d'], day)} {name} {year:04d}"
    if shape == "numeric_slash":
        a, b, year = int(m["a"]), int(m["b"]), int(m["y"])
        month_first = a <= 12  # ambiguous forms default to month/day
        month, day = (a, b) if month_first else (b, a)
        if not 1 <= month <= 12:
            return None
        year, month = _add_months(year, month, delta)
        day = min(day, _days_in_month(year, month))
        first, second = (month, day) if month_first else (day, month)
        tpl_a, tpl_b = m["a"], m["b"]
        return f"{_pad_like(tpl_a, first)}/{_pad_like(tpl_b, second)}/{year:04d}"
    if shape == "partial":
        month = int(m["m"])
        if not 1 <= month <= 12:
            return None
        year, month = _add_months(2000 + int(m["y"]), month, delta)
        return f"{_pad_like(m['m'], month)}/{year % 100:02d}"
    if shape == "bare_year":
        # month-granularity arithmetic needs an anchor; January makes a negative
        # shift visible as the previous year
        year, _ = _add_months(int(m["y"]), 1, delta)
        return f"{year:04d}"
    return None
