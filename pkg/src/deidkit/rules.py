"""Rule-based layer: regex patterns for AGE and DATE expressions.

The engine consolidates overlapping same-type matches to the longest one, so a
phrase like "January 2071" comes out as a single DATE span instead of being
fragmented by the month-year and bare-year rules. A compat flag disables the
consolidation to reproduce the fragmenting behavior of older pipelines for
evaluation studies.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Callable, Optional

from .types import Document, EntitySpan, EntityType, SpanSource

MONTHS = (
    "january", "february", "march", "april", "may", "june",
    "july", "august", "september", "october", "november", "december",
)
MONTH_ABBREVS = tuple(m[:3] for m in MONTHS)
MONTH_NUMBER = {m: i + 1 for i, m in enumerate(MONTHS)}
MONTH_NUMBER.update({m: i + 1 for i, m in enumerate(MONTH_ABBREVS)})

_MONTH_ALT = "|".join(MONTHS + MONTH_ABBREVS)
MONTH_RE = rf"(?:{_MONTH_ALT})\.?"

DEFAULT_YEAR_FLOOR = 1900
DEFAULT_YEAR_CEILING = 2199


@dataclass(frozen=True)
class Rule:
    pattern_id: str
    etype: EntityType
    expression: str
    enabled: bool = True
    flags: int = re.IGNORECASE
    # extra acceptance test on the match, e.g. bare-year range check
    accept: Optional[Callable[[re.Match, "RuleSet"], bool]] = field(default=None, compare=False)

    def compiled(self) -> re.Pattern:
        return re.compile(self.expression, self.flags)


@dataclass(frozen=True)
class RuleSet:
    rules: tuple[Rule, ...]
    year_floor: int = DEFAULT_YEAR_FLOOR
    year_ceiling: int = DEFAULT_YEAR_CEILING
    compat_fragmenting: bool = False

    def __post_init__(self):
        ids = [r.pattern_id for r in self.rules]
        if len(ids) != len(set(ids)):
            raise ValueError("duplicate rule pattern ids")


def _year_in_range(match: re.Match, rules: RuleSet) -> bool:
    return rules.year_floor <= int(match.group(0)) <= rules.year_ceiling


# Ages keep their unit text in the span ("45 yo", not "45"); N is 1-3 digits.
_AGE_RULES = (
    Rule("age_years_old", EntityType.AGE, r"(?<!\d)\d{1,3}\s*[-\s]?years?[-\s]old\b"),
    Rule("age_yo", EntityType.AGE, r"(?<!\d)\d{1,3}\s*(?:yo|y/o|y\.o\.)(?![A-Za-z0-9])"),
)

# Date shapes only; no calendar validation. Over-matching is safer than leaking.
_DATE_RULES = (
    Rule("date_iso", EntityType.DATE, r"(?<!\d)\d{4}-\d{1,2}-\d{1,2}(?!\d)"),
    Rule("date_iso_slash", EntityType.DATE, r"(?<![\d/])\d{4}/\d{1,2}/\d{1,2}(?![\d/])"),
    Rule("date_month_day_year", EntityType.DATE, rf"\b{MONTH_RE}\s+\d{{1,2}}(?:st|nd|rd|th)?\s*,?\s+\d{{4}}(?!\d)"),
    Rule("date_day_month_year", EntityType.DATE, rf"(?<!\d)\d{{1,2}}(?:st|nd|rd|th)?\s+{MONTH_RE}\s+\d{{4}}(?!\d)"),
    Rule("date_month_year", EntityType.DATE, rf"\b{MONTH_RE}[\s-]+\d{{4}}(?!\d)"),
    Rule("date_numeric_slash", EntityType.DATE, r"(?<![\d/])\d{1,2}/\d{1,2}/\d{4}(?![\d/])"),
    Rule("date_partial", EntityType.DATE, r"(?<![\d/])\d{1,2}/\d{2}(?![\d/])(?!\.\d)"),
    Rule("date_bare_year", EntityType.DATE, r"(?<!\d)(?<!\d\.)\d{4}(?!\d)(?!\.\d)", accept=_year_in_range),
)


def default_ruleset(
    year_floor: int = DEFAULT_YEAR_FLOOR,
    year_ceiling: int = DEFAULT_YEAR_CEILING,
    compat_fragmenting: bool = False,
) -> RuleSet:
    return RuleSet(
        rules=_AGE_RULES + _DATE_RULES,
        year_floor=year_floor,
        year_ceiling=year_ceiling,
        compat_fragmenting=compat_fragmenting,
    )


def _raw_matches(doc: Document, ruleset: RuleSet) -> list[tuple[int, int, int, EntityType]]:
    """(start, end, rule index, type) for every enabled pattern hit."""
    hits = []
    for idx, rule in enumerate(ruleset.rules):
        if not rule.enabled:
            continue
        for m in rule.compiled().finditer(doc.text):
            if m.start() == m.end():
                continue
            if rule.accept is not None and not rule.accept(m, ruleset):
                continue
            hits.append((m.start(), m.end(), idx, rule.etype))
    return hits


def _consolidate(hits: list[tuple[int, int, int, EntityType]]) -> list[tuple[int, int, int, EntityType]]:
    """Same-type overlap resolution: longest match wins, ties to the earlier rule id."""
    kept: list[tuple[int, int, int, EntityType]] = []
    # order: longer first, then earlier rule, then position
    for hit in sorted(hits, key=lambda h: (-(h[1] - h[0]), h[2], h[0], h[1])):
        start, end, _, etype = hit
        clash = any(
            k[3] == etype and max(k[0], start) < min(k[1], end) for k in kept
        )
        if not clash:
            kept.append(hit)
    return kept


def scan_rules(doc: Document, ruleset: RuleSet) -> list[EntitySpan]:
    hits = _raw_matches(doc, ruleset)
    if ruleset.compat_fragmenting:
        hits = list(dict.fromkeys(hits))  # exact duplicates only
    else:
        hits = _consolidate(hits)
    spans = [
        EntitySpan(start=s, end=e, etype=t, source=SpanSource.RULE, surface=doc.text[s:e])
        for (s, e, _, t) in sorted(set((h[0], h[1], h[2], h[3]) for h in hits))
    ]
    # distinct rules can agree on identical offsets; emit each interval once
    unique: list[EntitySpan] = []
    seen: set[tuple[int, int, EntityType]] = set()
    for span in spans:
        key = (span.start, span.end, span.etype)
        if key not in seen:
            seen.add(key)
            unique.append(span)
    return unique


def ruleset_to_config(ruleset: RuleSet) -> str:
    """Serialize to a JSON config so deployments can toggle or add site formats."""
    return json.dumps(
        {
            "year_floor": ruleset.year_floor,
            "year_ceiling": ruleset.year_ceiling,
            "compat_fragmenting": ruleset.compat_fragmenting,
            "rules": [
                {
                    "id": r.pattern_id,
                    "type": r.etype.value,
                    "expression": r.expression,
                    "enabled": r.enabled,
                }
                for r in ruleset.rules
            ],
        },
        indent=2,
    )


def ruleset_from_config(text: str) -> RuleSet:
    raw = json.loads(text)
    builtin = {r.pattern_id: r for r in _AGE_RULES + _DATE_RULES}
    rules = []
    for entry in raw["rules"]:
        base = builtin.get(entry["id"])
        accept = base.accept if base is not None and base.expression == entry["expression"] else None
        if entry["id"] == "date_bare_year":
            accept = _year_in_range
        rules.append(
            Rule(
                pattern_id=entry["id"],
                etype=EntityType(entry["type"]),
                expression=entry["expression"],
                enabled=bool(entry.get("enabled", True)),
                accept=accept,
            )
        )
    return RuleSet(
        rules=tuple(rules),
        year_floor=int(raw.get("year_floor", DEFAULT_YEAR_FLOOR)),
        year_ceiling=int(raw.get("year_ceiling", DEFAULT_YEAR_CEILING)),
        compat_fragmenting=bool(raw.get("compat_fragmenting", False)),
    )
