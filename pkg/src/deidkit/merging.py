"""Union of the three recognizers' outputs into one conflict-free span set."""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .types import DeidError, EntitySpan, SpanSource


class CrossDocumentSpans(DeidError):
    pass


class OverlapRule(str, Enum):
    LONGEST_THEN_PRIORITY = "longest_then_priority"
    # exact-duplicate removal only; reproduces the double-flagging of older
    # pipelines for evaluation parity
    KEEP_ALL_COMPAT = "keep_all_compat"


DEFAULT_PRIORITY = (
    SpanSource.MANUAL,
    SpanSource.DICTIONARY,
    SpanSource.RULE,
    SpanSource.MODEL,
)


@dataclass(frozen=True)
class MergePolicy:
    priority: tuple[SpanSource, ...] = DEFAULT_PRIORITY
    overlap_rule: OverlapRule = OverlapRule.LONGEST_THEN_PRIORITY

    def __post_init__(self):
        if sorted(self.priority) != sorted(SpanSource):
            raise ValueError("priority must be a permutation of the four span sources")

    def source_rank(self, source: SpanSource) -> int:
        return self.priority.index(source)


def preference_key(span: EntitySpan, policy: MergePolicy) -> tuple:
    """Total order for conflict resolution: longer first, then source priority,
    then type order, then position."""
    return (-(span.end - span.start), policy.source_rank(span.source),
            span.etype.rank, span.start, span.end)


def merge(
    spans: list[EntitySpan],
    policy: MergePolicy = MergePolicy(),
    doc=None,
) -> list[EntitySpan]:
    """Resolve duplicates and overlaps; result is sorted (and non-overlapping
    under the longest-then-priority rule). When `doc` is given, spans that do
    not line up with its text are rejected as coming from another document."""
    if doc is not None:
        for span in spans:
            if span.end > len(doc.text) or doc.text[span.start:span.end] != span.surface:
                raise CrossDocumentSpans(f"span {span} does not match document {doc.id!r}")
    if policy.overlap_rule is OverlapRule.KEEP_ALL_COMPAT:
        return _dedupe_exact(spans, policy)
    kept: list[EntitySpan] = []
    for span in sorted(spans, key=lambda s: preference_key(s, policy)):
        if not any(span.overlaps(k) for k in kept):
            kept.append(span)
    return sorted(kept)


def _dedupe_exact(spans: list[EntitySpan], policy: MergePolicy) -> list[EntitySpan]:
    best: dict[tuple, EntitySpan] = {}
    for span in spans:
        key = (span.start, span.end, span.etype)
        current = best.get(key)
        if current is None or policy.source_rank(span.source) < policy.source_rank(current.source):
            best[key] = span
    return sorted(best.values(), key=lambda s: (s.start, s.end, s.etype.rank, policy.source_rank(s.source)))
