"""Scoring of recognizer output against gold annotations.

Produces per-type and aggregate precision/recall/F1 in the familiar
classification-report layout (4-decimal text table plus JSON). Matching can be
exact-span, overlap, or position-blind surface matching; the latter exists for
comparison with manually tallied historical results.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from enum import Enum

from .types import EntitySpan, EntityType, span_overlaps


class MatchMode(str, Enum):
    EXACT = "exact"  # same (start, end, type)
    OVERLAP = "overlap"  # same type, intervals intersect; greedy by position
    SURFACE = "surface"  # multiset of (type, surface), position-blind


@dataclass
class Counts:
    tp: int = 0
    fp: int = 0
    fn: int = 0

    def __iadd__(self, other: "Counts") -> "Counts":
        self.tp += other.tp
        self.fp += other.fp
        self.fn += other.fn
        return self


@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    support: float


def _metrics(tp: float, fp: float, fn: float) -> ClassMetrics:
    precision = tp / (tp + fp) if tp + fp > 0 else 0.0
    recall = tp / (tp + fn) if tp + fn > 0 else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return ClassMetrics(precision, recall, f1, tp + fn)


@dataclass(frozen=True)
class ClassificationReport:
    per_type: dict[str, ClassMetrics]
    micro: ClassMetrics
    macro: ClassMetrics
    weighted: ClassMetrics

    def to_dict(self) -> dict:
        def row(m: ClassMetrics) -> dict:
            return {"precision": m.precision, "recall": m.recall, "f1": m.f1, "support": m.support}

        return {
            "per_type": {label: row(m) for label, m in self.per_type.items()},
            "micro_avg": row(self.micro),
            "macro_avg": row(self.macro),
            "weighted_avg": row(self.weighted),
        }


def score(
    predicted: dict[str, list[EntitySpan]],
    gold: dict[str, list[EntitySpan]],
    mode: MatchMode = MatchMode.EXACT,
) -> dict[EntityType, Counts]:
    """Per-type TP/FP/FN over a multi-document batch keyed by document id."""
    totals: dict[EntityType, Counts] = {}
    for doc_id in sorted(set(predicted) | set(gold)):
        doc_counts = _score_document(predicted.get(doc_id, []), gold.get(doc_id, []), mode)
        for etype, counts in doc_counts.items():
            totals.setdefault(etype, Counts())
            totals[etype] += counts
    return totals


def _score_document(
    predicted: list[EntitySpan], gold: list[EntitySpan], mode: MatchMode
) -> dict[EntityType, Counts]:
    counts: dict[EntityType, Counts] = {}
    for etype in {s.etype for s in predicted} | {s.etype for s in gold}:
        pred = sorted(s for s in predicted if s.etype is etype)
        true = sorted(s for s in gold if s.etype is etype)
        if mode is MatchMode.EXACT:
            pred_keys = {(s.start, s.end) for s in pred}
            gold_keys = {(s.start, s.end) for s in true}
            tp = len(pred_keys & gold_keys)
            counts[etype] = Counts(tp=tp, fp=len(pred_keys) - tp, fn=len(gold_keys) - tp)
        elif mode is MatchMode.OVERLAP:
            taken = [False] * len(pred)
            tp = 0
            for g in true:
                for i, p in enumerate(pred):
                    if not taken[i] and span_overlaps(p, g):
                        taken[i] = True
                        tp += 1
                        break
            counts[etype] = Counts(tp=tp, fp=taken.count(False), fn=len(true) - tp)
        else:
            pred_surfaces = Counter(s.surface for s in pred)
            gold_surfaces = Counter(s.surface for s in true)
            tp = sum((pred_surfaces & gold_surfaces).values())
            counts[etype] = Counts(tp=tp, fp=len(pred) - tp, fn=len(true) - tp)
    return counts


def report(counts: dict[EntityType, Counts], include: list[EntityType] | None = None) -> ClassificationReport:
    """Build the full classification report from per-type counts."""
    types = include if include is not None else [t for t in EntityType if t in counts]
    rows: dict[str, ClassMetrics] = {}
    pooled = Counts()
    for t in types:
        c = counts.get(t, Counts())
        rows[t.value] = _metrics(c.tp, c.fp, c.fn)
        pooled += c
    return ClassificationReport(
        per_type=rows,
        micro=_metrics(pooled.tp, pooled.fp, pooled.fn),
        macro=_macro(rows),
        weighted=_weighted(rows),
    )


def aggregates_from_rates(rows: list[tuple[str, float, float, float]]) -> ClassificationReport:
    """Aggregate rows of (label, precision, recall, support).

    Used to recompute the summary lines of a published report when only the
    per-class rates are available. Pseudo-counts are derived from the rates
    (tp = recall x support, fp from precision); classes with zero precision
    contribute no predicted count.
    """
    per_type: dict[str, ClassMetrics] = {}
    tp_total = fp_total = fn_total = 0.0
    for label, precision, recall, support in rows:
        f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
        per_type[label] = ClassMetrics(precision, recall, f1, support)
        tp = recall * support
        fp = tp * (1.0 - precision) / precision if precision > 0 else 0.0
        tp_total += tp
        fp_total += fp
        fn_total += support - tp
    return ClassificationReport(
        per_type=per_type,
        micro=_metrics(tp_total, fp_total, fn_total),
        macro=_macro(per_type),
        weighted=_weighted(per_type),
    )


def _macro(rows: dict[str, ClassMetrics]) -> ClassMetrics:
    n = len(rows)
    if n == 0:
        return ClassMetrics(0.0, 0.0, 0.0, 0.0)
    support = sum(m.support for m in rows.values())
    return ClassMetrics(
        sum(m.precision for m in rows.values()) / n,
        sum(m.recall for m in rows.values()) / n,
        sum(m.f1 for m in rows.values()) / n,
        support,
    )


def _weighted(rows: dict[str, ClassMetrics]) -> ClassMetrics:
    support = sum(m.support for m in rows.values())
    if support == 0:
        return ClassMetrics(0.0, 0.0, 0.0, 0.0)
    return ClassMetrics(
        sum(m.precision * m.support for m in rows.values()) / support,
        sum(m.recall * m.support for m in rows.values()) / support,
        sum(m.f1 * m.support for m in rows.values()) / support,
        support,
    )


def render_text(rep: ClassificationReport) -> str:
    """Fixed-width table, 4-decimal rounding, sklearn-style layout."""
    width = max([len("weighted avg")] + [len(label) for label in rep.per_type])
    lines = [f"{'':>{width}}  precision    recall  f1-score   support"]
    lines.append("")

    def fmt(label: str, m: ClassMetrics) -> str:
        support = int(round(m.support)) if abs(m.support - round(m.support)) < 1e-6 else round(m.support, 1)
        return f"{label:>{width}}     {m.precision:6.4f}    {m.recall:6.4f}    {m.f1:6.4f}  {support:>8}"

    for label, m in rep.per_type.items():
        lines.append(fmt(label, m))
    lines.append("")
    lines.append(fmt("micro avg", rep.micro))
    lines.append(fmt("macro avg", rep.macro))
    lines.append(fmt("weighted avg", rep.weighted))
    return "\n".join(lines)


FP_OVER_IDENTIFICATION = "over_identification"
FP_OVERLAPPING_TYPES = "overlapping_types"
FP_MULTI_WORD_BREAKDOWN = "multi_word_breakdown"


def classify_false_positives(
    predicted: list[EntitySpan], gold: list[EntitySpan]
) -> dict[str, list[EntitySpan]]:
    """Span-diff tool: bucket exact-mode false positives by their apparent cause.

    A false positive overlapping same-type gold with wrong boundaries is a
    multi-word breakdown (a fragment or over-extension); one overlapping gold
    of a different type is an overlapping-type disagreement; anything else is
    plain over-identification.
    """
    gold_keys = {(s.start, s.end, s.etype) for s in gold}
    buckets: dict[str, list[EntitySpan]] = {
        FP_OVER_IDENTIFICATION: [],
        FP_OVERLAPPING_TYPES: [],
        FP_MULTI_WORD_BREAKDOWN: [],
    }
    for span in predicted:
        if (span.start, span.end, span.etype) in gold_keys:
            continue
        same_type = any(g.etype is span.etype and span_overlaps(span, g) for g in gold)
        other_type = any(g.etype is not span.etype and span_overlaps(span, g) for g in gold)
        if same_type:
            buckets[FP_MULTI_WORD_BREAKDOWN].append(span)
        elif other_type:
            buckets[FP_OVERLAPPING_TYPES].append(span)
        else:
            buckets[FP_OVER_IDENTIFICATION].append(span)
    return buckets
