import random

import pytest

from deidkit.merging import (
    CrossDocumentSpans,
    MergePolicy,
    OverlapRule,
    merge,
    preference_key,
)
from deidkit.types import Document, EntitySpan, EntityType, SpanSource, span_overlaps


def sp(start, end, etype=EntityType.NAME, source=SpanSource.MODEL):
    return EntitySpan(start, end, etype, source, "x" * (end - start))


def brute_force_optimum(spans, policy):
    """Enumerate every subset; keep independent ones; pick the lexicographic
    maximum under the preference order (padded comparison, so maximal sets
    dominate their subsets)."""
    order = sorted(range(len(spans)), key=lambda i: preference_key(spans[i], policy))
    rank = {i: r for r, i in enumerate(order)}
    best_key, best = None, []
    n = len(spans)
    for mask in range(1 << n):
        chosen = [i for i in range(n) if mask >> i & 1]
        ok = all(
            not span_overlaps(spans[i], spans[j])
            for ai, i in enumerate(chosen)
            for j in chosen[ai + 1:]
        )
        if not ok:
            continue
        key = tuple(sorted(rank[i] for i in chosen)) + (n,) * (n - len(chosen))
        if best_key is None or key < best_key:
            best_key, best = key, chosen
    return sorted(spans[i] for i in best)


class TestExamples:
    def test_exact_duplicate_keeps_priority_source(self):
        a = sp(10, 19, EntityType.NAME, SpanSource.MODEL)
        b = sp(10, 19, EntityType.NAME, SpanSource.DICTIONARY)
        merged = merge([a, b])
        assert merged == [b] and merged[0].source is SpanSource.DICTIONARY

    def test_same_span_type_disagreement_resolved_by_source(self):
        name = sp(5, 15, EntityType.NAME, SpanSource.MODEL)
        location = sp(5, 15, EntityType.LOCATION, SpanSource.DICTIONARY)
        merged = merge([name, location])
        assert [s.etype for s in merged] == [EntityType.LOCATION]

    def test_longest_date_wins(self):
        whole = sp(50, 62, EntityType.DATE, SpanSource.RULE)
        part = sp(58, 62, EntityType.DATE, SpanSource.RULE)
        assert merge([whole, part]) == [whole]

    def test_manual_always_wins_on_ties(self):
        manual = sp(0, 5, EntityType.DATE, SpanSource.MANUAL)
        model = sp(0, 5, EntityType.NAME, SpanSource.MODEL)
        merged = merge([manual, model])
        assert merged[0].etype is EntityType.DATE

    def test_compat_removes_exact_duplicates_only(self):
        a = sp(0, 10, EntityType.DATE, SpanSource.RULE)
        b = sp(6, 10, EntityType.DATE, SpanSource.RULE)
        dup = sp(0, 10, EntityType.DATE, SpanSource.MODEL)
        policy = MergePolicy(overlap_rule=OverlapRule.KEEP_ALL_COMPAT)
        merged = merge([a, b, dup], policy)
        assert [(s.start, s.end) for s in merged] == [(0, 10), (6, 10)]
        assert merged[0].source is SpanSource.RULE

    def test_cross_document_rejected(self):
        doc = Document("d", "hello world")
        bad = EntitySpan(0, 5, EntityType.NAME, SpanSource.MODEL, "other")
        with pytest.raises(CrossDocumentSpans):
            merge([bad], doc=doc)

    def test_policy_must_be_permutation(self):
        with pytest.raises(ValueError):
            MergePolicy(priority=(SpanSource.MANUAL, SpanSource.MODEL))


class TestInvariants:
    def random_spans(self, rng, n):
        spans = []
        for _ in range(n):
            start = rng.randrange(0, 30)
            end = start + rng.randint(1, 8)
            spans.append(
                sp(start, end, rng.choice(list(EntityType)), rng.choice(list(SpanSource)))
            )
        return spans

    def test_output_never_overlaps(self):
        rng = random.Random(5)
        for _ in range(300):
            merged = merge(self.random_spans(rng, rng.randint(0, 12)))
            for a, b in zip(merged, merged[1:]):
                assert a.end <= b.start

    def test_idempotent(self):
        rng = random.Random(6)
        for _ in range(300):
            merged = merge(self.random_spans(rng, rng.randint(0, 12)))
            assert merge(merged) == merged

    def test_no_fabricated_intervals(self):
        rng = random.Random(8)
        for _ in range(200):
            spans = self.random_spans(rng, rng.randint(0, 12))
            inputs = {(s.start, s.end) for s in spans}
            for s in merge(spans):
                assert (s.start, s.end) in inputs

    def test_matches_subset_oracle_small(self):
        rng = random.Random(9)
        policy = MergePolicy()
        for _ in range(150):
            spans = self.random_spans(rng, rng.randint(0, 9))
            assert merge(spans, policy) == brute_force_optimum(spans, policy)
