import calendar
import random

import pytest

from conftest import span_at
from deidkit.ingestion import make_lexicon
from deidkit.masking import (
    MissingSurrogateSource,
    OverlappingSpans,
    ReplacementContext,
    ReplacementScope,
    SurrogateSources,
    _shift_date,
    redact,
    replace,
)
from deidkit.types import (
    Action,
    DeidSettings,
    Document,
    EntitySpan,
    EntityType,
    SpanSource,
)

ALL_REDACT = DeidSettings(actions={t: Action.REDACT for t in EntityType})
ALL_REPLACE = DeidSettings(actions={t: Action.REPLACE for t in EntityType}, rng_seed=99)


class TestRedact:
    def test_name_placeholder(self):
        text = "Patient John Doe arrived"
        doc = Document("d", text)
        masked = redact(doc, [span_at(text, "John Doe", EntityType.NAME)], ALL_REDACT)
        assert masked.masked_text == "Patient XXX-Name arrived"

    def test_no_spans_identity(self):
        doc = Document("d", "nothing sensitive")
        assert redact(doc, [], ALL_REDACT).masked_text == doc.text

    def test_second_span_shifts_left(self):
        text = "John Doe met Mary Johnson today"
        doc = Document("d", text)
        spans = [
            span_at(text, "John Doe", EntityType.NAME),
            span_at(text, "Mary Johnson", EntityType.NAME),
        ]
        masked = redact(doc, spans, ALL_REDACT)
        # "XXX-Name" replaces 8 chars with 8, then 12 with 8: second shifts by 0 then -4 applies after
        assert masked.masked_text == "XXX-Name met XXX-Name today"
        first, second = masked.span_map
        assert (first.new_start, first.new_end) == (0, 8)
        assert (second.new_start, second.new_end) == (13, 21)
        assert masked.masked_text[second.new_start:second.new_end] == "XXX-Name"

    def test_ignore_passes_through(self):
        text = "John Doe seen 2071-01-15"
        doc = Document("d", text)
        settings = DeidSettings(
            actions={EntityType.NAME: Action.IGNORE, EntityType.DATE: Action.REDACT}
        )
        spans = [
            span_at(text, "John Doe", EntityType.NAME),
            span_at(text, "2071-01-15", EntityType.DATE),
        ]
        masked = redact(doc, spans, settings)
        assert masked.masked_text == "John Doe seen XXX-Date"

    def test_overlapping_rejected(self):
        doc = Document("d", "abcdef")
        spans = [
            EntitySpan(0, 4, EntityType.NAME, SpanSource.MODEL, "abcd"),
            EntitySpan(2, 6, EntityType.NAME, SpanSource.MODEL, "cdef"),
        ]
        with pytest.raises(OverlappingSpans):
            redact(doc, spans, ALL_REDACT)

    def test_all_eight_placeholders(self):
        for etype in EntityType:
            doc = Document("d", "padding word padding")
            masked = redact(doc, [span_at(doc.text, "word", etype)], ALL_REDACT)
            assert f"XXX-{etype.placeholder}" in masked.masked_text


class TestReplace:
    def test_full_name_from_pool_deterministic(self, surrogates):
        text = "Patient John Doe arrived"
        doc = Document("d", text)
        spans = [span_at(text, "John Doe", EntityType.NAME)]
        a = replace(doc, spans, ALL_REPLACE, surrogates, ReplacementContext.from_seed(99))
        b = replace(doc, spans, ALL_REPLACE, surrogates, ReplacementContext.from_seed(99))
        assert a == b
        drawn = a.span_map[0].replacement
        assert drawn in surrogates.full_names.entries

    def test_single_word_name_uses_surnames(self, surrogates):
        text = "seen by Thiel today"
        doc = Document("d", text)
        masked = replace(doc, [span_at(text, "Thiel", EntityType.NAME)], ALL_REPLACE,
                         surrogates, ReplacementContext.from_seed(1))
        assert masked.span_map[0].replacement in surrogates.surnames.entries

    def test_repeated_surface_consistent(self, surrogates):
        text = "Beverly came; Beverly left"
        doc = Document("d", text)
        spans = [
            span_at(text, "Beverly", EntityType.NAME, occurrence=0),
            span_at(text, "Beverly", EntityType.NAME, occurrence=1),
        ]
        masked = replace(doc, spans, ALL_REPLACE, surrogates, ReplacementContext.from_seed(4))
        assert masked.span_map[0].replacement == masked.span_map[1].replacement
        assert (EntityType.NAME, "beverly") in masked.replacement_map

    def test_consistency_across_documents_in_batch(self, surrogates):
        ctx = ReplacementContext.from_seed(12)
        out = []
        for doc_id in ("a", "b"):
            text = "Beverly was here"
            doc = Document(doc_id, text)
            masked = replace(doc, [span_at(text, "Beverly", EntityType.NAME)],
                             ALL_REPLACE, surrogates, ctx)
            out.append(masked.span_map[0].replacement)
        assert out[0] == out[1]

    def test_per_document_scope_resets(self, surrogates):
        ctx = ReplacementContext.from_seed(12, scope=ReplacementScope.PER_DOCUMENT)
        replacements = []
        for doc_id in ("a", "b"):
            text = "Beverly was here"
            doc = Document(doc_id, text)
            masked = replace(doc, [span_at(text, "Beverly", EntityType.NAME)],
                             ALL_REPLACE, surrogates, ctx)
            replacements.append(masked.span_map[0].replacement)
            assert list(masked.replacement_map) == [(EntityType.NAME, "beverly")]
        # mapping was cleared between documents; draws continue down the stream
        assert len(replacements) == 2

    def test_age_zero_shift_unchanged(self, surrogates):
        rigged = ReplacementContext(rng=_FixedDelta(0))
        text = "she is 45 yo"
        doc = Document("d", text)
        masked = replace(doc, [span_at(text, "45 yo", EntityType.AGE)], ALL_REPLACE,
                         surrogates, rigged)
        assert masked.masked_text == text

    def test_age_unit_preserved_and_clamped(self, surrogates):
        rigged = ReplacementContext(rng=_FixedDelta(-5))
        text = "a 3-year-old child"
        doc = Document("d", text)
        masked = replace(doc, [span_at(text, "3-year-old", EntityType.AGE)], ALL_REPLACE,
                         surrogates, rigged)
        assert masked.masked_text == "a 0-year-old child"

    def test_date_shift_plus_two_months(self, surrogates):
        rigged = ReplacementContext(rng=_FixedDelta(2))
        text = "seen 2071-01-15 ok"
        doc = Document("d", text)
        masked = replace(doc, [span_at(text, "2071-01-15", EntityType.DATE)], ALL_REPLACE,
                         surrogates, rigged)
        assert "2071-03-15" in masked.masked_text

    def test_unparseable_date_flagged(self, surrogates):
        text = "early Spring morning"
        doc = Document("d", text)
        masked = replace(doc, [span_at(text, "early Spring", EntityType.DATE)], ALL_REPLACE,
                         surrogates, ReplacementContext.from_seed(3))
        row = masked.span_map[0]
        assert row.fallback and row.replacement.count("-") == 2

    def test_missing_source_raises(self):
        text = "Thiel was here"
        doc = Document("d", text)
        with pytest.raises(MissingSurrogateSource):
            replace(doc, [span_at(text, "Thiel", EntityType.NAME)], ALL_REPLACE,
                    SurrogateSources(), ReplacementContext.from_seed(0))

    def test_surrogate_never_equals_original(self):
        sources = SurrogateSources(
            surnames=make_lexicon(EntityType.NAME, ["Thiel", "Smith"]),
            full_names=make_lexicon(EntityType.NAME, ["John Doe"]),
            locations=make_lexicon(EntityType.LOCATION, ["x"]),
            professions=make_lexicon(EntityType.PROFESSION, ["x"]),
        )
        text = "Thiel thiel THIEL"
        doc = Document("d", text)
        spans = [span_at(text, s, EntityType.NAME, occurrence=0) for s in ("Thiel", "thiel", "THIEL")]
        masked = replace(doc, spans, ALL_REPLACE, sources, ReplacementContext.from_seed(0))
        assert masked.masked_text == "Smith Smith Smith"


class _FixedDelta(random.Random):
    """RNG whose randint always lands a fixed distance from the lower bound midpoint."""

    def __init__(self, value):
        super().__init__(0)
        self.value = value

    def randint(self, a, b):
        assert a <= self.value <= b
        return self.value


class TestDateShiftOracle:
    def month_step_oracle(self, year, month, day, delta):
        """Independent calendar arithmetic: walk one month at a time."""
        step = 1 if delta > 0 else -1
        for _ in range(abs(delta)):
            month += step
            if month == 0:
                month, year = 12, year - 1
            elif month == 13:
                month, year = 1, year + 1
        return year, month, min(day, calendar.monthrange(year, month)[1])

    @pytest.mark.parametrize("delta", [-2, -1, 0, 1, 2])
    def test_iso_dates_match_oracle(self, delta):
        rng = random.Random(31)
        for _ in range(200):
            year = rng.randint(1960, 2150)
            month = rng.randint(1, 12)
            day = rng.randint(1, calendar.monthrange(year, month)[1])
            surface = f"{year:04d}-{month:02d}-{day:02d}"
            got, fallback = _shift_date(surface, 0, _FixedDelta(0)) if delta == 0 else _shift_date(surface, abs(delta), _FixedDelta(delta))
            assert not fallback
            ey, em, ed = self.month_step_oracle(year, month, day, delta)
            assert got == f"{ey:04d}-{em:02d}-{ed:02d}", (surface, delta)

    def test_month_length_clamp(self):
        got, _ = _shift_date("2071-01-31", 1, _FixedDelta(1))
        assert got == "2071-02-28"
        got, _ = _shift_date("2072-01-31", 1, _FixedDelta(1))  # leap year
        assert got == "2072-02-29"

    def test_textual_format_preserved(self):
        cases = {
            "January 2071": "March 2071",
            "JANUARY 2071": "MARCH 2071",
            "Jan. 5, 2071": "Mar. 5, 2071",
            "5 January 2071": "5 March 2071",
            "January-2071": "March-2071",
            "01/15/2071": "03/15/2071",
            "08/23": "10/23",
        }
        for surface, expected in cases.items():
            got, fallback = _shift_date(surface, 2, _FixedDelta(2))
            assert not fallback
            assert got == expected, surface

    def test_year_boundary_wrap(self):
        got, _ = _shift_date("January 2071", 2, _FixedDelta(-2))
        assert got == "November 2070"
        got, _ = _shift_date("12/70", 2, _FixedDelta(1))
        assert got == "01/71"


class TestMaskingProperties:
    TYPES = [EntityType.NAME, EntityType.DATE, EntityType.AGE,
             EntityType.LOCATION, EntityType.PROFESSION]

    def random_case(self, rng, surrogates):
        words = []
        spans = []
        value_pool = [
            ("Beverly", EntityType.NAME), ("John Doe", EntityType.NAME),
            ("2071-01-15", EntityType.DATE), ("January 2071", EntityType.DATE),
            ("45 yo", EntityType.AGE), ("Clarkfield", EntityType.LOCATION),
            ("carpenter", EntityType.PROFESSION),
        ]
        pos = 0
        for _ in range(rng.randint(0, 8)):
            filler = rng.choice(["lorem", "ipsum", "notes", "plan,"])
            words.append(filler)
            pos += len(filler) + 1
            if rng.random() < 0.6:
                surface, etype = rng.choice(value_pool)
                words.append(surface)
                spans.append((pos, pos + len(surface), etype, surface))
                pos += len(surface) + 1
        text = " ".join(words)
        doc = Document(f"doc{rng.random()}", text)
        entity_spans = [
            EntitySpan(s, e, t, SpanSource.RULE, surface) for (s, e, t, surface) in spans
        ]
        actions = {t: rng.choice([Action.REDACT, Action.REPLACE, Action.IGNORE])
                   for t in EntityType}
        settings = DeidSettings(actions=actions, rng_seed=rng.randrange(2**32))
        return doc, entity_spans, settings

    def test_invariant_suite(self, surrogates):
        rng = random.Random(2024)
        for _ in range(300):
            doc, spans, settings = self.random_case(rng, surrogates)
            ctx = ReplacementContext.from_seed(settings.rng_seed)
            masked = replace(doc, spans, settings, surrogates, ctx)
            # length bookkeeping
            delta = sum(
                len(row.replacement) - (row.original.end - row.original.start)
                for row in masked.span_map
            )
            assert len(masked.masked_text) == len(doc.text) + delta
            # offset soundness
            for row in masked.span_map:
                assert masked.masked_text[row.new_start:row.new_end] == row.replacement
            # placeholder form + leak check
            for row in masked.span_map:
                if row.action is Action.REDACT:
                    assert row.replacement == f"XXX-{row.original.etype.placeholder}"
                if row.action is Action.REPLACE and row.original.etype in (
                    EntityType.NAME, EntityType.LOCATION, EntityType.PROFESSION
                ):
                    assert masked.masked_text[row.new_start:row.new_end] != row.original.surface
            # determinism
            again = replace(doc, spans, settings, surrogates,
                            ReplacementContext.from_seed(settings.rng_seed))
            assert again == masked
