import random

import pytest

from deidkit.rules import (
    RuleSet,
    default_ruleset,
    ruleset_from_config,
    ruleset_to_config,
    scan_rules,
)
from deidkit.types import Document, EntityType, SpanSource


def surfaces(text, ruleset=None):
    spans = scan_rules(Document("d", text), ruleset or default_ruleset())
    return [(s.surface, s.etype) for s in spans]


AGE_LITERALS = ["45 years old", "45 yo", "45years old", "45 y/o", "45 y.o.", "45-year-old"]
DATE_LITERALS = [
    "2023-08-13",
    "2023/08/13",
    "08/23",
    "August 13, 2023",
    "13 August 2023",
    "August-2023",
    "August 2023",
    "Aug 2023",
    "08/13/2023",
    "13/08/2023",
]


class TestAgePatterns:
    @pytest.mark.parametrize("literal", AGE_LITERALS)
    def test_single_age_span(self, literal):
        assert surfaces(f"The patient is {literal}.") == [(literal, EntityType.AGE)]

    def test_age_digits_bounded(self):
        assert surfaces("1234 years old") == []
        assert surfaces("999 years old") == [("999 years old", EntityType.AGE)]


class TestDatePatterns:
    @pytest.mark.parametrize("literal", DATE_LITERALS)
    def test_single_date_span(self, literal):
        assert surfaces(f"Seen on {literal} at clinic") == [(literal, EntityType.DATE)]

    def test_bare_year(self):
        assert surfaces("Diagnosed in 2071.") == [("2071", EntityType.DATE)]

    def test_bare_year_range(self):
        assert surfaces("code 1234 and 8888") == []
        assert surfaces("in 1900 and 2199") == [
            ("1900", EntityType.DATE),
            ("2199", EntityType.DATE),
        ]

    def test_custom_year_range(self):
        rules = default_ruleset(year_floor=2000, year_ceiling=2099)
        assert surfaces("1999 and 2050", rules) == [("2050", EntityType.DATE)]

    def test_empty_document(self):
        assert surfaces("") == []

    def test_no_digit_run_bleed(self):
        assert surfaces("ID 120230813") == []


class TestConsolidation:
    def test_january_2071_single_span(self):
        assert surfaces("Admitted January 2071 for tests") == [
            ("January 2071", EntityType.DATE)
        ]

    def test_january_2071_compat_fragments(self):
        got = surfaces("Admitted January 2071 for tests", default_ruleset(compat_fragmenting=True))
        assert got == [("January 2071", EntityType.DATE), ("2071", EntityType.DATE)]

    def test_same_type_spans_never_overlap(self):
        rng = random.Random(3)
        pieces = AGE_LITERALS + DATE_LITERALS + ["and", "seen", "on", "the", "x"]
        for _ in range(200):
            text = " ".join(rng.choice(pieces) for _ in range(rng.randint(0, 10)))
            spans = scan_rules(Document("d", text), default_ruleset())
            by_type = {}
            for s in spans:
                by_type.setdefault(s.etype, []).append(s)
            for group in by_type.values():
                group.sort()
                for a, b in zip(group, group[1:]):
                    assert a.end <= b.start, (text, a, b)

    def test_age_leading_digits_parse(self):
        spans = scan_rules(Document("d", "3 yo, 45 years old, 999 y/o"), default_ruleset())
        for s in spans:
            digits = "".join(ch for ch in s.surface if ch.isdigit())
            assert 0 <= int(digits[:3]) <= 999

    def test_source_is_rule(self):
        spans = scan_rules(Document("d", "45 yo"), default_ruleset())
        assert spans[0].source is SpanSource.RULE


class TestRuleConfig:
    def test_round_trip(self):
        rules = default_ruleset(year_floor=1950, compat_fragmenting=True)
        again = ruleset_from_config(ruleset_to_config(rules))
        assert again.year_floor == 1950
        assert again.compat_fragmenting
        assert [r.pattern_id for r in again.rules] == [r.pattern_id for r in rules.rules]
        assert surfaces("January 2071 x", again) == surfaces("January 2071 x", rules)

    def test_disabled_rule_is_skipped(self):
        import json

        raw = json.loads(ruleset_to_config(default_ruleset()))
        for entry in raw["rules"]:
            if entry["id"] == "date_bare_year":
                entry["enabled"] = False
        loaded = ruleset_from_config(json.dumps(raw))
        assert surfaces("in 2071", loaded) == []

    def test_duplicate_ids_rejected(self):
        rules = default_ruleset()
        with pytest.raises(ValueError):
            RuleSet(rules=rules.rules + (rules.rules[0],))
