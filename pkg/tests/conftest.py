import pytest

from deidkit.ingestion import make_lexicon
from deidkit.masking import SurrogateSources
from deidkit.types import Document, EntitySpan, EntityType, SpanSource


def span_at(text: str, surface: str, etype: EntityType,
            source: SpanSource = SpanSource.RULE, occurrence: int = 0) -> EntitySpan:
    """Build a span over the nth occurrence of `surface` in `text`."""
    start = -1
    for _ in range(occurrence + 1):
        start = text.index(surface, start + 1)
    return EntitySpan(start, start + len(surface), etype, source, surface)


@pytest.fixture
def letter() -> Document:
    return Document(
        "letter-1",
        "Record date: 2071-01-15\n"
        "Dr. Beverly Thiel saw the patient, a 45 yo carpenter from Clarkfield.\n"
        "Follow up in Spring City on January 2071.\n",
    )


@pytest.fixture
def surrogates() -> SurrogateSources:
    return SurrogateSources(
        surnames=make_lexicon(EntityType.NAME, ["Smith", "Jones", "Garcia", "Chen"]),
        full_names=make_lexicon(
            EntityType.NAME, ["Mary Johnson", "Robert Williams", "Elena Cruz"]
        ),
        locations=make_lexicon(EntityType.LOCATION, ["Springfield", "Riverton", "Lakeside"]),
        professions=make_lexicon(EntityType.PROFESSION, ["teacher", "florist", "welder"]),
    )
