"""deidkit: layered clinical-text de-identification with risk scoring."""

from .types import (
    Action,
    DeidSettings,
    Document,
    EntitySpan,
    EntityType,
    MaskedDocument,
    SpanSource,
    span_overlaps,
    validate_spans,
)

__all__ = [
    "Action",
    "DeidSettings",
    "Document",
    "EntitySpan",
    "EntityType",
    "MaskedDocument",
    "SpanSource",
    "span_overlaps",
    "validate_spans",
]

__version__ = "0.1.0"
