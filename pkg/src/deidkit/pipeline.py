"""Orchestration shared by the CLI and the HTTP service: recognize, merge,
apply reviewer directives, mask, and (for replacement batches) score risk."""
from __future__ import annotations

from dataclasses import dataclass, field, replace as dc_replace

from .dictionary import CompiledLexicon, compile_lexicon, scan
from .ingestion import Lexicon, fold, make_lexicon
from .masking import ReplacementContext, SurrogateSources, replace
from .merging import MergePolicy, OverlapRule, merge
from .model import RemoteEndpoint, StubEndpoint, predict, reconstruct_spans, split_sentences
from .risk import RiskReport, assess, extract_contexts
from .rules import RuleSet, default_ruleset, scan_rules
from .types import (
    DeidSettings,
    Document,
    EntitySpan,
    EntityType,
    MaskedDocument,
    RemoteModel,
    SpanSource,
    StubModel,
)

DICTIONARY_TYPES = (EntityType.NAME, EntityType.PROFESSION, EntityType.LOCATION)


@dataclass(frozen=True)
class SuppressOne:
    """Restore a single occurrence: the nth span with this surface and type."""

    doc_id: str
    etype: EntityType
    surface: str  # case-folded
    occurrence: int


@dataclass(frozen=True)
class SuppressAll:
    """Restore every occurrence of a surface recognized as this type."""

    etype: EntityType
    surface: str  # case-folded


@dataclass
class PipelineConfig:
    settings: DeidSettings
    base_lexicons: dict[EntityType, Lexicon] = field(default_factory=dict)
    manual_surfaces: dict[EntityType, tuple[str, ...]] = field(default_factory=dict)
    suppressions: tuple[SuppressOne | SuppressAll, ...] = ()
    sources: SurrogateSources = field(default_factory=SurrogateSources)
    ruleset: RuleSet | None = None
    remote_url: str | None = None
    legacy_compat: bool = False

    def effective_ruleset(self) -> RuleSet:
        rules = self.ruleset if self.ruleset is not None else default_ruleset()
        if self.legacy_compat and not rules.compat_fragmenting:
            rules = dc_replace(rules, compat_fragmenting=True)
        return rules

    def merge_policy(self) -> MergePolicy:
        rule = OverlapRule.KEEP_ALL_COMPAT if self.legacy_compat else OverlapRule.LONGEST_THEN_PRIORITY
        return MergePolicy(overlap_rule=rule)

    def endpoint(self) -> StubEndpoint | RemoteEndpoint:
        model = self.settings.model
        if isinstance(model, StubModel):
            return StubEndpoint(model=model, ruleset=self.effective_ruleset())
        if self.remote_url is None:
            raise ValueError(f"remote model {model.name!r} selected but no endpoint URL configured")
        return RemoteEndpoint(base_url=self.remote_url, model_name=model.name)


def _compiled_lexicons(config: PipelineConfig) -> list[CompiledLexicon]:
    compiled = []
    for etype in DICTIONARY_TYPES:
        entries: list[str] = []
        base = config.base_lexicons.get(etype)
        if base is not None:
            entries.extend(base.entries)
        entries.extend(config.settings.custom_dictionaries.get(etype, ()))
        if entries:
            compiled.append(compile_lexicon(make_lexicon(etype, entries)))
    for etype, surfaces in sorted(config.manual_surfaces.items(), key=lambda kv: kv[0].rank):
        if surfaces:
            lex = compile_lexicon(make_lexicon(etype, list(surfaces)))
            lex.source = SpanSource.MANUAL
            compiled.append(lex)
    return compiled


def recognize(doc: Document, config: PipelineConfig) -> list[EntitySpan]:
    """All three layers plus reviewer-marked surfaces, merged and filtered."""
    spans = scan(doc, _compiled_lexicons(config))
    spans.extend(scan_rules(doc, config.effective_ruleset()))
    sentences = split_sentences(doc)
    spans.extend(reconstruct_spans(doc, predict(sentences, config.endpoint())))
    merged = merge(spans, config.merge_policy(), doc=doc)
    return _apply_suppressions(doc, merged, config.suppressions)


def _apply_suppressions(
    doc: Document, spans: list[EntitySpan], directives: tuple[SuppressOne | SuppressAll, ...]
) -> list[EntitySpan]:
    if not directives:
        return spans
    suppress_all = {(d.etype, d.surface) for d in directives if isinstance(d, SuppressAll)}
    spans = [s for s in spans if (s.etype, fold(s.surface)) not in suppress_all]
    drop: set[int] = set()
    for d in directives:
        if not isinstance(d, SuppressOne) or d.doc_id != doc.id:
            continue
        occurrence = 0
        for i, s in enumerate(spans):
            if s.etype is d.etype and fold(s.surface) == d.surface:
                if occurrence == d.occurrence:
                    drop.add(i)
                    break
                occurrence += 1
    return [s for i, s in enumerate(spans) if i not in drop]


def mask_document(
    doc: Document, spans: list[EntitySpan], config: PipelineConfig, ctx: ReplacementContext
) -> MaskedDocument:
    return replace(doc, spans, config.settings, config.sources, ctx)


@dataclass(frozen=True)
class BatchResult:
    masked: tuple[MaskedDocument, ...]
    risk: RiskReport | None


def run_batch(docs: list[Document], config: PipelineConfig, jobs: int = 1) -> BatchResult:
    """Recognition may fan out over `jobs` workers; masking stays sequential in
    sorted-id order so the surrogate RNG stream, and therefore every output
    byte, is reproducible for a given seed."""
    ordered = sorted(docs, key=lambda d: d.id)
    if jobs > 1 and len(ordered) > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=jobs) as pool:
            span_sets = list(pool.map(lambda d: recognize(d, config), ordered))
    else:
        span_sets = [recognize(doc, config) for doc in ordered]
    ctx = ReplacementContext.from_seed(config.settings.rng_seed)
    masked: list[MaskedDocument] = []
    for doc, spans in zip(ordered, span_sets):
        masked.append(mask_document(doc, spans, config, ctx))
    risk = None
    if config.settings.replaces_anything and masked:
        windows = extract_contexts(masked, config.settings.context_radius_words)
        risk = assess(windows, config.settings.risk_threshold)
    return BatchResult(masked=tuple(masked), risk=risk)


def run_single(doc: Document, config: PipelineConfig) -> MaskedDocument:
    return run_batch([doc], config).masked[0]
