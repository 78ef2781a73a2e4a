"""Document-level re-identification risk scoring for replaced batches.

Each replaced entity contributes a context window (up to N words each side).
Windows are embedded, compared across documents by cosine similarity, and a
window whose best cross-document similarity stays below the threshold counts
as unique. A document's risk is its unique-window count over the total window
count across the batch, banded green/yellow/red.
"""
from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass
from enum import Enum

import httpx
import numpy as np

from .types import Action, DeidError, MaskedDocument

HASH_DIM = 256

GREEN_BELOW = 25.0
YELLOW_UP_TO = 50.0


class ZeroVector(DeidError):
    pass


class EndpointUnreachable(DeidError):
    pass


class Band(str, Enum):
    GREEN = "green"
    YELLOW = "yellow"
    RED = "red"


def band_for(percent: float) -> Band:
    if percent < GREEN_BELOW:
        return Band.GREEN
    if percent <= YELLOW_UP_TO:
        return Band.YELLOW
    return Band.RED


@dataclass(frozen=True)
class ContextWindow:
    doc_id: str
    span_index: int
    text: str  # surrounding words, entity text excluded

    @property
    def is_empty(self) -> bool:
        return not self.text.strip()


@dataclass(frozen=True)
class DocumentRisk:
    doc_id: str
    unique_count: int
    risk_percent: float
    band: Band


@dataclass(frozen=True)
class RiskReport:
    documents: tuple[DocumentRisk, ...]
    total_count: int
    threshold: float
    single_document: bool = False  # cross-document comparison was vacuous

    def to_dict(self) -> dict:
        return {
            "documents": [
                {
                    "id": d.doc_id,
                    "unique_count": d.unique_count,
                    "risk_percent": d.risk_percent,
                    "band": d.band.value,
                }
                for d in self.documents
            ],
            "total_count": self.total_count,
            "threshold": self.threshold,
            "single_document_warning": self.single_document,
        }


_TOKEN = re.compile(r"\S+")


def extract_contexts(masked: list[MaskedDocument], radius_words: int) -> list[ContextWindow]:
    """One window per replaced span: up to `radius_words` whitespace tokens each side."""
    windows: list[ContextWindow] = []
    for doc in masked:
        tokens = [(m.start(), m.end(), m.group(0)) for m in _TOKEN.finditer(doc.masked_text)]
        for idx, row in enumerate(doc.span_map):
            if row.action is not Action.REPLACE:
                continue
            left = [t[2] for t in tokens if t[1] <= row.new_start][-radius_words:]
            right = [t[2] for t in tokens if t[0] >= row.new_end][:radius_words]
            windows.append(ContextWindow(doc.doc_id, idx, " ".join(left + right)))
    return windows


def _stable_bucket(token: str) -> int:
    digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big") % HASH_DIM


class HashingEmbedder:
    """Deterministic token-hash bag, L2-normalized; stable across runs and platforms."""

    dim = HASH_DIM

    def embed(self, text: str) -> np.ndarray:
        vec = np.zeros(self.dim, dtype=np.float64)
        for token in text.split():
            vec[_stable_bucket(token)] += 1.0
        norm = np.linalg.norm(vec)
        if norm == 0.0:
            return vec  # zero-context sentinel
        return vec / norm


class RemoteEmbedder:
    """Sidecar contextual embedder speaking the same vector contract."""

    def __init__(self, base_url: str, timeout: float = 30.0,
                 transport: httpx.BaseTransport | None = None):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self.transport = transport

    def embed_batch(self, texts: list[str]) -> np.ndarray:
        try:
            with httpx.Client(transport=self.transport, timeout=self.timeout) as client:
                response = client.post(self.base_url + "/embed", json={"texts": texts})
        except httpx.TransportError as exc:
            raise EndpointUnreachable(str(exc)) from exc
        response.raise_for_status()
        vectors = np.asarray(response.json()["vectors"], dtype=np.float64)
        norms = np.linalg.norm(vectors, axis=1, keepdims=True)
        return np.where(norms > 0, vectors / np.maximum(norms, 1e-12), vectors)

    def embed(self, text: str) -> np.ndarray:
        return self.embed_batch([text])[0]


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    """Dot product of pre-normalized vectors; sentinels must be filtered by callers."""
    if not u.any() or not v.any():
        raise ZeroVector("cosine undefined for the zero-context sentinel")
    return float(np.dot(u, v))


def assess(
    windows: list[ContextWindow],
    threshold: float,
    embedder=None,
    pair_counting: bool = False,
) -> RiskReport:
    """Score each document's share of unique contexts.

    A non-empty window is unique when its best cosine against every window of
    every other document falls below the threshold (or no comparison window
    exists). Empty-context sentinels are always unique: an entity with no
    context cannot be shown to be common. `pair_counting` switches to counting
    below-threshold cross-document pairs instead of windows (comparison mode;
    percentages are then relative to the total pair count).
    """
    embedder = embedder or HashingEmbedder()
    doc_ids: list[str] = []
    for w in windows:
        if w.doc_id not in doc_ids:
            doc_ids.append(w.doc_id)
    vectors = [embedder.embed(w.text) for w in windows]
    sentinel = [w.is_empty or not vectors[i].any() for i, w in enumerate(windows)]

    if pair_counting:
        return _assess_pairs(windows, vectors, sentinel, doc_ids, threshold)

    unique_by_doc = {d: 0 for d in doc_ids}
    single = len(doc_ids) < 2
    for i, w in enumerate(windows):
        others = [
            j for j, o in enumerate(windows)
            if o.doc_id != w.doc_id and not sentinel[j]
        ]
        if sentinel[i] or not others:
            unique = True
        else:
            best = max(float(np.dot(vectors[i], vectors[j])) for j in others)
            unique = best < threshold
        if unique:
            unique_by_doc[w.doc_id] += 1

    total = len(windows)
    return RiskReport(
        documents=tuple(
            DocumentRisk(
                doc_id=d,
                unique_count=unique_by_doc[d],
                risk_percent=(100.0 * unique_by_doc[d] / total) if total else 0.0,
                band=band_for((100.0 * unique_by_doc[d] / total) if total else 0.0),
            )
            for d in doc_ids
        ),
        total_count=total,
        threshold=threshold,
        single_document=single,
    )


def _assess_pairs(windows, vectors, sentinel, doc_ids, threshold) -> RiskReport:
    low_by_doc = {d: 0 for d in doc_ids}
    pairs_by_doc = {d: 0 for d in doc_ids}
    for i, w in enumerate(windows):
        for j, o in enumerate(windows):
            if o.doc_id == w.doc_id:
                continue
            pairs_by_doc[w.doc_id] += 1
            if sentinel[i] or sentinel[j]:
                below = 0.0 < threshold
            else:
                below = float(np.dot(vectors[i], vectors[j])) < threshold
            if below:
                low_by_doc[w.doc_id] += 1
    total = sum(pairs_by_doc.values())
    return RiskReport(
        documents=tuple(
            DocumentRisk(
                doc_id=d,
                unique_count=low_by_doc[d],
                risk_percent=(100.0 * low_by_doc[d] / total) if total else 0.0,
                band=band_for((100.0 * low_by_doc[d] / total) if total else 0.0),
            )
            for d in doc_ids
        ),
        total_count=total,
        threshold=threshold,
        single_document=len(doc_ids) < 2,
    )
