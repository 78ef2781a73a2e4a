"""HTTP/JSON service: settings persistence, single-letter and batch
de-identification, interactive mark/remove editing, risk reports, downloads.

Sessions are explicit (X-Session-Id header) so concurrent reviewers do not
share custom lexicons or edit directives. Within a session, pipeline re-runs
are serialized; the session's documents are always re-processed as one batch
so replacements stay consistent and risk reports stay current.
"""
from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, File, Header, Response, UploadFile
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, PlainTextResponse
from pydantic import BaseModel

from .cli import load_default_surrogates, load_surrogates_dir
from .ingestion import fold
from .pipeline import PipelineConfig, SuppressAll, SuppressOne, run_batch
from .types import (
    DeidError,
    Document,
    EntityType,
    MaskedDocument,
    masked_doc_to_dict,
    settings_from_dict,
    settings_to_dict,
)
from .ingestion import load_letter_text, load_letter_xml

DEFAULT_PAGE_SIZE = 25


@dataclass
class Session:
    settings_raw: Optional[dict] = None
    documents: dict[str, Document] = field(default_factory=dict)
    results: dict[str, MaskedDocument] = field(default_factory=dict)
    risk: Optional[dict] = None
    manual_surfaces: dict[EntityType, tuple[str, ...]] = field(default_factory=dict)
    suppressions: tuple = ()
    errors: list[dict] = field(default_factory=list)
    lock: threading.Lock = field(default_factory=threading.Lock)


class MarkRequest(BaseModel):
    doc_id: str
    etype: str
    surface: Optional[str] = None
    start: Optional[int] = None
    end: Optional[int] = None


class RemoveRequest(BaseModel):
    doc_id: str
    scope: str  # "one" | "all"
    surface: Optional[str] = None
    etype: Optional[str] = None
    start: Optional[int] = None
    end: Optional[int] = None


def create_app(
    data_dir: str | None = None,
    model_url: str | None = None,
    page_size: int | None = None,
    surrogates_dir: str | None = None,
) -> FastAPI:
    data_path = Path(data_dir or os.environ.get("DEIDKIT_DATA_DIR", "/tmp/deidkit-data"))
    model_url = model_url or os.environ.get("DEIDKIT_MODEL_URL")
    page_size = page_size or int(os.environ.get("DEIDKIT_PAGE_SIZE", DEFAULT_PAGE_SIZE))
    surrogates_dir = surrogates_dir or os.environ.get("DEIDKIT_SURROGATES_DIR")
    sources = load_surrogates_dir(Path(surrogates_dir)) if surrogates_dir else load_default_surrogates()

    app = FastAPI(title="deidkit service")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    sessions: dict[str, Session] = {}
    sessions_lock = threading.Lock()

    def session_for(sid: str) -> Session:
        with sessions_lock:
            if sid not in sessions:
                sessions[sid] = Session()
                stored = _settings_path(sid)
                if stored.exists():
                    sessions[sid].settings_raw = json.loads(stored.read_text())
            return sessions[sid]

    def _settings_path(sid: str) -> Path:
        return data_path / "sessions" / sid / "settings.json"

    def _config(session: Session) -> PipelineConfig:
        settings = settings_from_dict(session.settings_raw)
        return PipelineConfig(
            settings=settings,
            manual_surfaces=dict(session.manual_surfaces),
            suppressions=session.suppressions,
            sources=sources,
            remote_url=model_url,
        )

    def _rerun(session: Session):
        if not session.documents:
            session.results = {}
            session.risk = None
            return
        result = run_batch(list(session.documents.values()), _config(session))
        session.results = {m.doc_id: m for m in result.masked}
        session.risk = result.risk.to_dict() if result.risk is not None else None

    def _doc_response(session: Session, doc_id: str) -> dict:
        masked = session.results[doc_id]
        return {
            "doc_id": doc_id,
            "original_text": session.documents[doc_id].text,
            "masked": masked_doc_to_dict(masked),
        }

    def _parse_upload(name: str, payload: bytes) -> Document:
        doc_id = Path(name).stem
        if name.lower().endswith(".xml"):
            return load_letter_xml(payload, doc_id=doc_id)
        return load_letter_text(payload, doc_id=doc_id)

    @app.put("/settings")
    def put_settings(request: dict, x_session_id: str = Header("default")):
        try:
            settings = settings_from_dict(request)
        except (ValueError, KeyError) as exc:
            return JSONResponse({"error": str(exc)}, status_code=400)
        session = session_for(x_session_id)
        with session.lock:
            session.settings_raw = settings_to_dict(settings)
            path = _settings_path(x_session_id)
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(json.dumps(session.settings_raw, indent=2, sort_keys=True))
            return session.settings_raw

    @app.get("/settings")
    def get_settings(x_session_id: str = Header("default")):
        session = session_for(x_session_id)
        if session.settings_raw is None:
            return JSONResponse({"error": "no settings saved"}, status_code=404)
        return session.settings_raw

    @app.post("/letters")
    def post_letter(file: UploadFile = File(...), x_session_id: str = Header("default")):
        session = session_for(x_session_id)
        with session.lock:
            if session.settings_raw is None:
                return JSONResponse({"error": "no settings saved"}, status_code=409)
            try:
                doc = _parse_upload(file.filename or "letter.txt", file.file.read())
            except DeidError as exc:
                return JSONResponse({"error": str(exc), "file": file.filename}, status_code=422)
            session.documents[doc.id] = doc
            _rerun(session)
            return _doc_response(session, doc.id)

    @app.post("/batch")
    def post_batch(files: list[UploadFile] = File(...), x_session_id: str = Header("default")):
        session = session_for(x_session_id)
        with session.lock:
            if session.settings_raw is None:
                return JSONResponse({"error": "no settings saved"}, status_code=409)
            session.errors = []
            for item in files:
                try:
                    doc = _parse_upload(item.filename or "letter.txt", item.file.read())
                    session.documents[doc.id] = doc
                except DeidError as exc:
                    session.errors.append(
                        {"file": item.filename, "status": 422, "message": str(exc)}
                    )
            _rerun(session)
            return _batch_page(session, cursor=0)

    def _batch_page(session: Session, cursor: int) -> dict:
        doc_ids = sorted(session.results)
        page_ids = doc_ids[cursor:cursor + page_size]
        next_cursor = cursor + page_size if cursor + page_size < len(doc_ids) else None
        return {
            "results": [_doc_response(session, d) for d in page_ids],
            "errors": session.errors,
            "cursor": next_cursor,
            "total": len(doc_ids),
            "risk": session.risk,
        }

    @app.get("/batch")
    def get_batch(cursor: int = 0, x_session_id: str = Header("default")):
        session = session_for(x_session_id)
        with session.lock:
            return _batch_page(session, cursor=cursor)

    @app.post("/entities/mark")
    def mark_entity(request: MarkRequest, x_session_id: str = Header("default")):
        session = session_for(x_session_id)
        with session.lock:
            if request.doc_id not in session.documents:
                return JSONResponse({"error": f"unknown document {request.doc_id}"}, status_code=404)
            try:
                etype = EntityType(request.etype)
            except ValueError:
                return JSONResponse({"error": f"unknown entity type {request.etype}"}, status_code=400)
            surface = request.surface
            if surface is None and request.start is not None and request.end is not None:
                surface = session.documents[request.doc_id].text[request.start:request.end]
            if not surface or not surface.strip():
                return JSONResponse({"error": "empty selection"}, status_code=400)
            surface = surface.strip()
            existing = session.manual_surfaces.get(etype, ())
            if surface not in existing:
                session.manual_surfaces[etype] = existing + (surface,)
            key = fold(surface)
            session.suppressions = tuple(
                d for d in session.suppressions
                if not (d.surface == key and d.etype is etype)
            )
            _rerun(session)
            return _doc_response(session, request.doc_id)

    @app.post("/entities/remove")
    def remove_entity(request: RemoveRequest, x_session_id: str = Header("default")):
        session = session_for(x_session_id)
        with session.lock:
            if request.doc_id not in session.results:
                return JSONResponse({"error": f"unknown document {request.doc_id}"}, status_code=404)
            rows = session.results[request.doc_id].span_map
            target = None
            for row in rows:
                span = row.original
                if request.start is not None and request.end is not None:
                    hit = span.start == request.start and span.end == request.end
                else:
                    hit = (
                        fold(span.surface) == fold(request.surface or "")
                        and (request.etype is None or span.etype.value == request.etype)
                    )
                if hit:
                    target = span
                    break
            if target is None:
                return JSONResponse({"error": "span not found"}, status_code=404)
            key = fold(target.surface)
            if request.scope == "all":
                directive = SuppressAll(etype=target.etype, surface=key)
            else:
                occurrence = sum(
                    1
                    for row in rows
                    if row.original.etype is target.etype
                    and fold(row.original.surface) == key
                    and row.original.start < target.start
                )
                directive = SuppressOne(
                    doc_id=request.doc_id, etype=target.etype, surface=key, occurrence=occurrence
                )
            session.suppressions = session.suppressions + (directive,)
            _rerun(session)
            return _doc_response(session, request.doc_id)

    @app.get("/results/{doc_id}/download")
    def download(doc_id: str, x_session_id: str = Header("default")):
        session = session_for(x_session_id)
        with session.lock:
            if doc_id not in session.results:
                return JSONResponse({"error": f"unknown document {doc_id}"}, status_code=404)
            return PlainTextResponse(session.results[doc_id].masked_text)

    @app.get("/risk")
    def get_risk(x_session_id: str = Header("default")):
        session = session_for(x_session_id)
        with session.lock:
            if not session.results:
                return JSONResponse({"error": "no processed batch"}, status_code=404)
            if session.risk is None:
                # HTTP forbids a 204 body; the explanation rides in a header
                return Response(
                    status_code=204,
                    headers={"X-Risk-Note": "risk assessment applies to replacement runs only"},
                )
            return session.risk

    return app


app = create_app()


def main():
    import uvicorn

    uvicorn.run(
        "deidkit.service:app",
        host=os.environ.get("DEIDKIT_BIND", "127.0.0.1"),
        port=int(os.environ.get("DEIDKIT_PORT", "8000")),
    )


if __name__ == "__main__":
    main()
