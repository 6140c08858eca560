"""HTTP/JSON service exposing sessions, the gallery, and ingestion.

Thin layer over the session engine: every response value is computed by the
engine, and module errors map onto 4xx bodies carrying their stable codes.
"""

from __future__ import annotations

import base64
import threading
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .config import EngineConfig
from .encoders import MockEncoder, load_store
from .errors import (
    ConflictError,
    FitProError,
    NotFoundError,
    ParseError,
    SessionClosedError,
    ValidationError,
)
from .index import StoreEncoder, build_index, load_index
from .ingest import load_manifest
from .session import Engine

_STATUS = {
    NotFoundError: 404,
    SessionClosedError: 409,
    ConflictError: 409,
    ParseError: 422,
    ValidationError: 422,
}


def encoder_from_config(config: EngineConfig):
    emb = config.embedding
    if emb.provider == "store":
        return StoreEncoder(load_store(emb.store_path), seed=emb.seed)
    return MockEncoder(seed=emb.seed, dim=emb.dim)


def engine_from_config(config: EngineConfig) -> Engine:
    index = load_index(config.paths.index_dir)
    return Engine(
        index,
        encoder_from_config(config),
        weights=config.weights,
        top_n=config.retrieval.top_n,
    )


class SessionStart(BaseModel):
    q0: str
    t0: str = ""


class FeedbackBody(BaseModel):
    text: str


class RevealBody(BaseModel):
    image_key: str


class IngestBody(BaseModel):
    manifest_path: str
    mode: str = "cropped"


def create_app(engine: Engine, cors_origins=("*",)) -> FastAPI:
    app = FastAPI(title="fitpro")
    app.state.engine = engine
    lock = threading.Lock()  # requests within one session must serialize

    app.add_middleware(
        CORSMiddleware,
        allow_origins=list(cors_origins),
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(FitProError)
    async def fitpro_error(_: Request, exc: FitProError):
        status = next(
            (code for cls, code in _STATUS.items() if isinstance(exc, cls)), 400
        )
        return JSONResponse(
            status_code=status, content={"error": exc.code, "detail": str(exc)}
        )

    def ranking_json(session):
        return session.report()["rounds"][-1]["ranking"]

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    @app.post("/sessions")
    def start_session(body: SessionStart):
        with lock:
            s = engine.start_session(body.q0, t0=body.t0)
            return {"session_id": s.session_id, "ranking": ranking_json(s)}

    @app.post("/sessions/{session_id}/feedback")
    def feedback(session_id: str, body: FeedbackBody):
        with lock:
            s = engine.submit_feedback(session_id, body.text)
            return {"round": s.r, "ranking": ranking_json(s)}

    @app.post("/sessions/{session_id}/reveal")
    def reveal(session_id: str, body: RevealBody):
        with lock:
            s = engine.reveal_answer(session_id, body.image_key)
            return {"revealed_count": len(s.revealed)}

    @app.get("/sessions/{session_id}")
    def report(session_id: str):
        return engine.get_report(session_id)

    @app.delete("/sessions/{session_id}")
    def close(session_id: str):
        with lock:
            return engine.close_session(session_id)

    @app.get("/gallery/{image_key:path}")
    def gallery(image_key: str):
        meta = engine.index.metadata.get(image_key)
        if meta is None:
            # index loaded without metadata still knows its keys
            engine.index.by_key(image_key)
            meta = {}
        image_b64 = None
        path = meta.get("image_path")
        if path and Path(path).is_file():
            image_b64 = base64.b64encode(Path(path).read_bytes()).decode("ascii")
        return {"image_key": image_key, "metadata": meta, "image_base64": image_b64}

    @app.post("/ingest")
    def ingest(body: IngestBody):
        with lock:
            manifest = load_manifest(body.manifest_path, mode=body.mode)
            engine.index = build_index(manifest, engine.encoder)
            return {"indexed_count": len(engine.index.candidates)}

    return app
