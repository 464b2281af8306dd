"""HTTP/JSON API over the engine.

Endpoints mirror the published schemas in data/api_schemas.json; every
error is a structured {code, message, field?} body. Request payloads are
validated by the same domain validators the library uses, so API behavior
can't drift from engine behavior.
"""

import importlib.metadata
import importlib.resources
import json

from fastapi import Body, FastAPI, Query, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from .engine import Engine
from .errors import (
    ConflictError,
    InvalidStateError,
    NotFoundError,
    PolicyError,
    ProtocolError,
    ProviderUnavailable,
    StorageError,
    ValidationError,
)
from .persona import load_catalogs


def load_api_schemas() -> dict:
    """The published JSON Schema definitions for all response bodies."""
    text = (
        importlib.resources.files("persode.data").joinpath("api_schemas.json").read_text("utf-8")
    )
    return json.loads(text)


def _error_body(code: str, message: str, field: str | None = None) -> dict:
    body = {"code": code, "message": message}
    if field is not None:
        body["field"] = field
    return body


_STATUS_BY_ERROR = [
    (ValidationError, 400),
    (NotFoundError, 404),
    (ConflictError, 409),
    (InvalidStateError, 409),
    (ProviderUnavailable, 502),
    (PolicyError, 502),
    (ProtocolError, 502),
    (StorageError, 500),
]


def _entry_dict(entry) -> dict:
    return entry.to_dict()


def create_app(engine: Engine, mock_providers: bool = True) -> FastAPI:
    app = FastAPI(title="persode", docs_url=None, redoc_url=None)
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    app.state.engine = engine

    @app.exception_handler(Exception)
    async def domain_error_handler(request: Request, exc: Exception):
        for error_type, status in _STATUS_BY_ERROR:
            if isinstance(exc, error_type):
                field = getattr(exc, "field", None)
                return JSONResponse(
                    status_code=status, content=_error_body(exc.code, str(exc), field)
                )
        if isinstance(exc, ValueError):
            return JSONResponse(
                status_code=400, content=_error_body("invalid_argument", str(exc))
            )
        return JSONResponse(
            status_code=500, content=_error_body("internal", "internal server error")
        )

    @app.exception_handler(RequestValidationError)
    async def request_validation_handler(request: Request, exc: RequestValidationError):
        errors = exc.errors()
        field = ".".join(str(p) for p in errors[0]["loc"]) if errors else None
        message = errors[0]["msg"] if errors else "invalid request"
        return JSONResponse(
            status_code=400, content=_error_body("validation_error", message, field)
        )

    @app.get("/health")
    def health():
        return {
            "status": "ok",
            "version": importlib.metadata.version("persode"),
            "mock_providers": mock_providers,
        }

    @app.get("/catalogs")
    def catalogs():
        return load_catalogs()

    @app.post("/users", status_code=201)
    def create_user(payload: dict = Body(default={})):
        record = engine.create_user(payload.get("preferences"))
        return {
            "user_id": record.user_id,
            "created_at": record.created_at,
            "preferences": record.preferences.to_dict(),
        }

    @app.get("/users/{user_id}/preferences")
    def get_preferences(user_id: str):
        record = engine.store.get_profile(user_id)
        return {
            "user_id": record.user_id,
            "created_at": record.created_at,
            "preferences": record.preferences.to_dict(),
        }

    @app.put("/users/{user_id}/preferences")
    def put_preferences(user_id: str, payload: dict = Body(...)):
        engine.update_preferences(user_id, payload.get("preferences", payload))
        record = engine.store.get_profile(user_id)
        return {
            "user_id": record.user_id,
            "created_at": record.created_at,
            "preferences": record.preferences.to_dict(),
        }

    @app.post("/users/{user_id}/sessions", status_code=201)
    def open_session(user_id: str):
        session = engine.open_session(user_id)
        return {
            "session_id": session.session_id,
            "user_id": session.user_id,
            "opened_at": session.opened_at,
            "state": session.state,
        }

    @app.post("/sessions/{session_id}/messages")
    def post_message(session_id: str, payload: dict = Body(...)):
        text = payload.get("text", "")
        if not isinstance(text, str):
            raise ValidationError("text must be a string", field="text")
        result = engine.post_message(session_id, text)
        return {
            "reply": result.reply,
            "cited_memory_ids": list(result.cited_memory_ids),
            "ranked": [c.to_dict() for c in result.ranked],
        }

    @app.post("/sessions/{session_id}/close")
    def close_session(session_id: str):
        result = engine.close_session(session_id)
        return {
            "diary": _entry_dict(result.entry),
            "new_fragment_ids": list(result.new_fragment_ids),
            "warnings": list(result.warnings),
        }

    @app.get("/users/{user_id}/diaries")
    def list_diaries(
        user_id: str,
        page: int = Query(default=1),
        page_size: int = Query(default=10),
        snapshot: int | None = Query(default=None),
    ):
        result = engine.store.list_diaries(user_id, page=page, page_size=page_size, snapshot=snapshot)
        return {
            "entries": [_entry_dict(e) for e in result.entries],
            "page": result.page,
            "page_size": result.page_size,
            "total": result.total,
            "snapshot": result.snapshot,
        }

    @app.get("/users/{user_id}/memories")
    def list_memories(
        user_id: str,
        min_strength: float | None = Query(default=None),
        term: str | None = Query(default=None),
    ):
        return {"fragments": engine.memory_views(user_id, min_strength, term)}

    return app
