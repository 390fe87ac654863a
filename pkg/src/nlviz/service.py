"""HTTP API over the session engine; the web UI consumes only this surface."""

from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI, HTTPException
from fastapi.responses import FileResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from .errors import BadDataset, EmptyRefinement, NoBaseQuery, TooManyModels
from .gateway import parse_model_spec
from .session import SessionEngine


class CreateSessionBody(BaseModel):
    dataset: str
    models: list[str] = Field(min_length=1)


class QueryBody(BaseModel):
    text: str


def create_app(engine: SessionEngine, static_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="nlviz session service")

    @app.get("/datasets")
    def list_datasets() -> dict:
        return {"datasets": engine.list_datasets()}

    @app.post("/sessions")
    def create_session(body: CreateSessionBody) -> dict:
        try:
            models = [parse_model_spec(m) for m in body.models]
            session = engine.create_session(body.dataset, models)
        except TooManyModels as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        except BadDataset as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        return session.to_dict()

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str) -> dict:
        try:
            return engine.get_session(session_id).to_dict()
        except BadDataset as exc:
            raise HTTPException(status_code=404, detail=str(exc))

    @app.post("/sessions/{session_id}/query")
    def post_query(session_id: str, body: QueryBody) -> dict:
        try:
            return engine.post_query(session_id, body.text).to_dict()
        except BadDataset as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        except EmptyRefinement as exc:
            raise HTTPException(status_code=400, detail=str(exc))

    @app.post("/sessions/{session_id}/refine")
    def refine(session_id: str, body: QueryBody) -> dict:
        try:
            return engine.refine_query(session_id, body.text).to_dict()
        except BadDataset as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        except (NoBaseQuery, EmptyRefinement) as exc:
            raise HTTPException(status_code=400, detail=str(exc))

    @app.get("/images/{ref}")
    def get_image(ref: str) -> FileResponse:
        if engine.state_dir is None or "/" in ref or ".." in ref:
            raise HTTPException(status_code=404, detail="no such image")
        path = engine.state_dir / "images" / ref
        if not path.is_file():
            raise HTTPException(status_code=404, detail="no such image")
        return FileResponse(path)

    if static_dir and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")

    return app
