"""HTTP face of the review service.

Routes:
  GET  /api/queue?stage=&n=&annotator=   lease review items
  POST /api/decision                     submit one decision
  GET  /api/progress                     stage counts + coverage snapshot
  GET  /api/mention/{id}                 full record view
  GET  /api/export                       finalized corpus TSV
plus static serving of the review UI bundle when a directory is provided.

Authentication is a single shared token (X-Auth-Token header) for the whole
annotation team; annotator identity is self-declared per request.
"""

from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import PlainTextResponse
from fastapi.staticfiles import StaticFiles

from .service import LeaseConflict, ReviewService
from .workflow import StoreError, TransitionError


def create_app(
    service: ReviewService,
    auth_token: str | None = None,
    ui_dir: str | Path | None = None,
) -> FastAPI:
    app = FastAPI(title="elboot review service")

    def check_auth(request: Request) -> None:
        if auth_token is None:
            return
        if request.headers.get("X-Auth-Token") != auth_token:
            raise HTTPException(status_code=401, detail="bad or missing X-Auth-Token")

    @app.get("/api/queue")
    def queue(request: Request, stage: str, annotator: str, n: int = 10):
        check_auth(request)
        try:
            return {"items": service.get_queue(stage, annotator, n)}
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc))

    @app.post("/api/decision")
    async def decision(request: Request):
        check_auth(request)
        payload = await request.json()
        token = payload.get("lease_token", "")
        try:
            return service.post_decision(token, payload)
        except LeaseConflict as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        except TransitionError as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        except (ValueError, KeyError) as exc:
            raise HTTPException(status_code=400, detail=str(exc))

    @app.get("/api/progress")
    def progress(request: Request):
        check_auth(request)
        return service.get_progress()

    @app.get("/api/mention/{mention_id}")
    def mention(request: Request, mention_id: str):
        check_auth(request)
        try:
            return service.get_mention(mention_id)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown mention {mention_id!r}")

    @app.get("/api/export", response_class=PlainTextResponse)
    def export(request: Request):
        check_auth(request)
        try:
            return service.store.export_tsv()
        except StoreError as exc:
            raise HTTPException(status_code=409, detail=str(exc))

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
