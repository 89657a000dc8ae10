"""REST surface over the job store.

    POST /v1/jobs                multipart image + config JSON -> 202 {id}
    GET  /v1/jobs                newest first, ?limit&offset
    GET  /v1/jobs/{id}           status, progress, artifact links
    GET  /v1/jobs/{id}/trajectory   JSON-lines
    GET  /v1/jobs/{id}/events    server-sent events, throttled
    GET  /v1/jobs/{id}/preview   PNG at an optional ?iter=k
    GET  /v1/jobs/{id}/matrix    matrix JSON
    POST /v1/apply               multipart image + matrix JSON -> PNG
    GET  /v1/backends            configured backends and descriptors
    GET  /v1/healthz             {"status": "ok"}

Polling is fully sufficient; the event stream is an optimization. The UI,
when built, is served as static files under /ui.
"""

from __future__ import annotations

import asyncio
import contextlib
import json
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, Form, HTTPException, Request, UploadFile
from fastapi.responses import JSONResponse, PlainTextResponse, RedirectResponse, Response, StreamingResponse
from fastapi.staticfiles import StaticFiles

from .. import ccm
from ..errors import DecodeError, MatrixFormatError, RowSumError
from ..image import decode_image, encode_display
from ..optimizer import ConfigError
from .config import ServiceConfig
from .jobs import JobStore, NoSnapshotError, QueueFullError, UnknownJobError

SSE_MIN_INTERVAL = 0.1  # seconds between pushed events


def create_app(config: ServiceConfig, store: Optional[JobStore] = None) -> FastAPI:
    owns_store = store is None

    @contextlib.asynccontextmanager
    async def lifespan(app: FastAPI):
        app.state.store.start()
        try:
            yield
        finally:
            if owns_store:
                app.state.store.shutdown()

    app = FastAPI(title="ccmtune service", lifespan=lifespan)
    app.state.store = store or JobStore(config)

    def get_job_or_404(job_id: str):
        try:
            return app.state.store.get(job_id)
        except UnknownJobError:
            raise HTTPException(404, detail=f"unknown job {job_id!r}")

    @app.get("/v1/healthz")
    def healthz():
        return {"status": "ok"}

    @app.get("/v1/backends")
    def backends():
        return app.state.store.registry.describe_all()

    @app.post("/v1/jobs", status_code=202)
    async def submit_job(image: UploadFile, config: str = Form(...)):
        try:
            config_doc = json.loads(config)
        except json.JSONDecodeError as exc:
            raise HTTPException(400, detail={"field": "config",
                                             "message": f"invalid JSON: {exc}"})
        image_bytes = await image.read()
        try:
            job_id = app.state.store.submit(image_bytes, config_doc)
        except ConfigError as exc:
            raise HTTPException(400, detail={"field": exc.field, "message": str(exc)})
        except KeyError as exc:
            raise HTTPException(400, detail={"field": "backend", "message": str(exc)})
        except DecodeError as exc:
            raise HTTPException(400, detail={"field": "image", "message": str(exc)})
        except QueueFullError as exc:
            raise HTTPException(503, detail=str(exc))
        return {"id": job_id}

    @app.get("/v1/jobs")
    def list_jobs(limit: int = 50, offset: int = 0):
        return [j.view() for j in app.state.store.list_jobs(limit, offset)]

    @app.get("/v1/jobs/{job_id}")
    def get_job(job_id: str):
        return get_job_or_404(job_id).view()

    @app.get("/v1/jobs/{job_id}/trajectory")
    def trajectory(job_id: str):
        get_job_or_404(job_id)
        path = app.state.store.trajectory_path(job_id)
        text = path.read_text() if path.exists() else ""
        return PlainTextResponse(text, media_type="application/x-ndjson")

    @app.get("/v1/jobs/{job_id}/events")
    async def events(job_id: str, request: Request):
        get_job_or_404(job_id)
        store: JobStore = app.state.store

        async def stream():
            path = store.trajectory_path(job_id)
            pos = 0
            pending = ""
            while True:
                if await request.is_disconnected():
                    return
                newest = None
                if path.exists():
                    with open(path, "r") as fh:
                        fh.seek(pos)
                        chunk = fh.read()
                        pos = fh.tell()
                    pending += chunk
                    *complete, pending = pending.split("\n")
                    complete = [line for line in complete if line.strip()]
                    if complete:
                        newest = complete[-1]
                if newest is not None:
                    yield f"event: record\ndata: {newest}\n\n"
                status = store.get(job_id).status
                if status in ("done", "failed") and newest is None:
                    payload = json.dumps({"status": status})
                    yield f"event: status\ndata: {payload}\n\n"
                    return
                await asyncio.sleep(SSE_MIN_INTERVAL)

        return StreamingResponse(stream(), media_type="text/event-stream")

    @app.get("/v1/jobs/{job_id}/snapshots")
    def snapshots(job_id: str):
        job = get_job_or_404(job_id)
        path = job.dir / "snapshots.json"
        if not path.exists():
            return JSONResponse([])
        # Serve the artifact bytes as-is.
        return Response(content=path.read_bytes(), media_type="application/json")

    @app.get("/v1/jobs/{job_id}/preview")
    def preview(job_id: str, iter: Optional[int] = None):
        get_job_or_404(job_id)
        try:
            png = app.state.store.preview_png(job_id, iter)
        except NoSnapshotError as exc:
            raise HTTPException(409, detail=str(exc))
        return Response(content=png, media_type="image/png")

    @app.get("/v1/jobs/{job_id}/matrix")
    def matrix(job_id: str):
        get_job_or_404(job_id)
        try:
            text = app.state.store.matrix_text(job_id)
        except NoSnapshotError as exc:
            raise HTTPException(409, detail=str(exc))
        # Serve the artifact bytes as-is.
        return Response(content=text, media_type="application/json")

    @app.post("/v1/apply")
    async def apply_matrix(image: UploadFile, matrix: str = Form(...)):
        try:
            parsed = ccm.matrix_from_json(matrix)
        except RowSumError as exc:
            raise HTTPException(422, detail=str(exc))
        except MatrixFormatError as exc:
            raise HTTPException(400, detail=str(exc))
        try:
            img = decode_image(await image.read())
        except DecodeError as exc:
            raise HTTPException(400, detail=str(exc))
        png = encode_display(ccm.apply(parsed, img))
        return Response(content=png, media_type="image/png")

    ui_dir = _find_ui_dir(config)
    if ui_dir is not None:
        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True), name="ui")

        @app.get("/", include_in_schema=False)
        def root():
            return RedirectResponse("/ui/")

    return app


def _find_ui_dir(config: ServiceConfig) -> Optional[Path]:
    if config.ui_dir is not None:
        return config.ui_dir if Path(config.ui_dir).is_dir() else None
    bundled = Path(__file__).resolve().parents[3] / "frontend" / "dist"
    return bundled if bundled.is_dir() else None
