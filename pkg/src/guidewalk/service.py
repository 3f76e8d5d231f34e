"""Job-oriented HTTP service backing the interactive UI.

Runs are content-addressed: POST /runs with an identical spec returns the
same id without recomputation. The service shares `execute_run` with the CLI,
so both surfaces emit byte-identical artifacts. Jobs execute on a thread
pool; clients poll GET /runs/{id} for progress.
"""

from __future__ import annotations

import json
import os
import threading
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse

from . import gwf
from .errors import DocumentError
from .fields import Field, Shape
from .runspec import parse_runspec, resolve_terms
from .storage import ArtifactStore, ModelRegistry, execute_run

QUEUED = "queued"
RUNNING = "running"
DONE = "done"
FAILED = "failed"


class JobBook:
    """In-memory job records; monotone queued -> running -> done|failed."""

    def __init__(self):
        self._lock = threading.Lock()
        self._jobs: dict[str, dict] = {}

    def get(self, run_id: str) -> dict | None:
        with self._lock:
            record = self._jobs.get(run_id)
            return dict(record) if record else None

    def create(self, run_id: str) -> bool:
        """Register a queued job; False if one is already tracked."""
        with self._lock:
            if run_id in self._jobs:
                return False
            self._jobs[run_id] = {
                "run_id": run_id,
                "state": QUEUED,
                "progress": {"completed": 0, "total": 0},
                "error": None,
            }
            return True

    def update(self, run_id: str, **fields) -> None:
        with self._lock:
            self._jobs[run_id].update(fields)

    def progress(self, run_id: str, completed: int, total: int) -> None:
        with self._lock:
            job = self._jobs[run_id]
            job["state"] = RUNNING
            job["progress"] = {"completed": completed, "total": total}


def _error(status: int, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"detail": message})


def create_app(
    store_root: str,
    models_dir: str = "",
    max_workers: int = 2,
    ui_dir: str = "",
) -> FastAPI:
    store = ArtifactStore(store_root)
    registry = ModelRegistry(models_dir)
    jobs = JobBook()
    pool = ThreadPoolExecutor(max_workers=max_workers)

    app = FastAPI(title="guidewalk", version="0.1.0")
    app.state.store = store
    app.state.jobs = jobs

    def record_for_existing(run_id: str) -> dict:
        return {
            "run_id": run_id,
            "state": DONE,
            "progress": {"completed": 0, "total": 0},
            "error": None,
        }

    def run_job(spec, run_id: str) -> None:
        jobs.update(run_id, state=RUNNING)
        try:
            execute_run(
                spec, store, registry,
                progress=lambda done, total: jobs.progress(run_id, done, total),
            )
            jobs.update(run_id, state=DONE)
        except Exception as exc:  # surfaced through GET /runs/{id}
            jobs.update(run_id, state=FAILED, error=f"{type(exc).__name__}: {exc}")

    async def read_json_object(request: Request) -> dict | JSONResponse:
        try:
            body = await request.json()
        except json.JSONDecodeError as exc:
            return _error(400, f"invalid JSON: {exc}")
        if not isinstance(body, dict):
            return _error(400, "request body must be a JSON object")
        return body

    @app.post("/runs")
    async def post_run(request: Request):
        body = await read_json_object(request)
        if isinstance(body, JSONResponse):
            return body
        try:
            spec = parse_runspec(body)
            model = registry.load(spec.model)
            resolve_terms(spec, model, mask_loader=store.load_mask)
            if "normmaps" in spec.outputs.emit and not model.shape.is_grid:
                raise DocumentError("normmaps require a grid-shaped model", "outputs.emit")
        except DocumentError as exc:
            return _error(400, str(exc))
        run_id = spec.run_id()
        if store.has_run(run_id):
            manifest = store.read_manifest(run_id)
            if manifest.get("runspec") != spec.to_document():
                return _error(409, f"run {run_id} exists with a different payload")
            return {"run_id": run_id}
        if jobs.create(run_id):
            pool.submit(run_job, spec, run_id)
        return {"run_id": run_id}

    @app.get("/runs/{run_id}")
    async def get_run(run_id: str):
        record = jobs.get(run_id)
        if record is None:
            if store.has_run(run_id):
                return record_for_existing(run_id)
            return _error(404, f"unknown run {run_id!r}")
        return record

    def _manifest_or_none(run_id: str):
        if not store.has_run(run_id):
            return None
        return store.read_manifest(run_id)

    @app.get("/runs/{run_id}/samples/{index}")
    async def get_sample(run_id: str, index: int, format: str = "gwf"):
        manifest = _manifest_or_none(run_id)
        if manifest is None:
            return _error(404, f"unknown run {run_id!r}")
        samples = manifest.get("samples", [])
        if not 0 <= index < len(samples):
            return _error(404, f"run has {len(samples)} samples")
        path = os.path.join(store.run_dir(run_id), samples[index])
        with open(path, "rb") as fh:
            raw = fh.read()
        if format == "pgm":
            rendered, _, _ = gwf.render_pgm(gwf.field_from_bytes(raw))
            return Response(rendered, media_type="image/x-portable-graymap")
        return Response(raw, media_type="application/octet-stream")

    @app.get("/runs/{run_id}/normmaps/{step}")
    async def get_normmap(run_id: str, step: int):
        manifest = _manifest_or_none(run_id)
        if manifest is None:
            return _error(404, f"unknown run {run_id!r}")
        entries = manifest.get("normmaps")
        if not entries or not 0 <= step < len(entries):
            return _error(404, "no norm map recorded for that step")
        path = os.path.join(store.run_dir(run_id), entries[step]["file"])
        with open(path, "rb") as fh:
            return Response(fh.read(), media_type="image/x-portable-graymap")

    @app.get("/runs/{run_id}/metrics")
    async def get_metrics(run_id: str):
        manifest = _manifest_or_none(run_id)
        if manifest is None:
            return _error(404, f"unknown run {run_id!r}")
        rel = manifest.get("metrics")
        if not rel:
            return _error(404, "run emitted no metrics")
        with open(os.path.join(store.run_dir(run_id), rel), "r") as fh:
            return json.load(fh)

    @app.get("/models")
    async def get_models():
        return {"models": registry.names()}

    @app.get("/models/{name}")
    async def get_model(name: str):
        try:
            model = registry.load(name)
        except DocumentError:
            return _error(404, f"unknown model {name!r}")
        shape_doc = (
            {"kind": "grid", "h": model.shape.dims[0], "w": model.shape.dims[1]}
            if model.shape.is_grid
            else {"kind": "flat", "d": model.shape.dims[0]}
        )
        return {
            "name": name,
            "shape": shape_doc,
            "conditions": [
                {"id": cid, "components": len(model.conditions[cid])}
                for cid in model.condition_ids
            ],
        }

    @app.post("/masks")
    async def post_mask(request: Request):
        body = await read_json_object(request)
        if isinstance(body, JSONResponse):
            return body
        shape_doc = body.get("shape")
        values = body.get("values")
        if not isinstance(shape_doc, dict) or values is None:
            return _error(400, "mask payload needs 'shape' and 'values'")
        try:
            if shape_doc.get("kind") != "grid":
                raise DocumentError("painted masks must be grid-shaped", "shape")
            shape = Shape.grid(int(shape_doc["h"]), int(shape_doc["w"]))
            arr = np.asarray(values, dtype=np.float64).reshape(-1)
            if arr.size != shape.volume:
                raise DocumentError(
                    f"{arr.size} values for volume {shape.volume}", "values"
                )
            if np.any(arr < 0.0) or np.any(arr > 1.0):
                raise DocumentError("mask values must lie in [0, 1]", "values")
            mask = Field(shape, arr)
        except (DocumentError, KeyError, TypeError, ValueError) as exc:
            return _error(400, str(exc))
        return {"mask_id": store.store_mask(mask)}

    if ui_dir and os.path.isdir(ui_dir):
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
