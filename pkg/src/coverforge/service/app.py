"""HTTP facade over the job engine.

Upload-and-poll flow: POST /api/jobs returns 202 with a status URL, clients
poll GET /api/jobs/{id} until a terminal state, then fetch artifacts. All
4xx bodies carry machine-readable {code, field?, message}.
"""

from __future__ import annotations

import json
from pathlib import Path

import httpx
from fastapi import FastAPI, File, Form, Request, UploadFile
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, Response
from fastapi.staticfiles import StaticFiles

from ..captioning.remote import RemoteCaptioner
from ..captioning.stubs import StubCaptioner
from ..config import MAX_AUDIO_UPLOAD, MAX_IMAGE_UPLOAD, ServiceConfig
from ..errors import (
    CoverForgeError,
    InvalidParams,
    NotFound,
    QueueFull,
    ValidationFailed,
)
from ..generation.remote import RemoteEndpoint, RemoteGenerator
from ..generation.stub import StubGenerator
from ..generation.types import GenerationParams
from ..ingest import MAX_STYLE_TEXT_LEN, ModalityBundle, decode_audio, normalize_image
from ..orchestrator.engine import JobEngine
from ..orchestrator.job import CoverJob
from ..orchestrator.store import JobStore
from ..vision.segmentation import KMeansStubSegmenter

_STATUS_BY_CODE = {
    "ValidationFailed": 400,
    "InvalidParams": 400,
    "UnsupportedFormat": 400,
    "CorruptAudio": 400,
    "CorruptImage": 400,
    "TooSmall": 400,
    "EmptyAudio": 400,
    "PayloadTooLarge": 400,
    "QueueFull": 429,
    "NotFound": 404,
}


def build_engine(config: ServiceConfig) -> JobEngine:
    store = JobStore(config.data_dir)
    if config.backend_mode == "remote":
        captioner = RemoteCaptioner(config.backend_url)
        generator = RemoteGenerator(RemoteEndpoint(base_url=config.backend_url))
    else:
        captioner = StubCaptioner()
        generator = StubGenerator()
    return JobEngine(store, captioner, generator, KMeansStubSegmenter(),
                     queue_bound=config.queue_bound)


def _error_response(status: int, code: str, message: str,
                    field: str | None = None, reasons: dict | None = None) -> JSONResponse:
    body: dict = {"code": code, "message": message}
    if field:
        body["field"] = field
    if reasons:
        body["reasons"] = reasons
    return JSONResponse(status_code=status, content=body)


def _parse_params(params_json: str | None, seed: int | None = None) -> GenerationParams:
    data = {}
    if params_json:
        try:
            data = json.loads(params_json)
        except json.JSONDecodeError as exc:
            raise InvalidParams(f"params is not valid JSON: {exc}", field="params")
        if not isinstance(data, dict):
            raise InvalidParams("params must be a JSON object", field="params")
    if seed is not None:
        data["seed"] = seed
    return GenerationParams.from_dict(data)


def _job_view(job: CoverJob) -> dict:
    view = {
        "job_id": job.id,
        "state": job.state,
        "kind": job.kind,
        "seed": job.seed,
        "params": job.params.to_dict(),
        "timings": job.timings,
        "warnings": job.warnings,
        "error": job.error,
        "created_at": job.created_at,
        "artifacts": {},
    }
    if job.state == "succeeded":
        view["artifacts"] = {
            name: f"/api/jobs/{job.id}/artifacts/{name}" for name in sorted(job.artifacts)
        }
    return view


def build_app(config: ServiceConfig | None = None, engine: JobEngine | None = None,
              start_workers: bool = False) -> FastAPI:
    config = config or ServiceConfig()
    engine = engine or build_engine(config)

    if start_workers:
        from contextlib import asynccontextmanager

        @asynccontextmanager
        async def lifespan(app: FastAPI):
            engine.store.recover_incomplete()
            engine.start_workers(config.worker_count)
            yield
            engine.stop_workers()

        app = FastAPI(title="coverforge", lifespan=lifespan)
    else:
        app = FastAPI(title="coverforge")
    app.state.engine = engine
    app.state.config = config

    if config.cors_origins:
        app.add_middleware(
            CORSMiddleware, allow_origins=config.cors_origins,
            allow_methods=["*"], allow_headers=["*"])

    @app.exception_handler(CoverForgeError)
    async def _domain_error(request: Request, exc: CoverForgeError):
        status = _STATUS_BY_CODE.get(exc.code, 500)
        reasons = getattr(exc, "reasons", None)
        field = exc.field or (sorted(reasons)[0] if reasons else None)
        return _error_response(status, exc.code, exc.message, field, reasons)

    @app.exception_handler(RequestValidationError)
    async def _request_error(request: Request, exc: RequestValidationError):
        errors = exc.errors()
        field = None
        if errors:
            loc = [str(part) for part in errors[0].get("loc", []) if part != "body"]
            field = ".".join(loc) or None
        return _error_response(400, "ValidationFailed", "invalid request", field)

    from starlette.exceptions import HTTPException as StarletteHTTPException

    @app.exception_handler(StarletteHTTPException)
    async def _http_error(request: Request, exc: StarletteHTTPException):
        # keep every 4xx machine-readable, including unknown paths
        code = "NotFound" if exc.status_code == 404 else "HttpError"
        return _error_response(exc.status_code, code, str(exc.detail))

    @app.get("/api/health")
    def health():
        reachable = True
        if config.backend_mode == "remote":
            try:
                resp = httpx.get(f"{config.backend_url}/health", timeout=2.0)
                reachable = resp.status_code == 200
            except httpx.HTTPError:
                reachable = False
        return {"status": "ok", "backend_mode": config.backend_mode,
                "backend_reachable": reachable}

    @app.post("/api/jobs", status_code=202)
    async def create_job(
        audio: UploadFile = File(...),
        image: UploadFile = File(...),
        style: str = Form(""),
        params: str | None = Form(None),
        qr_payload: str | None = Form(None),
        seed: int | None = Form(None),
    ):
        audio_bytes = await audio.read()
        if len(audio_bytes) > MAX_AUDIO_UPLOAD:
            return _error_response(413, "PayloadTooLarge",
                                   f"audio exceeds {MAX_AUDIO_UPLOAD} bytes", "audio")
        image_bytes = await image.read()
        if len(image_bytes) > MAX_IMAGE_UPLOAD:
            return _error_response(413, "PayloadTooLarge",
                                   f"image exceeds {MAX_IMAGE_UPLOAD} bytes", "image")
        if len(style) > MAX_STYLE_TEXT_LEN:
            raise ValidationFailed("style text too long",
                                   reasons={"style": f"max {MAX_STYLE_TEXT_LEN} characters"})

        fmt = (Path(audio.filename or "upload.wav").suffix or ".wav").lstrip(".")
        try:
            clip = decode_audio(audio_bytes, fmt)
        except CoverForgeError as exc:
            exc.field = "audio"
            raise
        try:
            norm = normalize_image(image_bytes)
        except CoverForgeError as exc:
            exc.field = "image"
            raise

        gen_params = _parse_params(params, seed)
        bundle = ModalityBundle(audio=clip, image=norm, style_text=style)
        options = {}
        if qr_payload is not None:
            options = {"make_qr": True, "qr_payload": qr_payload or None}
        job_id = engine.submit_job(bundle, gen_params, options)
        return JSONResponse(status_code=202, content={
            "job_id": job_id, "status_url": f"/api/jobs/{job_id}"})

    @app.post("/api/qr", status_code=202)
    async def create_qr_job(
        image: UploadFile = File(...),
        payload: str = Form(...),
        style: str = Form(""),
        params: str | None = Form(None),
        seed: int | None = Form(None),
        auto_tune: bool = Form(False),
    ):
        image_bytes = await image.read()
        if len(image_bytes) > MAX_IMAGE_UPLOAD:
            return _error_response(413, "PayloadTooLarge",
                                   f"image exceeds {MAX_IMAGE_UPLOAD} bytes", "image")
        try:
            norm = normalize_image(image_bytes)
        except CoverForgeError as exc:
            exc.field = "image"
            raise
        gen_params = _parse_params(params, seed)
        job_id = engine.submit_qr_job(norm, payload, style, gen_params, auto_tune)
        return JSONResponse(status_code=202, content={
            "job_id": job_id, "status_url": f"/api/jobs/{job_id}"})

    @app.get("/api/jobs")
    def list_jobs(state: str | None = None, limit: int = 50):
        states = set(state.split(",")) if state else None
        return {"jobs": [_job_view(job) for job in engine.list_jobs(states, limit)]}

    @app.get("/api/jobs/{job_id}")
    def get_job(job_id: str):
        return _job_view(engine.get_job(job_id))

    @app.post("/api/jobs/{job_id}/cancel")
    def cancel_job(job_id: str):
        return _job_view(engine.cancel_job(job_id))

    @app.get("/api/jobs/{job_id}/artifacts/{name}")
    def get_artifact(job_id: str, name: str):
        job = engine.get_job(job_id)
        if job.state != "succeeded":
            return _error_response(409, "NotReady",
                                   f"job is {job.state}; artifacts appear on success")
        if name not in job.artifacts:
            raise NotFound(f"artifact {name!r} not found")
        if name == "manifest.json":
            data = engine.store.canonical_manifest_bytes(job_id)
            return Response(content=data, media_type="application/json")
        rel = job.artifacts[name]
        digest = rel.split("/")[-1]
        data = engine.store.get_blob(digest)
        manifest = engine.store.read_manifest(job_id)
        content_type = next((e["content_type"] for e in manifest["artifacts"]
                             if e["name"] == name), "application/octet-stream")
        return Response(content=data, media_type=content_type)

    ui_dir = Path(__file__).resolve().parents[3] / "frontend" / "dist"
    if not ui_dir.exists():
        ui_dir = Path("frontend/dist")
    if ui_dir.exists():
        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
