"""In-process mock of the GPU-side runtime, backed by the deterministic stubs.

Implements the shared wire protocol (POST /generate, /caption, /summarize)
so client contract tests run without a real notebook runtime. Responses are
byte-identical to the in-process stubs for identical requests. A
max_concurrency admission gate returns 503 on over-admission; the
test-only ``test_delay_ms`` request field holds the gate open so
concurrency tests are deterministic.
"""

from __future__ import annotations

import base64
import io
import threading
import time

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from ..captioning.ops import caption_image, filter_captions
from ..captioning.stubs import StubCaptioner
from ..config import CAPTION_CANDIDATES, CAPTION_FILTER_THRESHOLD, SUMMARY_MAX_WORDS
from ..errors import AllCandidatesFiltered
from ..generation.stub import stub_generate
from ..generation.types import ConditioningPack, GenerationParams
from ..ingest.audio import AudioWindow
from ..ingest.image import SourceImage
from ..vision.canny import EdgeMap

MOCK_BACKEND_ID = "mock-runtime/1"


def _error(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(status_code=status,
                        content={"code": code, "message": message})


def build_mock_app(max_concurrency: int = 1) -> FastAPI:
    app = FastAPI(title="coverforge mock runtime")
    gate = threading.Semaphore(max_concurrency)
    captioner = StubCaptioner()

    @app.get("/health")
    def health():
        return {"status": "ok", "backend_id": MOCK_BACKEND_ID}

    @app.post("/generate")
    async def generate(request: Request):
        try:
            body = await request.json()
        except Exception:
            return _error(400, "ProtocolError", "request body is not valid JSON")
        if not gate.acquire(blocking=False):
            return _error(503, "BackendBusy", "runtime at max concurrency")
        try:
            delay_ms = body.get("test_delay_ms", 0)
            if delay_ms:
                # async so the event loop can admit (and reject) rivals meanwhile
                import asyncio
                await asyncio.sleep(delay_ms / 1000.0)
            try:
                edge_png = base64.b64decode(body["edge_png_b64"])
                edge = EdgeMap.from_png_bytes(edge_png)
                params = GenerationParams(
                    guidance_scale=body["guidance_scale"],
                    conditioning_scale=body["conditioning_scale"],
                    strength=body["strength"],
                    seed=body["seed"],
                    steps=body["steps"],
                )
                pack = ConditioningPack(prompt=body["prompt"], edge=edge, params=params,
                                        canvas=(body["width"], body["height"]))
            except Exception as exc:
                return _error(400, "ProtocolError", f"bad generate request: {exc}")
            image = stub_generate(pack)
            return {"image_png_b64": base64.b64encode(image.to_png_bytes()).decode("ascii"),
                    "backend_id": MOCK_BACKEND_ID}
        finally:
            gate.release()

    @app.post("/caption")
    async def caption(request: Request):
        try:
            body = await request.json()
        except Exception:
            return _error(400, "ProtocolError", "request body is not valid JSON")
        task = body.get("task")
        try:
            if task == "image_caption":
                from PIL import Image
                raw = base64.b64decode(body["payload_b64"])
                pixels = np.asarray(Image.open(io.BytesIO(raw)).convert("RGB"),
                                    dtype=np.uint8)
                image = SourceImage(pixels=pixels)
                n = int(body.get("params", {}).get("n_candidates", CAPTION_CANDIDATES))
                try:
                    record = caption_image(image, captioner, n_candidates=n,
                                           threshold=CAPTION_FILTER_THRESHOLD)
                except AllCandidatesFiltered as exc:
                    record = exc.best_candidate
                return {"text": record.text, "score": record.score}
            if task == "audio_caption":
                from scipy.io import wavfile
                raw = base64.b64decode(body["payload_b64"])
                rate, data = wavfile.read(io.BytesIO(raw))
                params = body.get("params", {})
                window = AudioWindow(start_s=params.get("start_s", 0.0),
                                     end_s=params.get("end_s", len(data) / rate),
                                     samples=np.asarray(data, dtype=np.float64))
                record = captioner.audio_caption(window)
                return {"text": record.text, "score": record.score}
        except Exception as exc:
            return _error(400, "ProtocolError", f"bad caption request: {exc}")
        return _error(400, "ProtocolError", f"unknown caption task {task!r}")

    @app.post("/summarize")
    async def summarize_route(request: Request):
        try:
            body = await request.json()
        except Exception:
            return _error(400, "ProtocolError", "request body is not valid JSON")
        try:
            texts = body["text"].split("\n")
            max_words = int(body.get("params", {}).get("max_words", SUMMARY_MAX_WORDS))
            text = captioner.summarize_texts(texts, max_words)
            return {"text": text, "score": 1.0}
        except Exception as exc:
            return _error(400, "ProtocolError", f"bad summarize request: {exc}")

    return app


class MockRuntimeServer:
    """Threaded uvicorn wrapper for contract tests and `coverforge serve-mock`."""

    def __init__(self, port: int = 0, max_concurrency: int = 1):
        import uvicorn

        self.app = build_mock_app(max_concurrency)
        config = uvicorn.Config(self.app, host="127.0.0.1", port=port,
                                log_level="error")
        self.server = uvicorn.Server(config)
        self._thread: threading.Thread | None = None

    @property
    def port(self) -> int:
        servers = getattr(self.server, "servers", [])
        for srv in servers:
            for sock in srv.sockets:
                return sock.getsockname()[1]
        raise RuntimeError("server not started")

    @property
    def base_url(self) -> str:
        return f"http://127.0.0.1:{self.port}"

    def start(self, timeout_s: float = 10.0):
        self._thread = threading.Thread(target=self.server.run, daemon=True)
        self._thread.start()
        deadline = time.time() + timeout_s
        while not self.server.started:
            if time.time() > deadline:
                raise RuntimeError("mock runtime failed to start")
            time.sleep(0.01)
        return self

    def stop(self):
        self.server.should_exit = True
        if self._thread:
            self._thread.join(timeout=5)


def serve_mock(port: int, max_concurrency: int = 1):
    """Run the mock runtime in the foreground (CLI entry)."""
    import uvicorn

    app = build_mock_app(max_concurrency)
    uvicorn.run(app, host="127.0.0.1", port=port, log_level="info")
