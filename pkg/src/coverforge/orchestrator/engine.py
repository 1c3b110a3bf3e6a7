"""End-to-end pipeline execution over the job store.

Stage DAG: ingest -> (image caption || window captions -> summary) ->
edges -> compose -> generate -> optional QR stylize -> manifest. Image and
audio captioning run concurrently; the generator port is admission-gated to
its declared max_concurrency.
"""

from __future__ import annotations

import hashlib
import io
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
from scipy.io import wavfile

from ..captioning.ops import caption_image, caption_windows, compose_prompt, summarize
from ..captioning.types import CaptionRecord, CaptionSet, CaptionerPort
from ..config import CANVAS_SIZE, PARTIAL_FAILURE_TOLERANCE, QUEUE_BOUND
from ..errors import (
    AllCandidatesFiltered,
    CoverForgeError,
    NotFound,
    PartialFailure,
    QueueFull,
    TransitionError,
    ValidationFailed,
)
from ..generation.types import ConditioningPack, GeneratedImage, GenerationParams, GeneratorPort
from ..ingest import ModalityBundle
from ..ingest.audio import AudioClip, window_audio
from ..ingest.image import SourceImage
from ..qrstyle.stylize import QrStyleRequest, auto_tune_scan, stylize_qr
from ..vision.canny import canny_edges
from ..vision.segmentation import SegmenterPort, segment_image
from .job import CoverJob, build_manifest, new_job_id
from .store import JobStore, canonical_json


class _Canceled(Exception):
    pass


def derive_seed(*hashes: str) -> int:
    digest = hashlib.sha256("|".join(hashes).encode("ascii")).digest()
    return int.from_bytes(digest[:8], "big") >> 1     # keep it a positive int64


def clip_to_wav_bytes(clip: AudioClip) -> bytes:
    buf = io.BytesIO()
    wavfile.write(buf, clip.sample_rate, clip.samples.astype(np.float32))
    return buf.getvalue()


def wav_bytes_to_clip(raw: bytes) -> AudioClip:
    rate, data = wavfile.read(io.BytesIO(raw))
    return AudioClip(samples=np.asarray(data, dtype=np.float64), sample_rate=int(rate))


class _GatedGenerator:
    """Serializes access to a port according to its declared max_concurrency."""

    def __init__(self, port: GeneratorPort):
        self.port = port
        self.identity = port.identity
        self.max_concurrency = port.max_concurrency
        self.prompt_limit = port.prompt_limit
        self._gate = (threading.Semaphore(port.max_concurrency)
                      if port.max_concurrency >= 1 else None)

    def generate(self, pack: ConditioningPack) -> GeneratedImage:
        if self._gate is None:
            return self.port.generate(pack)
        with self._gate:
            return self.port.generate(pack)


class JobEngine:
    def __init__(self, store: JobStore, captioner: CaptionerPort,
                 generator: GeneratorPort, segmenter: SegmenterPort | None = None,
                 queue_bound: int = QUEUE_BOUND, canvas: int = CANVAS_SIZE):
        self.store = store
        self.captioner = captioner
        self.generator = _GatedGenerator(generator)
        self.segmenter = segmenter
        self.queue_bound = queue_bound
        self.canvas = canvas
        self._workers: list[threading.Thread] = []
        self._stop = threading.Event()

    # --- submission ---

    def _admit(self):
        if self.store.count_pending() >= self.queue_bound:
            raise QueueFull(f"queue bound {self.queue_bound} reached")

    def submit_job(self, bundle: ModalityBundle, params: GenerationParams,
                   options: dict | None = None) -> str:
        options = dict(options or {})
        reasons: dict[str, str] = {}
        if options.get("make_qr") and not options.get("qr_payload"):
            reasons["qr_payload"] = "make_qr requires qr_payload"
        if reasons:
            raise ValidationFailed("job validation failed", reasons=reasons)
        self._admit()

        audio_hash = self.store.put_blob(clip_to_wav_bytes(bundle.audio))
        image_hash = self.store.put_blob(bundle.image.to_png_bytes())
        style_hash = self.store.put_blob(bundle.style_text.encode("utf-8"))
        seed = params.seed or bundle.seed or derive_seed(audio_hash, image_hash, style_hash)
        params = GenerationParams(
            guidance_scale=params.guidance_scale,
            conditioning_scale=params.conditioning_scale,
            strength=params.strength, seed=seed, steps=params.steps)

        job = CoverJob(
            id=new_job_id(), state="queued", kind="cover", seed=seed, params=params,
            bundle_refs={"audio": audio_hash, "image": image_hash, "style": style_hash},
            options=options, created_at=time.time())
        self.store.create_job(job)
        return job.id

    def submit_qr_job(self, image: SourceImage, payload: str, style_text: str,
                      params: GenerationParams, auto_tune: bool = False) -> str:
        reasons: dict[str, str] = {}
        if not payload:
            reasons["payload"] = "payload must be non-empty"
        if len(style_text) > 2000:
            reasons["style"] = "style text too long"
        if reasons:
            raise ValidationFailed("qr job validation failed", reasons=reasons)
        self._admit()

        image_hash = self.store.put_blob(image.to_png_bytes())
        style_hash = self.store.put_blob(style_text.encode("utf-8"))
        payload_hash = self.store.put_blob(payload.encode("utf-8"))
        seed = params.seed or derive_seed(image_hash, style_hash, payload_hash)
        params = GenerationParams(
            guidance_scale=params.guidance_scale,
            conditioning_scale=params.conditioning_scale,
            strength=params.strength, seed=seed, steps=params.steps)

        job = CoverJob(
            id=new_job_id(), state="queued", kind="qr", seed=seed, params=params,
            bundle_refs={"image": image_hash, "style": style_hash,
                         "qr_payload": payload_hash},
            options={"qr_payload": payload, "auto_tune": auto_tune},
            created_at=time.time())
        self.store.create_job(job)
        return job.id

    # --- queries ---

    def get_job(self, job_id: str) -> CoverJob:
        return self.store.get_job(job_id)

    def list_jobs(self, states: set[str] | None = None, limit: int = 50) -> list[CoverJob]:
        return self.store.list_jobs(states, limit)

    def cancel_job(self, job_id: str) -> CoverJob:
        job = self.store.get_job(job_id)
        if job.state == "queued":
            return self.store.transition(job_id, "canceled", expect_from={"queued"})
        if job.state == "running":
            return self.store.request_cancel(job_id)
        return job

    # --- execution ---

    def run_job(self, job_id: str) -> CoverJob:
        """Claim a queued job and drive it to a terminal state."""
        job = self.store.transition(job_id, "running", expect_from={"queued"})
        stage = "ingest"
        try:
            if job.kind == "cover":
                result = self._run_cover(job)
            else:
                result = self._run_qr(job)
            return result
        except _Canceled:
            return self.store.transition(job_id, "canceled")
        except CoverForgeError as exc:
            stage = getattr(exc, "stage", stage)
            return self._fail(job_id, stage, exc.code, exc.message)
        except Exception as exc:                      # defensive: mark, don't crash worker
            stage = getattr(exc, "stage", stage)
            return self._fail(job_id, stage, "InternalError", str(exc))

    def _fail(self, job_id: str, stage: str, code: str, message: str) -> CoverJob:
        def mutate(job: CoverJob):
            job.error = {"stage": stage, "code": code, "message": message}
        return self.store.transition(job_id, "failed", mutate=mutate)

    def _checkpoint(self, job_id: str):
        if self.store.get_job(job_id).cancel_requested:
            raise _Canceled()

    @staticmethod
    def _staged(exc: Exception, stage: str) -> Exception:
        exc.stage = stage
        return exc

    def _timed(self, job: CoverJob, stage: str, fn):
        start = time.perf_counter()
        try:
            return fn()
        except CoverForgeError as exc:
            raise self._staged(exc, stage)
        finally:
            job.timings[stage] = round((time.perf_counter() - start) * 1000.0, 3)

    def _load_inputs(self, job: CoverJob) -> tuple[AudioClip | None, SourceImage, str]:
        clip = None
        if "audio" in job.bundle_refs:
            clip = wav_bytes_to_clip(self.store.get_blob(job.bundle_refs["audio"]))
        image_png = self.store.get_blob(job.bundle_refs["image"])
        from ..ingest.image import normalize_image
        image = normalize_image(image_png, canvas=self.canvas)
        style = self.store.get_blob(job.bundle_refs["style"]).decode("utf-8")
        return clip, image, style

    def _caption_image_stage(self, job: CoverJob, image: SourceImage) -> CaptionRecord:
        try:
            return caption_image(image, self.captioner)
        except AllCandidatesFiltered as exc:
            if exc.best_candidate is None:
                raise
            job.warnings.append("image caption filter removed all candidates; "
                                "using best unfiltered candidate")
            return exc.best_candidate

    def _caption_audio_stage(self, job: CoverJob, windows) -> list[CaptionRecord]:
        try:
            return caption_windows(windows, self.captioner)
        except PartialFailure as exc:
            succeeded = len(exc.records)
            if windows and succeeded / len(windows) >= PARTIAL_FAILURE_TOLERANCE:
                job.warnings.append(
                    f"partial audio captions ({len(exc.indices)}/{len(windows)} failed)")
                return exc.records
            raise

    def _run_cover(self, job: CoverJob) -> CoverJob:
        job_id = job.id

        clip, image, style = self._timed(job, "ingest", lambda: self._load_inputs(job))
        windows = window_audio(clip)
        self._checkpoint(job_id)

        with ThreadPoolExecutor(max_workers=2) as pool:
            image_future = pool.submit(
                self._timed, job, "caption_image",
                lambda: self._caption_image_stage(job, image))
            audio_future = pool.submit(
                self._timed, job, "caption_audio",
                lambda: self._caption_audio_stage(job, windows))
            image_caption = image_future.result()
            window_records = audio_future.result()
        self._checkpoint(job_id)

        music_summary = self._timed(job, "summarize",
                                    lambda: summarize(window_records, self.captioner))

        edge = self._timed(job, "edges", lambda: canny_edges(image))
        seg = None
        if job.options.get("use_segmentation") and self.segmenter is not None:
            seg = self._timed(job, "segmentation",
                              lambda: segment_image(image, self.segmenter))
        self._checkpoint(job_id)

        captions = CaptionSet(
            image_caption=image_caption, window_captions=window_records,
            music_summary=music_summary,
            user_style=CaptionRecord(text=style, score=1.0, source="user"))
        prompt = self._timed(job, "compose", lambda: compose_prompt(
            captions, max_chars=self.generator.prompt_limit))
        job.caption_set = captions.to_dict()

        pack = ConditioningPack(prompt=prompt, edge=edge, params=job.params,
                                canvas=(self.canvas, self.canvas), segmentation=seg)
        cover = self._timed(job, "generate", lambda: self.generator.generate(pack))
        self._checkpoint(job_id)

        qr_section = None
        qr_image = None
        if job.options.get("make_qr"):
            qr_result = self._timed(job, "qr", lambda: self._stylize(
                job, base=SourceImage(pixels=cover.pixels), style=style))
            qr_section, qr_image = self._qr_outputs(job, qr_result)

        return self._finalize(job, prompt, cover, edge, seg, qr_section, qr_image)

    def _run_qr(self, job: CoverJob) -> CoverJob:
        job_id = job.id
        _, image, style = self._timed(job, "ingest", lambda: self._load_inputs(job))
        self._checkpoint(job_id)

        result = self._timed(job, "qr", lambda: self._stylize(job, base=image, style=style))
        qr_section, qr_image = self._qr_outputs(job, result)
        self._checkpoint(job_id)

        return self._finalize(job, result.prompt, result.image, None, None,
                              qr_section, qr_image, alias_cover_as_qr=True)

    def _stylize(self, job: CoverJob, base: SourceImage, style: str):
        request = QrStyleRequest(payload=job.options["qr_payload"], base_image=base,
                                 style_text=style, params=job.params)
        if job.options.get("auto_tune"):
            result = auto_tune_scan(request, self.generator, captioner=self.captioner,
                                    canvas=self.canvas)
        else:
            result = stylize_qr(request, self.generator, captioner=self.captioner,
                                canvas=self.canvas)
        job.warnings.extend(result.warnings)
        return result

    def _qr_outputs(self, job: CoverJob, result) -> tuple[dict, GeneratedImage]:
        section = {
            "payload": job.options["qr_payload"],
            "decoded_ok": result.decoded_ok,
            "decoded_payload": result.decoded_payload,
            "attempts": [
                {"params": params.to_dict(), "decoded_ok": ok}
                for params, ok in result.attempts
            ],
        }
        return section, result.image

    def _finalize(self, job: CoverJob, prompt: str, cover: GeneratedImage,
                  edge, seg, qr_section: dict | None, qr_image: GeneratedImage | None,
                  alias_cover_as_qr: bool = False) -> CoverJob:
        start = time.perf_counter()
        entries: list[dict] = []
        artifacts: dict[str, str] = {}

        def add(name: str, data: bytes, content_type: str):
            digest = self.store.put_blob(data)
            entries.append({"name": name, "hash": digest, "size": len(data),
                            "content_type": content_type})
            artifacts[name] = f"blobs/{digest}"

        add("cover.png", cover.to_png_bytes(), "image/png")
        if edge is not None:
            add("edge.png", edge.to_png_bytes(), "image/png")
        if seg is not None:
            add("seg.png", seg.to_png_bytes(), "image/png")
        if prompt:
            add("prompt.txt", prompt.encode("utf-8"), "text/plain")
        if qr_image is not None and not alias_cover_as_qr:
            add("qr.png", qr_image.to_png_bytes(), "image/png")
        elif alias_cover_as_qr:
            # the stylized QR image is the cover for qr-only jobs
            cover_entry = entries[0]
            entries.append({**cover_entry, "name": "qr.png"})
            artifacts["qr.png"] = artifacts["cover.png"]

        identities = {"captioner": self.captioner.identity,
                      "generator": self.generator.identity}
        if self.segmenter is not None:
            identities["segmenter"] = self.segmenter.identity

        job.timings["finalize"] = round((time.perf_counter() - start) * 1000.0, 3)
        manifest = build_manifest(job, prompt, identities, entries, qr_section)
        manifest_entry = {"name": "manifest.json", "hash": "", "size": 0,
                          "content_type": "application/json"}
        manifest["artifacts"] = entries + [manifest_entry]
        data = self.store.write_manifest(job.id, manifest)
        artifacts["manifest.json"] = f"jobs/{job.id}/manifest.json"

        def mutate(final: CoverJob):
            final.artifacts = artifacts
            final.timings = job.timings
            final.warnings = job.warnings
            final.caption_set = job.caption_set

        return self.store.transition(job.id, "succeeded", mutate=mutate)

    # --- worker pool ---

    def run_next(self) -> bool:
        """Claim and run the oldest queued job; False when none available."""
        queued = self.store.list_jobs(states={"queued"}, limit=10 ** 6)
        for job in reversed(queued):                 # oldest first
            try:
                self.run_job(job.id)
                return True
            except TransitionError:
                continue                             # another worker claimed it
        return False

    def start_workers(self, count: int = 1):
        self._stop.clear()

        def loop():
            while not self._stop.is_set():
                if not self.run_next():
                    self._stop.wait(0.05)

        for _ in range(count):
            thread = threading.Thread(target=loop, daemon=True)
            thread.start()
            self._workers.append(thread)

    def stop_workers(self):
        self._stop.set()
        for thread in self._workers:
            thread.join(timeout=5)
        self._workers.clear()
