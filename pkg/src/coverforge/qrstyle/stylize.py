"""Blend a QR code into generated imagery and verify it still scans."""

from __future__ import annotations

from dataclasses import dataclass, field

import cv2
import numpy as np

from ..captioning.ops import caption_image
from ..captioning.stubs import StubCaptioner
from ..captioning.types import CaptionerPort
from ..config import (
    CANVAS_SIZE,
    EDGE_DENSITY_WARN_THRESHOLD,
    QR_AUTOTUNE_ATTEMPTS,
)
from ..errors import AllCandidatesFiltered
from ..generation.types import ConditioningPack, GeneratedImage, GenerationParams, GeneratorPort
from ..ingest.image import SourceImage
from ..vision.canny import canny_edges
from .encode import QrMatrix, encode_qr
from .render import qr_edge_map

from functools import lru_cache


@lru_cache(maxsize=128)
def _encode_cached(payload: str) -> QrMatrix:
    # encode_qr is pure; callers only read the matrix
    return encode_qr(payload)


@lru_cache(maxsize=128)
def _qr_edge_cached(payload: str, canvas: int):
    # rasterized module grid is read-only downstream
    return qr_edge_map(_encode_cached(payload), canvas)


@dataclass
class QrStyleRequest:
    """Inputs for one stylized-QR job."""

    payload: str
    base_image: SourceImage
    style_text: str
    params: GenerationParams

    def __post_init__(self):
        if not self.payload:
            raise ValueError("payload must be non-empty")


@dataclass
class QrStyleResult:
    """Stylized image plus the decode verdict and the attempt log."""

    image: GeneratedImage
    decoded_ok: bool
    decoded_payload: str | None
    attempts: list[tuple[GenerationParams, bool]]
    warnings: list[str] = field(default_factory=list)
    prompt: str = ""

    def __post_init__(self):
        if self.decoded_ok and self.decoded_payload is None:
            raise ValueError("decoded_ok requires decoded_payload")


def _stretch(gray: np.ndarray) -> np.ndarray:
    lo, hi = int(gray.min()), int(gray.max())
    if hi <= lo:
        return gray
    return (((gray.astype(np.float64) - lo) / (hi - lo)) * 255).astype(np.uint8)


def _decode_attempts(gray: np.ndarray):
    """Fixed (detector, variant) ladder, cheapest first.

    Half-size variants handle the common cases at a quarter of the cost;
    the trailing full-size attempts cover dense symbols whose modules would
    drop below a pixel when downscaled. The slower classic detector only
    runs on the small variants.
    """
    aruco = cv2.QRCodeDetectorAruco() if hasattr(cv2, "QRCodeDetectorAruco") else None
    classic = cv2.QRCodeDetector()
    primary = aruco if aruco is not None else classic

    h, w = gray.shape
    if min(h, w) >= 256:
        half = cv2.resize(gray, (w // 2, h // 2), interpolation=cv2.INTER_AREA)
        yield primary, half
        yield primary, _stretch(half)
        yield classic, half
        yield classic, _stretch(half)
        # full size as a last resort; stretch subsumes the plain image for
        # clean renders and beats it for low-contrast stylized output
        yield primary, _stretch(gray)
    else:
        yield primary, _stretch(gray)
        yield primary, gray
        yield classic, _stretch(gray)
        yield classic, gray


def validate_scan(image: GeneratedImage | np.ndarray, expected: str) -> tuple[bool, str | None]:
    """Decode the image with an independent QR reader.

    Success means the decoded text equals ``expected`` exactly; any decode
    output is returned either way. Failure to decode is (False, None).
    """
    pixels = image.pixels if isinstance(image, GeneratedImage) else np.asarray(image)
    if pixels.ndim == 3:
        gray = cv2.cvtColor(pixels, cv2.COLOR_RGB2GRAY)
    else:
        gray = pixels.astype(np.uint8)

    for detector, variant in _decode_attempts(gray):
        try:
            text, points, _ = detector.detectAndDecode(variant)
        except cv2.error:
            continue
        if text:
            return text == expected, text
    return False, None


_density_cache: dict[str, float] = {}


def edge_density_warning(base_image: SourceImage,
                         threshold: float = EDGE_DENSITY_WARN_THRESHOLD) -> str | None:
    """Busy base images (photos, patterned objects) degrade stylized output."""
    import hashlib

    digest = hashlib.sha256(base_image.pixels.tobytes()).hexdigest()
    if digest not in _density_cache:
        if len(_density_cache) > 256:
            _density_cache.clear()
        _density_cache[digest] = canny_edges(base_image).density
    density = _density_cache[digest]
    if density > threshold:
        return (f"base image edge density {density:.0%} exceeds {threshold:.0%}; "
                "stylized QR quality may be degraded")
    return None


def _style_prompt(request: QrStyleRequest, captioner: CaptionerPort) -> str:
    try:
        caption = caption_image(request.base_image, captioner).text
    except AllCandidatesFiltered as exc:
        caption = exc.best_candidate.text if exc.best_candidate else "a base image"
    style = request.style_text.strip()
    if style:
        return f"{style}. Scannable QR art. Scene: {caption}."
    return f"Scannable QR art. Scene: {caption}."


def _build_pack(request: QrStyleRequest, matrix: QrMatrix, params: GenerationParams,
                captioner: CaptionerPort, canvas: int) -> ConditioningPack:
    return ConditioningPack(
        prompt=_style_prompt(request, captioner),
        edge=_qr_edge_cached(matrix.payload, canvas),
        params=params,
        canvas=(canvas, canvas),
    )


def stylize_qr(request: QrStyleRequest, backend: GeneratorPort,
               captioner: CaptionerPort | None = None,
               canvas: int = CANVAS_SIZE) -> QrStyleResult:
    """Encode the payload, condition generation on the module grid, verify decode."""
    captioner = captioner or StubCaptioner()
    matrix = _encode_cached(request.payload)
    pack = _build_pack(request, matrix, request.params, captioner, canvas)
    image = backend.generate(pack)
    ok, decoded = validate_scan(image, request.payload)

    warnings = []
    warn = edge_density_warning(request.base_image)
    if warn:
        warnings.append(warn)
    return QrStyleResult(image=image, decoded_ok=ok, decoded_payload=decoded,
                         attempts=[(request.params, ok)], warnings=warnings,
                         prompt=pack.prompt)


def _tune_schedule(start: GenerationParams, max_attempts: int) -> list[GenerationParams]:
    """Linear ramp from the requested params to maximum visibility."""
    if max_attempts == 1:
        return [start]
    schedule = []
    for i in range(max_attempts):
        frac = i / (max_attempts - 1)
        schedule.append(GenerationParams(
            guidance_scale=start.guidance_scale,
            conditioning_scale=start.conditioning_scale + (5.0 - start.conditioning_scale) * frac,
            strength=start.strength + (1.0 - start.strength) * frac,
            seed=start.seed,
            steps=start.steps,
        ))
    return schedule


def auto_tune_scan(request: QrStyleRequest, backend: GeneratorPort,
                   max_attempts: int = QR_AUTOTUNE_ATTEMPTS,
                   captioner: CaptionerPort | None = None,
                   canvas: int = CANVAS_SIZE) -> QrStyleResult:
    """Retry with progressively stronger conditioning until the code scans.

    Attempts stop at the first success; parameters are non-decreasing in
    both conditioning_scale and strength across the attempt log.
    """
    if max_attempts < 1:
        raise ValueError("max_attempts must be >= 1")
    captioner = captioner or StubCaptioner()
    matrix = _encode_cached(request.payload)

    warnings = []
    warn = edge_density_warning(request.base_image)
    if warn:
        warnings.append(warn)

    attempts: list[tuple[GenerationParams, bool]] = []
    best: tuple[GeneratedImage, bool, str | None, str] | None = None
    for params in _tune_schedule(request.params, max_attempts):
        pack = _build_pack(request, matrix, params, captioner, canvas)
        image = backend.generate(pack)
        ok, decoded = validate_scan(image, request.payload)
        attempts.append((params, ok))
        if best is None or ok:
            best = (image, ok, decoded, pack.prompt)
        if ok:
            break

    image, ok, decoded, prompt = best
    return QrStyleResult(image=image, decoded_ok=ok, decoded_payload=decoded,
                         attempts=attempts, warnings=warnings, prompt=prompt)
