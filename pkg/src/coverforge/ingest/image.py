"""Image decoding and canvas normalization."""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np
from PIL import Image, UnidentifiedImageError

from ..config import CANVAS_SIZE, MIN_IMAGE_DIM
from ..errors import CorruptImage, TooSmall


@dataclass
class SourceImage:
    """H×W×3 uint8 pixels."""

    pixels: np.ndarray

    def __post_init__(self):
        self.pixels = np.asarray(self.pixels, dtype=np.uint8)
        if self.pixels.ndim != 3 or self.pixels.shape[2] != 3:
            raise ValueError(f"SourceImage needs HxWx3 pixels, got {self.pixels.shape}")

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    def to_pil(self) -> Image.Image:
        return Image.fromarray(self.pixels, mode="RGB")

    def to_png_bytes(self) -> bytes:
        buf = io.BytesIO()
        self.to_pil().save(buf, format="PNG")
        return buf.getvalue()


def normalize_image(raw_bytes: bytes, canvas: int = CANVAS_SIZE) -> SourceImage:
    """Decode PNG/JPEG bytes, center-crop to square, resample to the canvas.

    Alpha channels are dropped; inputs under 64 px on either side are
    rejected before any resize.
    """
    if not raw_bytes:
        raise CorruptImage("empty image payload")
    try:
        img = Image.open(io.BytesIO(raw_bytes))
        img.load()
    except (UnidentifiedImageError, OSError, ValueError) as exc:
        raise CorruptImage(f"image decode failed: {exc}") from exc

    if img.format not in ("PNG", "JPEG"):
        raise CorruptImage(f"unsupported image format {img.format!r}; accepted: png, jpeg")
    if img.width < MIN_IMAGE_DIM or img.height < MIN_IMAGE_DIM:
        raise TooSmall(f"image is {img.width}x{img.height}; "
                       f"minimum is {MIN_IMAGE_DIM}x{MIN_IMAGE_DIM}")

    img = img.convert("RGB")
    side = min(img.width, img.height)
    left = (img.width - side) // 2
    top = (img.height - side) // 2
    img = img.crop((left, top, left + side, top + side))
    if side != canvas:
        img = img.resize((canvas, canvas), Image.LANCZOS)
    return SourceImage(pixels=np.asarray(img, dtype=np.uint8))
