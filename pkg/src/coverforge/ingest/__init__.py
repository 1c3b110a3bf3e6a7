"""Decode and normalize user uploads into pipeline domain values."""

from __future__ import annotations

from dataclasses import dataclass, field

from .audio import AudioClip, AudioWindow, decode_audio, window_audio
from .image import SourceImage, normalize_image

MAX_STYLE_TEXT_LEN = 2000


@dataclass
class ModalityBundle:
    """Validated trio of decoded audio, normalized image, and style text."""

    audio: AudioClip
    image: SourceImage
    style_text: str = ""
    seed: int = 0

    def __post_init__(self):
        if self.audio is None or self.image is None:
            raise ValueError("audio and image are both required")
        if len(self.style_text) > MAX_STYLE_TEXT_LEN:
            raise ValueError(f"style_text exceeds {MAX_STYLE_TEXT_LEN} characters")
        if self.seed < 0:
            raise ValueError("seed must be unsigned")


__all__ = [
    "AudioClip",
    "AudioWindow",
    "ModalityBundle",
    "SourceImage",
    "decode_audio",
    "normalize_image",
    "window_audio",
    "MAX_STYLE_TEXT_LEN",
]
