"""Text from every modality: image captions, window captions, summary, prompt."""

from .ops import (
    caption_image,
    caption_windows,
    compose_prompt,
    filter_captions,
    summarize,
)
from .stubs import FaultInjectingCaptioner, StubCaptioner, image_hash, window_hash
from .types import (
    CAP_AUDIO,
    CAP_IMAGE,
    CAP_SUMMARIZE,
    CaptionRecord,
    CaptionSet,
    CaptionerPort,
)

__all__ = [
    "CAP_AUDIO",
    "CAP_IMAGE",
    "CAP_SUMMARIZE",
    "CaptionRecord",
    "CaptionSet",
    "CaptionerPort",
    "FaultInjectingCaptioner",
    "StubCaptioner",
    "caption_image",
    "caption_windows",
    "compose_prompt",
    "filter_captions",
    "image_hash",
    "summarize",
    "window_hash",
]
