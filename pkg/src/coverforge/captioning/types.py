"""Caption domain records and the backend port contract."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Protocol, runtime_checkable

CAPTION_SOURCES = ("image", "audio_window", "summary", "user")

# capability names a backend may declare
CAP_IMAGE = "image_caption"
CAP_AUDIO = "audio_caption"
CAP_SUMMARIZE = "summarize"


@dataclass
class CaptionRecord:
    """A single caption with its relevance score and provenance."""

    text: str
    score: float
    source: str
    span: tuple[float, float] | None = None

    def __post_init__(self):
        # user style is the one source allowed to be empty
        if not self.text.strip() and self.source != "user":
            raise ValueError("caption text must be non-empty")
        self.text = self.text.strip()
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score {self.score} outside [0, 1]")
        if self.source not in CAPTION_SOURCES:
            raise ValueError(f"unknown caption source {self.source!r}")
        if (self.span is not None) != (self.source == "audio_window"):
            raise ValueError("span present iff source == audio_window")

    def to_dict(self) -> dict:
        return {"text": self.text, "score": self.score, "source": self.source,
                "span": list(self.span) if self.span else None}


@dataclass
class CaptionSet:
    """All text derived for one job: image, per-window, summary, user style."""

    image_caption: CaptionRecord
    window_captions: list[CaptionRecord]
    music_summary: CaptionRecord
    user_style: CaptionRecord

    def __post_init__(self):
        spans = [rec.span for rec in self.window_captions]
        if any(s is None for s in spans):
            raise ValueError("window captions must carry spans")
        if spans != sorted(spans, key=lambda s: s[0]):
            raise ValueError("window captions must be ordered by span start")
        if self.music_summary.source != "summary":
            raise ValueError("music_summary must have source == summary")

    def to_dict(self) -> dict:
        return {
            "image_caption": self.image_caption.to_dict(),
            "window_captions": [rec.to_dict() for rec in self.window_captions],
            "music_summary": self.music_summary.to_dict(),
            "user_style": self.user_style.to_dict(),
        }


@runtime_checkable
class CaptionerPort(Protocol):
    """Pluggable captioning backend.

    ``capabilities`` lists which of the three tasks the backend accepts;
    invoking one outside the set is a contract violation the ops layer
    rejects up front.
    """

    capabilities: frozenset[str]
    identity: str

    def image_caption(self, image, n_candidates: int) -> list[CaptionRecord]: ...

    def audio_caption(self, window) -> CaptionRecord: ...

    def summarize_texts(self, texts: list[str], max_words: int) -> str: ...
