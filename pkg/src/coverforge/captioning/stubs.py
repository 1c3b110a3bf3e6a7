"""Deterministic, model-free captioning backends for CI and offline demo.

The stub keys every output on a content hash: fixture images hit a small
lookup table, everything else gets a procedurally generated caption from
fixed wordlists. No randomness, no model weights.
"""

from __future__ import annotations

import hashlib

import numpy as np

from ..errors import BackendUnavailable
from ..ingest.audio import AudioWindow
from ..ingest.image import SourceImage
from .types import CAP_AUDIO, CAP_IMAGE, CAP_SUMMARIZE, CaptionRecord

_ADJECTIVES = ["weathered", "sunlit", "neon", "misty", "crowded", "quiet",
               "painted", "frozen"]
_SUBJECTS = ["city skyline", "forest path", "abstract shapes", "mountain lake",
             "vintage interior", "desert road", "ocean horizon", "market street"]
_MOODS = ["mellow", "upbeat", "brooding", "dreamy", "driving", "wistful",
          "triumphant", "hazy"]
_INSTRUMENTS = ["guitar", "piano", "synth pads", "strings", "drums", "bass",
                "organ", "horns"]
_TEXTURES = ["arpeggiated", "sustained", "syncopated", "pulsing", "layered",
             "sparse", "echoing", "distorted"]

# pixel-hash lookup for shipped fixture images (filled at fixture-authoring time)
IMAGE_CAPTION_TABLE: dict[str, tuple[str, float]] = {
    # tests/assets/fruit_bowl.png
    "ec7cbef7e2939f4814b748b55e39bdcde8237ff10d36464d60b001299841c9a8":
        ("a photo of assorted fruit on a table", 0.9),
}


def image_hash(image: SourceImage) -> str:
    return hashlib.sha256(image.pixels.tobytes()).hexdigest()


def window_hash(window: AudioWindow) -> str:
    # quantize to float32 so in-process and wire-serialized windows agree
    return hashlib.sha256(window.samples.astype("<f4").tobytes()).hexdigest()


def _pick(words: list[str], digest: bytes, slot: int) -> str:
    return words[digest[slot] % len(words)]


class StubCaptioner:
    """Lookup/concatenation backend covering all three captioning tasks."""

    capabilities = frozenset({CAP_IMAGE, CAP_AUDIO, CAP_SUMMARIZE})

    def __init__(self, available: bool = True,
                 table: dict[str, tuple[str, float]] | None = None):
        self.identity = "stub-captioner/1"
        self._available = available
        self._table = IMAGE_CAPTION_TABLE if table is None else table

    def _check(self):
        if not self._available:
            raise BackendUnavailable(f"{self.identity} is offline")

    def image_caption(self, image: SourceImage, n_candidates: int) -> list[CaptionRecord]:
        self._check()
        digest = hashlib.sha256(image.pixels.tobytes()).digest()
        key = digest.hex()
        if key in self._table:
            text, score = self._table[key]
        else:
            text = f"a photo of a {_pick(_ADJECTIVES, digest, 0)} {_pick(_SUBJECTS, digest, 1)}"
            score = 0.55 + (digest[2] % 40) / 100.0
        primary = CaptionRecord(text=text, score=round(score, 4), source="image")

        # decoys score below the default filter threshold
        decoys = []
        for i in range(1, n_candidates):
            decoy_text = (f"a picture of {_pick(_SUBJECTS, digest, 2 + i)} "
                          f"near {_pick(_SUBJECTS, digest, 3 + i)}")
            decoy_score = 0.15 + (digest[(4 + i) % 32] % 30) / 100.0
            decoys.append(CaptionRecord(text=decoy_text, score=round(decoy_score, 4),
                                        source="image"))
        return [primary, *decoys][:n_candidates]

    def audio_caption(self, window: AudioWindow) -> CaptionRecord:
        self._check()
        digest = hashlib.sha256(window.samples.astype("<f4").tobytes()).digest()
        text = (f"{_pick(_MOODS, digest, 0)} {_pick(_INSTRUMENTS, digest, 1)} with "
                f"{_pick(_TEXTURES, digest, 2)} {_pick(_INSTRUMENTS, digest, 3)}")
        score = 0.5 + (digest[4] % 45) / 100.0
        return CaptionRecord(text=text, score=round(score, 4), source="audio_window",
                             span=window.span)

    def summarize_texts(self, texts: list[str], max_words: int) -> str:
        self._check()
        deduped: list[str] = []
        for text in texts:
            if text not in deduped:
                deduped.append(text)
        joined = "; ".join(deduped)
        words = joined.split()
        return " ".join(words[:max_words])


class FaultInjectingCaptioner:
    """Wraps a captioner and fails audio captioning at chosen window indices."""

    def __init__(self, inner, fail_indices: set[int]):
        self.inner = inner
        self.capabilities = inner.capabilities
        self.identity = f"{inner.identity}+faults"
        self.fail_indices = set(fail_indices)
        self._calls = 0

    def image_caption(self, image, n_candidates: int):
        return self.inner.image_caption(image, n_candidates)

    def audio_caption(self, window):
        idx = self._calls
        self._calls += 1
        if idx in self.fail_indices:
            raise BackendUnavailable(f"injected fault at window {idx}")
        return self.inner.audio_caption(window)

    def summarize_texts(self, texts, max_words: int):
        return self.inner.summarize_texts(texts, max_words)
