"""Captioning operations: image caption + filter, window captions, summary, prompt."""

from __future__ import annotations

from ..config import (
    CAPTION_CANDIDATES,
    CAPTION_FILTER_THRESHOLD,
    PROMPT_CHAR_LIMIT,
    SUMMARY_MAX_WORDS,
)
from ..errors import AllCandidatesFiltered, PartialFailure
from ..ingest.audio import AudioWindow
from ..ingest.image import SourceImage
from .types import CAP_AUDIO, CAP_IMAGE, CAP_SUMMARIZE, CaptionRecord, CaptionSet, CaptionerPort


def _require_capability(backend: CaptionerPort, capability: str):
    if capability not in backend.capabilities:
        raise ValueError(f"backend {backend.identity} lacks capability {capability!r}")


def filter_captions(candidates: list[CaptionRecord],
                    threshold: float = CAPTION_FILTER_THRESHOLD) -> list[CaptionRecord]:
    """Drop candidates scoring below the threshold; order preserved, inputs untouched."""
    if not candidates:
        raise ValueError("candidates must be non-empty")
    return [rec for rec in candidates if rec.score >= threshold]


def caption_image(image: SourceImage, backend: CaptionerPort,
                  n_candidates: int = CAPTION_CANDIDATES,
                  threshold: float = CAPTION_FILTER_THRESHOLD) -> CaptionRecord:
    """Best image caption after noise filtering.

    Raises AllCandidatesFiltered (carrying the top unfiltered candidate)
    when the filter removes everything; callers fall back with a warning.
    """
    _require_capability(backend, CAP_IMAGE)
    if n_candidates < 1:
        raise ValueError("n_candidates must be >= 1")
    candidates = backend.image_caption(image, n_candidates)
    if not candidates:
        raise AllCandidatesFiltered("backend produced no candidates")
    kept = filter_captions(candidates, threshold)
    if not kept:
        best = max(candidates, key=lambda rec: rec.score)
        raise AllCandidatesFiltered(
            f"all {len(candidates)} candidates scored below {threshold}",
            best_candidate=best)
    return max(kept, key=lambda rec: rec.score)


def caption_windows(windows: list[AudioWindow],
                    backend: CaptionerPort) -> list[CaptionRecord]:
    """One caption per window, spans copied through, order preserved.

    Raises PartialFailure carrying failed indices plus the successful
    records; the caller applies the >= 50% tolerance policy.
    """
    _require_capability(backend, CAP_AUDIO)
    records: list[CaptionRecord] = []
    failed: list[int] = []
    for idx, window in enumerate(windows):
        try:
            rec = backend.audio_caption(window)
        except Exception:
            failed.append(idx)
            continue
        if rec.span != window.span:
            rec = CaptionRecord(text=rec.text, score=rec.score,
                                source="audio_window", span=window.span)
        records.append(rec)
    if failed:
        raise PartialFailure(f"{len(failed)}/{len(windows)} windows failed",
                             indices=failed, records=records)
    return records


def summarize(window_captions: list[CaptionRecord], backend: CaptionerPort,
              max_words: int = SUMMARY_MAX_WORDS) -> CaptionRecord:
    """Fuse window captions into one summary record of at most ``max_words`` words."""
    _require_capability(backend, CAP_SUMMARIZE)
    if not window_captions:
        raise ValueError("summarize needs at least one window caption")
    text = backend.summarize_texts([rec.text for rec in window_captions], max_words)
    words = text.split()
    if len(words) > max_words:
        text = " ".join(words[:max_words])
    score = min(1.0, sum(rec.score for rec in window_captions) / len(window_captions))
    return CaptionRecord(text=text, score=score, source="summary")


def compose_prompt(captions: CaptionSet, template_id: str = "default",
                   max_chars: int = PROMPT_CHAR_LIMIT) -> str:
    """Deterministic generation prompt from the three text inputs.

    Default template: "<user_style>. Album cover. <summary>. Scene: <image>."
    with an empty user style collapsing the leading segment.
    """
    if template_id != "default":
        raise ValueError(f"unknown template {template_id!r}")
    style = captions.user_style.text.strip()
    summary = captions.music_summary.text.strip()
    scene = captions.image_caption.text.strip()
    if style:
        prompt = f"{style}. Album cover. {summary}. Scene: {scene}."
    else:
        prompt = f"Album cover. {summary}. Scene: {scene}."
    return prompt[:max_chars]
