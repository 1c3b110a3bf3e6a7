"""HTTP captioning client speaking the shared backend wire protocol.

Requests: POST {base_url}/caption  {task, payload_b64, params}
          POST {base_url}/summarize {task, text, params}
Responses: {text, score}. One URL serves all tasks, mirroring a single
remote notebook runtime.
"""

from __future__ import annotations

import base64
import io

import httpx
import numpy as np
from scipy.io import wavfile

from ..errors import BackendUnavailable, ProtocolError
from ..ingest.audio import AudioWindow
from ..ingest.image import SourceImage
from .types import CAP_AUDIO, CAP_IMAGE, CAP_SUMMARIZE, CaptionRecord


def window_to_wav_b64(window: AudioWindow, sample_rate: int = 16_000) -> str:
    buf = io.BytesIO()
    wavfile.write(buf, sample_rate, np.asarray(window.samples, dtype=np.float32))
    return base64.b64encode(buf.getvalue()).decode("ascii")


class RemoteCaptioner:
    capabilities = frozenset({CAP_IMAGE, CAP_AUDIO, CAP_SUMMARIZE})

    def __init__(self, base_url: str, timeout_s: float = 60.0,
                 auth_token: str | None = None):
        self.base_url = base_url.rstrip("/")
        self.identity = f"remote:{self.base_url}"
        self.timeout_s = timeout_s
        self.auth_token = auth_token

    def _post(self, path: str, body: dict) -> dict:
        headers = {}
        if self.auth_token:
            headers["Authorization"] = f"Bearer {self.auth_token}"
        try:
            resp = httpx.post(f"{self.base_url}{path}", json=body, headers=headers,
                              timeout=self.timeout_s)
        except httpx.TransportError as exc:
            raise BackendUnavailable(f"captioning endpoint unreachable: {exc}") from exc
        if resp.status_code != 200:
            raise ProtocolError(f"{path} returned {resp.status_code}: {resp.text[:200]}")
        try:
            data = resp.json()
            return {"text": data["text"], "score": float(data["score"])}
        except Exception as exc:
            raise ProtocolError(f"malformed caption response: {exc}") from exc

    def image_caption(self, image: SourceImage, n_candidates: int) -> list[CaptionRecord]:
        png_b64 = base64.b64encode(image.to_png_bytes()).decode("ascii")
        out = self._post("/caption", {
            "task": "image_caption",
            "payload_b64": png_b64,
            "params": {"n_candidates": n_candidates},
        })
        # the wire protocol returns the winning candidate only
        return [CaptionRecord(text=out["text"], score=out["score"], source="image")]

    def audio_caption(self, window: AudioWindow) -> CaptionRecord:
        out = self._post("/caption", {
            "task": "audio_caption",
            "payload_b64": window_to_wav_b64(window),
            "params": {"start_s": window.start_s, "end_s": window.end_s},
        })
        return CaptionRecord(text=out["text"], score=out["score"],
                             source="audio_window", span=window.span)

    def summarize_texts(self, texts: list[str], max_words: int) -> str:
        out = self._post("/summarize", {
            "task": "summarize",
            "text": "\n".join(texts),
            "params": {"max_words": max_words},
        })
        return out["text"]
