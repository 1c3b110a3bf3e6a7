"""HTTP client for a remote GPU generation endpoint.

Wire protocol: POST {base_url}/generate with JSON
{prompt, edge_png_b64, seg_png_b64?, guidance_scale, conditioning_scale,
 strength, seed, steps, width, height} -> 200 {image_png_b64, backend_id}
or 503 when the runtime is busy.
"""

from __future__ import annotations

import base64
import io
import threading
from dataclasses import dataclass

import httpx
import numpy as np
from PIL import Image

from ..config import GENERATION_TIMEOUT_S
from ..errors import BackendBusy, BackendUnavailable, GenerationTimeout, ProtocolError
from .types import ConditioningPack, GeneratedImage, build_provenance


@dataclass
class RemoteEndpoint:
    """Opaque public base URL of the GPU-side runtime."""

    base_url: str
    auth_token: str | None = None
    max_concurrency: int = 1

    def __post_init__(self):
        if not (self.base_url.startswith("http://") or self.base_url.startswith("https://")):
            raise ValueError(f"base_url must be absolute, got {self.base_url!r}")
        self.base_url = self.base_url.rstrip("/")
        if self.max_concurrency < 1:
            raise ValueError("max_concurrency must be >= 1")


def pack_to_wire(pack: ConditioningPack) -> dict:
    body = {
        "prompt": pack.prompt,
        "edge_png_b64": base64.b64encode(pack.edge.to_png_bytes()).decode("ascii"),
        "guidance_scale": pack.params.guidance_scale,
        "conditioning_scale": pack.params.conditioning_scale,
        "strength": pack.params.strength,
        "seed": pack.params.seed,
        "steps": pack.params.steps,
        "width": pack.canvas[0],
        "height": pack.canvas[1],
    }
    if pack.segmentation is not None:
        body["seg_png_b64"] = base64.b64encode(
            pack.segmentation.to_png_bytes()).decode("ascii")
    return body


def remote_generate(pack: ConditioningPack, endpoint: RemoteEndpoint,
                    timeout_s: float = GENERATION_TIMEOUT_S) -> GeneratedImage:
    """Serialize the pack, call the remote runtime, decode the result."""
    pack.params.validate()
    headers = {}
    if endpoint.auth_token:
        headers["Authorization"] = f"Bearer {endpoint.auth_token}"
    try:
        resp = httpx.post(f"{endpoint.base_url}/generate", json=pack_to_wire(pack),
                          headers=headers, timeout=timeout_s)
    except httpx.TimeoutException as exc:
        raise GenerationTimeout(f"remote generate timed out after {timeout_s}s") from exc
    except httpx.TransportError as exc:
        raise BackendUnavailable(f"remote endpoint unreachable: {exc}") from exc

    if resp.status_code == 503:
        raise BackendBusy("remote runtime busy")
    if resp.status_code != 200:
        raise ProtocolError(f"remote generate returned {resp.status_code}: {resp.text[:200]}")
    try:
        body = resp.json()
        png = base64.b64decode(body["image_png_b64"])
        backend_id = body["backend_id"]
        pixels = np.asarray(Image.open(io.BytesIO(png)).convert("RGB"), dtype=np.uint8)
    except Exception as exc:
        raise ProtocolError(f"malformed remote response: {exc}") from exc
    return GeneratedImage(pixels=pixels, provenance=build_provenance(backend_id, pack))


class RemoteGenerator:
    """GeneratorPort over remote_generate with a local admission gate.

    One retry on BackendUnavailable; over-admission beyond the endpoint's
    max_concurrency is rejected immediately with BackendBusy.
    """

    def __init__(self, endpoint: RemoteEndpoint, timeout_s: float = GENERATION_TIMEOUT_S):
        self.endpoint = endpoint
        self.identity = f"remote:{endpoint.base_url}"
        self.max_concurrency = endpoint.max_concurrency
        self.prompt_limit = 1600
        self.timeout_s = timeout_s
        self._gate = threading.Semaphore(endpoint.max_concurrency)

    def generate(self, pack: ConditioningPack) -> GeneratedImage:
        if not self._gate.acquire(blocking=False):
            raise BackendBusy(f"{self.identity} at max_concurrency "
                              f"{self.max_concurrency}")
        try:
            try:
                return remote_generate(pack, self.endpoint, self.timeout_s)
            except BackendUnavailable:
                return remote_generate(pack, self.endpoint, self.timeout_s)
        finally:
            self._gate.release()
