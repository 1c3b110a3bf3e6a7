"""Deterministic CI generation backend.

Specified behavior, not just "anything deterministic": the output is

    out = round((1 - a) * field + a * ink),   a = (conditioning_scale / 5) * strength

where ``ink`` is black at edge pixels and white elsewhere, and ``field`` is a
smooth seed-keyed color field shifted by a prompt-hash accent. Consequences
tests rely on: a=1 reproduces the edge map exactly (a rendered QR stays
scannable), a=0 suppresses it completely, and edge-overlay contrast grows
monotonically with conditioning_scale.
"""

from __future__ import annotations

import hashlib

import numpy as np
from PIL import Image

from ..errors import BackendUnavailable
from .types import ConditioningPack, GeneratedImage, GeneratorPort, build_provenance

_FIELD_GRID = 8          # low-res lattice upsampled to the canvas
_FIELD_LO, _FIELD_HI = 40, 215


def _color_field(seed: int, prompt_hash: str, canvas: tuple[int, int]) -> np.ndarray:
    w, h = canvas
    rng = np.random.default_rng(seed)
    lattice = rng.integers(_FIELD_LO, _FIELD_HI, size=(_FIELD_GRID, _FIELD_GRID, 3),
                           dtype=np.int64).astype(np.uint8)
    field = np.asarray(
        Image.fromarray(lattice, mode="RGB").resize((w, h), Image.BILINEAR),
        dtype=np.float32)
    accent = np.frombuffer(bytes.fromhex(prompt_hash[:6]), dtype=np.uint8)
    field = field + (accent.astype(np.float32) - 128.0) / 8.0
    return np.clip(field, 0.0, 255.0)


def stub_generate(pack: ConditioningPack) -> GeneratedImage:
    """Pure function of (prompt hash, seed, edge map, params)."""
    params = pack.params
    params.validate()
    alpha = np.float32((params.conditioning_scale / 5.0) * params.strength)
    field = _color_field(params.seed, pack.prompt_hash, pack.canvas)
    ink = np.where(pack.edge.pixels[..., None] > 0, np.float32(0.0), np.float32(255.0))
    out = np.rint((np.float32(1.0) - alpha) * field + alpha * ink).astype(np.uint8)
    return GeneratedImage(pixels=out,
                          provenance=build_provenance("stub-generator/1", pack))


class StubGenerator:
    """GeneratorPort over stub_generate; unbounded concurrency."""

    def __init__(self, available: bool = True):
        self.identity = "stub-generator/1"
        self.max_concurrency = 0      # 0 = unbounded
        self.prompt_limit = 1600
        self._available = available

    def generate(self, pack: ConditioningPack) -> GeneratedImage:
        if not self._available:
            raise BackendUnavailable(f"{self.identity} is offline")
        return stub_generate(pack)
