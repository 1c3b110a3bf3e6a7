"""Generation parameters, conditioning pack, output image, and the port contract."""

from __future__ import annotations

import hashlib
import io
from dataclasses import dataclass, field
from typing import Protocol, runtime_checkable

import numpy as np
from PIL import Image

from ..config import (
    CONDITIONING_SCALE_RANGE,
    DEFAULT_CONDITIONING_SCALE,
    DEFAULT_GUIDANCE_SCALE,
    DEFAULT_STEPS,
    DEFAULT_STRENGTH,
    STRENGTH_RANGE,
)
from ..errors import InvalidParams
from ..vision.canny import EdgeMap
from ..vision.segmentation import SegmentationMap


@dataclass
class GenerationParams:
    """Hyperparameters governing one generation call.

    conditioning_scale (0-5) balances the structural map against the base
    content; strength (0-1) controls overlay visibility.
    """

    guidance_scale: float = DEFAULT_GUIDANCE_SCALE
    conditioning_scale: float = DEFAULT_CONDITIONING_SCALE
    strength: float = DEFAULT_STRENGTH
    seed: int = 0
    steps: int = DEFAULT_STEPS

    def __post_init__(self):
        self.validate()

    def validate(self):
        lo, hi = CONDITIONING_SCALE_RANGE
        if not lo <= self.conditioning_scale <= hi:
            raise InvalidParams(
                f"conditioning_scale {self.conditioning_scale} outside [{lo}, {hi}]",
                field="conditioning_scale")
        lo, hi = STRENGTH_RANGE
        if not lo <= self.strength <= hi:
            raise InvalidParams(f"strength {self.strength} outside [{lo}, {hi}]",
                                field="strength")
        if self.guidance_scale <= 0:
            raise InvalidParams(f"guidance_scale {self.guidance_scale} must be positive",
                                field="guidance_scale")
        if self.steps < 1:
            raise InvalidParams(f"steps {self.steps} must be >= 1", field="steps")
        if self.seed < 0:
            raise InvalidParams("seed must be unsigned", field="seed")

    def to_dict(self) -> dict:
        return {
            "guidance_scale": self.guidance_scale,
            "conditioning_scale": self.conditioning_scale,
            "strength": self.strength,
            "seed": self.seed,
            "steps": self.steps,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "GenerationParams":
        known = {k: data[k] for k in
                 ("guidance_scale", "conditioning_scale", "strength", "seed", "steps")
                 if k in data}
        unknown = set(data) - set(known)
        if unknown:
            raise InvalidParams(f"unknown params: {sorted(unknown)}",
                                field=sorted(unknown)[0])
        try:
            return cls(**known)
        except TypeError as exc:
            raise InvalidParams(str(exc)) from exc


@dataclass
class ConditioningPack:
    """Everything a generator port needs for one image."""

    prompt: str
    edge: EdgeMap
    params: GenerationParams
    canvas: tuple[int, int]
    segmentation: SegmentationMap | None = None

    def __post_init__(self):
        if not self.prompt:
            raise InvalidParams("prompt must be non-empty", field="prompt")
        w, h = self.canvas
        if self.edge.shape != (h, w):
            raise InvalidParams(
                f"edge map {self.edge.shape} does not match canvas {self.canvas}",
                field="edge")

    @property
    def prompt_hash(self) -> str:
        return hashlib.sha256(self.prompt.encode("utf-8")).hexdigest()

    @property
    def edge_hash(self) -> str:
        return hashlib.sha256(self.edge.pixels.tobytes()).hexdigest()


@dataclass
class GeneratedImage:
    """Output pixels plus complete provenance for reproduction."""

    pixels: np.ndarray
    provenance: dict

    def __post_init__(self):
        self.pixels = np.asarray(self.pixels, dtype=np.uint8)
        if self.pixels.ndim != 3 or self.pixels.shape[2] != 3:
            raise ValueError("GeneratedImage needs HxWx3 pixels")
        for key in ("backend_id", "params", "prompt_hash", "input_hashes"):
            if key not in self.provenance:
                raise ValueError(f"provenance missing {key!r}")

    def to_png_bytes(self) -> bytes:
        buf = io.BytesIO()
        Image.fromarray(self.pixels, mode="RGB").save(buf, format="PNG")
        return buf.getvalue()

    def content_hash(self) -> str:
        return hashlib.sha256(self.pixels.tobytes()).hexdigest()


@runtime_checkable
class GeneratorPort(Protocol):
    """Conditioned image generation backend.

    ``max_concurrency`` is the port's admission limit; the orchestrator must
    respect it and the port rejects over-admission with BackendBusy.
    """

    identity: str
    max_concurrency: int
    prompt_limit: int

    def generate(self, pack: ConditioningPack) -> GeneratedImage: ...


def build_provenance(backend_id: str, pack: ConditioningPack,
                     extra_inputs: dict | None = None) -> dict:
    inputs = {"edge": pack.edge_hash}
    if pack.segmentation is not None:
        seg_hash = hashlib.sha256(pack.segmentation.labels.tobytes()).hexdigest()
        inputs["segmentation"] = seg_hash
    if extra_inputs:
        inputs.update(extra_inputs)
    return {
        "backend_id": backend_id,
        "params": pack.params.to_dict(),
        "prompt_hash": pack.prompt_hash,
        "input_hashes": inputs,
        "canvas": list(pack.canvas),
    }
