"""Per-pixel segmentation with a deterministic color-clustering stub backend."""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import Protocol, runtime_checkable

import numpy as np
from PIL import Image

from ..config import SEGMENT_CLUSTERS, SEGMENT_SEED
from ..errors import BackendUnavailable
from ..ingest.image import SourceImage

# fixed display palette; label i renders as PALETTE[i % len(PALETTE)]
PALETTE = [
    (230, 57, 70), (69, 123, 157), (42, 157, 143), (244, 162, 97),
    (38, 70, 83), (168, 218, 220), (231, 111, 81), (93, 63, 211),
]


@dataclass
class SegmentationMap:
    """H×W integer class labels plus a display palette."""

    labels: np.ndarray
    palette: dict[int, tuple[int, int, int]]
    model_id: str

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.int32)
        if self.labels.ndim != 2:
            raise ValueError("labels must be 2-D")
        if self.labels.min() < 0:
            raise ValueError("labels must be non-negative")
        for lbl in np.unique(self.labels):
            if int(lbl) not in self.palette:
                raise ValueError(f"label {lbl} missing from palette")

    @property
    def num_classes(self) -> int:
        return len(np.unique(self.labels))

    def to_png_bytes(self) -> bytes:
        h, w = self.labels.shape
        rgb = np.zeros((h, w, 3), dtype=np.uint8)
        for lbl, color in self.palette.items():
            rgb[self.labels == lbl] = color
        buf = io.BytesIO()
        Image.fromarray(rgb, mode="RGB").save(buf, format="PNG")
        return buf.getvalue()


@runtime_checkable
class SegmenterPort(Protocol):
    identity: str

    def segment(self, image: SourceImage) -> SegmentationMap: ...


class KMeansStubSegmenter:
    """Deterministic color k-means; model-free stand-in for a real segmenter.

    Images with at most k distinct colors are clustered exactly (one label
    per color); otherwise plain Lloyd iterations run from a seeded init.
    Labels are compacted so empty clusters never surface.
    """

    def __init__(self, k: int = SEGMENT_CLUSTERS, seed: int = SEGMENT_SEED,
                 max_iter: int = 25, available: bool = True):
        self.k = k
        self.seed = seed
        self.max_iter = max_iter
        self._available = available
        self.identity = f"stub-kmeans/k={k}"

    def segment(self, image: SourceImage) -> SegmentationMap:
        if not self._available:
            raise BackendUnavailable(f"{self.identity} is offline")
        h, w, _ = image.pixels.shape
        flat = image.pixels.reshape(-1, 3).astype(np.float64)

        colors, inverse = np.unique(flat, axis=0, return_inverse=True)
        if len(colors) <= self.k:
            labels = inverse.reshape(h, w).astype(np.int32)
        else:
            labels = self._lloyd(flat).reshape(h, w)

        labels = self._compact(labels)
        palette = {int(i): PALETTE[int(i) % len(PALETTE)] for i in np.unique(labels)}
        return SegmentationMap(labels=labels, palette=palette, model_id=self.identity)

    def _lloyd(self, flat: np.ndarray) -> np.ndarray:
        rng = np.random.default_rng(self.seed)
        centers = flat[rng.choice(len(flat), size=self.k, replace=False)]
        labels = np.zeros(len(flat), dtype=np.int32)
        for _ in range(self.max_iter):
            dists = ((flat[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
            new_labels = dists.argmin(axis=1).astype(np.int32)
            if np.array_equal(new_labels, labels):
                break
            labels = new_labels
            for idx in range(self.k):
                members = flat[labels == idx]
                if len(members):
                    centers[idx] = members.mean(axis=0)
        return labels

    @staticmethod
    def _compact(labels: np.ndarray) -> np.ndarray:
        used = np.unique(labels)
        remap = np.zeros(used.max() + 1, dtype=np.int32)
        remap[used] = np.arange(len(used), dtype=np.int32)
        return remap[labels]


def segment_image(image: SourceImage, backend: SegmenterPort) -> SegmentationMap:
    """Run the backend over a normalized image."""
    return backend.segment(image)
