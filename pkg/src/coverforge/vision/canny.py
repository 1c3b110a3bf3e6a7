"""Classic Canny edge detector producing a strictly binary map.

Stages: grayscale, fixed 5×5 Gaussian blur, Sobel gradients, non-maximum
suppression, double threshold on a 0-255 gradient scale, hysteresis. All
stages are vectorized; hysteresis links weak pixels to strong components
via connected-component labeling.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np
from PIL import Image
from scipy import ndimage

from ..config import CANNY_HIGH, CANNY_KERNEL, CANNY_LOW, CANNY_SIGMA
from ..errors import BadThresholds
from ..ingest.image import SourceImage

_SOBEL_X = np.array([[-1, 0, 1], [-2, 0, 2], [-1, 0, 1]], dtype=np.float64)
_SOBEL_Y = np.array([[-1, -2, -1], [0, 0, 0], [1, 2, 1]], dtype=np.float64)


@dataclass
class EdgeMap:
    """Binary H×W mask; 1 marks an edge pixel."""

    pixels: np.ndarray
    low_threshold: float
    high_threshold: float

    def __post_init__(self):
        self.pixels = np.asarray(self.pixels, dtype=np.uint8)
        if self.pixels.ndim != 2:
            raise ValueError("EdgeMap pixels must be 2-D")
        if not np.all((self.pixels == 0) | (self.pixels == 1)):
            raise ValueError("EdgeMap must be strictly binary")
        if not self.low_threshold < self.high_threshold:
            raise BadThresholds(f"low {self.low_threshold} must be < high {self.high_threshold}")

    @property
    def shape(self) -> tuple[int, int]:
        return self.pixels.shape

    @property
    def density(self) -> float:
        return float(self.pixels.mean())

    def to_png_bytes(self) -> bytes:
        buf = io.BytesIO()
        Image.fromarray(self.pixels * np.uint8(255), mode="L").save(buf, format="PNG")
        return buf.getvalue()

    @classmethod
    def from_png_bytes(cls, raw: bytes, low: float = CANNY_LOW,
                       high: float = CANNY_HIGH) -> "EdgeMap":
        arr = np.asarray(Image.open(io.BytesIO(raw)).convert("L"))
        return cls(pixels=(arr >= 128).astype(np.uint8), low_threshold=low,
                   high_threshold=high)


def _gaussian_kernel(size: int, sigma: float) -> np.ndarray:
    half = size // 2
    ax = np.arange(-half, half + 1, dtype=np.float64)
    g = np.exp(-(ax ** 2) / (2 * sigma ** 2))
    kernel = np.outer(g, g)
    return kernel / kernel.sum()


def _nonmax_suppress(mag: np.ndarray, gx: np.ndarray, gy: np.ndarray) -> np.ndarray:
    """Keep pixels that are local maxima along the quantized gradient direction."""
    angle = np.degrees(np.arctan2(gy, gx)) % 180.0

    def shifted(dy: int, dx: int) -> np.ndarray:
        out = np.zeros_like(mag)
        h, w = mag.shape
        ys = slice(max(dy, 0), h + min(dy, 0))
        xs = slice(max(dx, 0), w + min(dx, 0))
        yd = slice(max(-dy, 0), h + min(-dy, 0))
        xd = slice(max(-dx, 0), w + min(-dx, 0))
        out[yd, xd] = mag[ys, xs]
        return out

    horiz = (angle < 22.5) | (angle >= 157.5)
    diag1 = (angle >= 22.5) & (angle < 67.5)      # gradient toward down-right
    vert = (angle >= 67.5) & (angle < 112.5)
    diag2 = (angle >= 112.5) & (angle < 157.5)    # gradient toward down-left

    n1 = np.zeros_like(mag)
    n2 = np.zeros_like(mag)
    for mask, (dy, dx) in ((horiz, (0, 1)), (diag1, (1, 1)),
                           (vert, (1, 0)), (diag2, (1, -1))):
        n1[mask] = shifted(dy, dx)[mask]
        n2[mask] = shifted(-dy, -dx)[mask]

    # strict on one side so a symmetric two-pixel peak thins to a single line
    keep = (mag > n1) & (mag >= n2)
    return np.where(keep, mag, 0.0)


def canny_edges(image: SourceImage, low: float = CANNY_LOW,
                high: float = CANNY_HIGH) -> EdgeMap:
    """Detect edges; thresholds apply to gradient magnitude scaled to 0-255."""
    if not (0 < low < high):
        raise BadThresholds(f"need 0 < low < high, got low={low} high={high}")

    gray = image.pixels.astype(np.float64) @ np.array([0.299, 0.587, 0.114])
    blurred = ndimage.convolve(gray, _gaussian_kernel(CANNY_KERNEL, CANNY_SIGMA),
                               mode="reflect")
    gx = ndimage.convolve(blurred, _SOBEL_X, mode="reflect")
    gy = ndimage.convolve(blurred, _SOBEL_Y, mode="reflect")
    mag = np.hypot(gx, gy)

    # peak below one millionth of a gray level is rounding noise, not signal
    peak = mag.max()
    if peak <= 1e-6:
        return EdgeMap(pixels=np.zeros(gray.shape, dtype=np.uint8),
                       low_threshold=low, high_threshold=high)
    mag = mag * (255.0 / peak)

    suppressed = _nonmax_suppress(mag, gx, gy)
    strong = suppressed >= high
    weak = (suppressed >= low) & ~strong

    labels, _ = ndimage.label(strong | weak, structure=np.ones((3, 3), dtype=int))
    strong_ids = np.unique(labels[strong])
    edges = np.isin(labels, strong_ids[strong_ids > 0])
    return EdgeMap(pixels=edges.astype(np.uint8), low_threshold=low, high_threshold=high)
