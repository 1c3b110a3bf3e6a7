"""Rasterize a QR module grid onto the square canvas."""

from __future__ import annotations

import numpy as np

from ..config import CANVAS_SIZE, QR_QUIET_ZONE
from ..vision.canny import EdgeMap
from .encode import QrMatrix


def render_qr(matrix: QrMatrix, canvas: int = CANVAS_SIZE,
              quiet_zone: int = QR_QUIET_ZONE) -> np.ndarray:
    """White canvas with dark modules at 0; module size fills the canvas."""
    n = matrix.size + 2 * quiet_zone
    module_px = canvas // n
    if module_px < 1:
        raise ValueError(f"canvas {canvas} too small for {n} modules")
    offset = (canvas - module_px * n) // 2

    out = np.full((canvas, canvas), 255, dtype=np.uint8)
    grid = np.kron(matrix.modules, np.ones((module_px, module_px), dtype=np.uint8))
    start = offset + quiet_zone * module_px
    stop = start + grid.shape[0]
    out[start:stop, start:stop] = np.where(grid > 0, 0, 255).astype(np.uint8)
    return out


def qr_edge_map(matrix: QrMatrix, canvas: int = CANVAS_SIZE,
                quiet_zone: int = QR_QUIET_ZONE) -> EdgeMap:
    """QR module grid as a conditioning edge channel (1 = dark module)."""
    raster = render_qr(matrix, canvas, quiet_zone)
    return EdgeMap(pixels=(raster == 0).astype(np.uint8),
                   low_threshold=1.0, high_threshold=2.0)


def qr_to_rgb(matrix: QrMatrix, canvas: int = CANVAS_SIZE,
              quiet_zone: int = QR_QUIET_ZONE) -> np.ndarray:
    gray = render_qr(matrix, canvas, quiet_zone)
    return np.repeat(gray[..., None], 3, axis=2)
