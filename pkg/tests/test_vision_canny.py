"""Edge detector behavior against geometric oracles."""

import numpy as np
import pytest
from scipy import ndimage

from coverforge.errors import BadThresholds
from coverforge.ingest.image import SourceImage
from coverforge.vision import EdgeMap, canny_edges


def square_image(size=32, square=16, offset=None):
    px = np.zeros((size, size, 3), dtype=np.uint8)
    lo = (size - square) // 2 if offset is None else offset
    px[lo[0] if isinstance(lo, tuple) else lo:
       (lo[0] if isinstance(lo, tuple) else lo) + square,
       (lo[1] if isinstance(lo, tuple) else lo):
       (lo[1] if isinstance(lo, tuple) else lo) + square] = 255
    return px


def ideal_ring(size, square, top, left):
    """Outermost white pixels of the square: the geometric edge contour."""
    ring = np.zeros((size, size), dtype=bool)
    bottom, right = top + square - 1, left + square - 1
    ring[top, left:right + 1] = True
    ring[bottom, left:right + 1] = True
    ring[top:bottom + 1, left] = True
    ring[top:bottom + 1, right] = True
    return ring


def ring_metrics(edges: np.ndarray, ring: np.ndarray):
    """(recall, spurious_fraction) under a 1 px chebyshev tolerance."""
    kernel = np.ones((3, 3), dtype=bool)
    ring_dilated = ndimage.binary_dilation(ring, kernel)
    edges_dilated = ndimage.binary_dilation(edges.astype(bool), kernel)
    recall = (ring & edges_dilated).sum() / ring.sum()
    spurious = (edges.astype(bool) & ~ring_dilated).sum() / max(edges.sum(), 1)
    return recall, spurious


class TestCanny:
    def test_constant_image_has_zero_edges(self):
        img = SourceImage(pixels=np.full((64, 64, 3), 128, dtype=np.uint8))
        assert canny_edges(img).pixels.sum() == 0

    def test_constant_black_and_white(self):
        for value in (0, 255):
            img = SourceImage(pixels=np.full((48, 48, 3), value, dtype=np.uint8))
            assert canny_edges(img).pixels.sum() == 0

    def test_square_boundary_ring(self):
        px = square_image(32, 16)
        edges = canny_edges(SourceImage(pixels=px)).pixels
        ring = ideal_ring(32, 16, 8, 8)
        recall, spurious = ring_metrics(edges, ring)
        assert recall >= 0.95
        assert spurious <= 0.05

    def test_bad_thresholds(self):
        img = SourceImage(pixels=square_image(32, 16))
        with pytest.raises(BadThresholds):
            canny_edges(img, low=100, high=50)
        with pytest.raises(BadThresholds):
            canny_edges(img, low=0, high=50)

    def test_output_strictly_binary(self):
        rng = np.random.default_rng(8)
        for _ in range(5):
            px = rng.integers(0, 255, size=(48, 48, 3)).astype(np.uint8)
            edges = canny_edges(SourceImage(pixels=px)).pixels
            assert set(np.unique(edges)) <= {0, 1}

    def test_translation_covariance(self):
        rng = np.random.default_rng(17)
        size, square = 96, 20
        base_top, base_left = 30, 30
        base = np.zeros((size, size, 3), dtype=np.uint8)
        base[base_top:base_top + square, base_left:base_left + square] = 255
        base_edges = canny_edges(SourceImage(pixels=base)).pixels
        for _ in range(20):
            dy, dx = int(rng.integers(-12, 13)), int(rng.integers(-12, 13))
            shifted = np.roll(np.roll(base, dy, axis=0), dx, axis=1)
            shifted_edges = canny_edges(SourceImage(pixels=shifted)).pixels
            expected = np.roll(np.roll(base_edges, dy, axis=0), dx, axis=1)
            assert np.array_equal(shifted_edges, expected), (dy, dx)


class TestEdgeMap:
    def test_rejects_nonbinary(self):
        with pytest.raises(ValueError):
            EdgeMap(pixels=np.full((4, 4), 7, dtype=np.uint8),
                    low_threshold=1, high_threshold=2)

    def test_rejects_bad_threshold_order(self):
        with pytest.raises(BadThresholds):
            EdgeMap(pixels=np.zeros((4, 4), dtype=np.uint8),
                    low_threshold=5, high_threshold=5)

    def test_png_round_trip(self):
        px = np.zeros((16, 16), dtype=np.uint8)
        px[4:12, 4:12] = 1
        em = EdgeMap(pixels=px, low_threshold=50, high_threshold=150)
        back = EdgeMap.from_png_bytes(em.to_png_bytes())
        assert np.array_equal(back.pixels, px)

    def test_density(self):
        px = np.zeros((10, 10), dtype=np.uint8)
        px[0] = 1
        em = EdgeMap(pixels=px, low_threshold=1, high_threshold=2)
        assert em.density == 0.1
