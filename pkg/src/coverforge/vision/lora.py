"""Low-rank adapter algebra over a frozen linear map.

An adapter stores the factor pair (B: d×r, A: r×k) plus a scalar scale; the
effective map is W0 + scale·B@A but apply() never materializes the product,
keeping the cost at O(r·(d+k)) per vector.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ShapeMismatch


@dataclass
class LoraAdapter:
    """Trainable low-rank update attached to a frozen d×k weight matrix."""

    B: np.ndarray
    A: np.ndarray
    r: int
    scale: float = 1.0
    frozen_ref: str = ""

    def __post_init__(self):
        self.B = np.asarray(self.B, dtype=np.float64)
        self.A = np.asarray(self.A, dtype=np.float64)
        if self.r < 1:
            raise ValueError("rank must be >= 1")
        if self.B.ndim != 2 or self.A.ndim != 2:
            raise ShapeMismatch("B and A must be matrices")
        d, rb = self.B.shape
        ra, k = self.A.shape
        if rb != self.r or ra != self.r:
            raise ShapeMismatch(f"factor shapes {self.B.shape}/{self.A.shape} "
                                f"inconsistent with rank {self.r}")
        if self.r >= min(d, k):
            raise ValueError(f"rank {self.r} must be smaller than min(d={d}, k={k})")

    @property
    def d(self) -> int:
        return self.B.shape[0]

    @property
    def k(self) -> int:
        return self.A.shape[1]

    @property
    def param_count(self) -> int:
        return self.r * (self.d + self.k)


def init_adapter(d: int, k: int, r: int, *, scale: float = 1.0, seed: int = 0,
                 frozen_ref: str = "", a_std: float = 0.02) -> LoraAdapter:
    """Fresh adapter: A small random, B zero, so the initial update is exactly 0."""
    rng = np.random.default_rng(seed)
    return LoraAdapter(
        B=np.zeros((d, r)),
        A=rng.normal(0.0, a_std, size=(r, k)),
        r=r,
        scale=scale,
        frozen_ref=frozen_ref,
    )


def _check_shapes(adapter: LoraAdapter, W0: np.ndarray, x: np.ndarray | None = None):
    if W0.ndim != 2:
        raise ShapeMismatch("W0 must be a matrix")
    d, k = W0.shape
    if adapter.d != d or adapter.k != k:
        raise ShapeMismatch(f"adapter is {adapter.d}x{adapter.k}, W0 is {d}x{k}")
    if x is not None and (x.ndim != 1 or x.shape[0] != k):
        raise ShapeMismatch(f"x must be a length-{k} vector, got shape {x.shape}")


def apply_lora(adapter: LoraAdapter, W0: np.ndarray, x: np.ndarray) -> np.ndarray:
    """W0@x + scale·B@(A@x) without forming the dense update."""
    W0 = np.asarray(W0, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    _check_shapes(adapter, W0, x)
    return W0 @ x + adapter.scale * (adapter.B @ (adapter.A @ x))


def merge_lora(adapter: LoraAdapter, W0: np.ndarray) -> np.ndarray:
    """Fold the low-rank update into the base weights: W0 + scale·B@A."""
    W0 = np.asarray(W0, dtype=np.float64)
    _check_shapes(adapter, W0)
    return W0 + adapter.scale * (adapter.B @ adapter.A)
