"""Structural conditioning signals and low-rank adaptation."""

from .canny import EdgeMap, canny_edges
from .lora import LoraAdapter, apply_lora, init_adapter, merge_lora
from .segmentation import (
    KMeansStubSegmenter,
    SegmentationMap,
    SegmenterPort,
    segment_image,
)
from .toyfit import ToyFitReport, full_loss_and_grad, loss_and_grads, toy_lora_fit

__all__ = [
    "EdgeMap",
    "KMeansStubSegmenter",
    "LoraAdapter",
    "SegmentationMap",
    "SegmenterPort",
    "ToyFitReport",
    "apply_lora",
    "canny_edges",
    "full_loss_and_grad",
    "init_adapter",
    "loss_and_grads",
    "merge_lora",
    "segment_image",
    "toy_lora_fit",
]
