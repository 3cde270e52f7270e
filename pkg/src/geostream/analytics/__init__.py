"""Onboard image analytics: segmentation, vectorization, image-quality metrics."""

from .segment import SegMask, SegmenterBackend, ThresholdSegmenter, segment
from .vectorize import VectorizeResult, vectorize, rasterize_class_rings, mask_iou
from .quality import SharpnessReport, exposure_advice, histogram, sharpness

__all__ = [
    "SegMask",
    "SegmenterBackend",
    "ThresholdSegmenter",
    "segment",
    "VectorizeResult",
    "vectorize",
    "rasterize_class_rings",
    "mask_iou",
    "SharpnessReport",
    "histogram",
    "sharpness",
    "exposure_advice",
]
