"""Segmentation backends behind a swappable interface.

The live payload runs a DNN backend out of process; everything downstream
(vectorize -> georegister -> downlink) only sees SegMask, so backends are
interchangeable. The in-tree reference backend is a fixed-threshold
classifier over luminance plus blue chroma: deterministic, hardware-free,
and sufficient to exercise the whole pipeline against the simulator.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ContractError

CLASS_BACKGROUND = 0
CLASS_FROZEN_WATER = 1
CLASS_UNLABELED = 255

DEFAULT_CLASS_TABLE = {
    "background": CLASS_BACKGROUND,
    "frozen_water": CLASS_FROZEN_WATER,
}


@dataclass(frozen=True)
class SegMask:
    """Per-pixel class ids; `scale` maps mask pixels back to full-resolution ones."""

    classes: np.ndarray  # (H, W) uint8
    scale: int = 1
    class_table: dict = field(default_factory=lambda: dict(DEFAULT_CLASS_TABLE))

    @property
    def width(self) -> int:
        return self.classes.shape[1]

    @property
    def height(self) -> int:
        return self.classes.shape[0]

    def present_classes(self):
        vals = np.unique(self.classes)
        return [int(v) for v in vals if v not in (CLASS_BACKGROUND, CLASS_UNLABELED)]


class SegmenterBackend:
    """Interface contract for segmentation backends.

    Implementations must be deterministic for a fixed input and must return
    a full-coverage class map matching the (possibly downsampled) input
    dimensions, with no CLASS_UNLABELED pixels.
    """

    name = "abstract"
    class_table = DEFAULT_CLASS_TABLE
    # (min_w, min_h); inputs smaller than this are a contract error
    min_input = (2, 2)

    def run(self, image: np.ndarray) -> np.ndarray:
        raise NotImplementedError


class ThresholdSegmenter(SegmenterBackend):
    """Reference backend: luminance + blue-chroma threshold at fixed values.

    Frozen water reads bright (snow/ice albedo) and slightly blue against
    water and ground; score = luminance + chroma_weight * (B - (R+G)/2).
    """

    name = "threshold-reference"

    def __init__(self, threshold=140.0, chroma_weight=0.5):
        self.threshold = float(threshold)
        self.chroma_weight = float(chroma_weight)

    def run(self, image: np.ndarray) -> np.ndarray:
        image = np.asarray(image)
        if image.ndim == 3:
            r = image[..., 0].astype(np.float32)
            g = image[..., 1].astype(np.float32)
            b = image[..., 2].astype(np.float32)
            lum = 0.299 * r + 0.587 * g + 0.114 * b
            score = lum + self.chroma_weight * (b - 0.5 * (r + g))
        elif image.ndim == 2:
            score = image.astype(np.float32)
        else:
            raise ContractError(f"expected HxW or HxWx3 image, got shape {image.shape}")
        out = np.where(score >= self.threshold, CLASS_FROZEN_WATER, CLASS_BACKGROUND)
        return out.astype(np.uint8)


def downsample2(image: np.ndarray) -> np.ndarray:
    """2x box downsample (mean of each 2x2 block); odd edges are cropped."""
    image = np.asarray(image)
    h, w = image.shape[:2]
    h2, w2 = h // 2 * 2, w // 2 * 2
    img = image[:h2, :w2].astype(np.float32)
    if img.ndim == 2:
        out = (img[0::2, 0::2] + img[1::2, 0::2] + img[0::2, 1::2] + img[1::2, 1::2]) / 4
    else:
        out = (img[0::2, 0::2] + img[1::2, 0::2] + img[0::2, 1::2] + img[1::2, 1::2]) / 4
    return np.round(out).astype(image.dtype)


def segment(backend: SegmenterBackend, image: np.ndarray, downsample: int = 1) -> SegMask:
    """Run a backend over the image, optionally downsampling by 2 first.

    The downsample factor is recorded in the SegMask so polygon coordinates
    can be rescaled to full-resolution pixel space before georegistration.
    """
    image = np.asarray(image)
    if image.ndim not in (2, 3):
        raise ContractError(f"expected HxW or HxWx3 image, got shape {image.shape}")
    if downsample not in (1, 2):
        raise ContractError("downsample factor must be 1 or 2")
    work = downsample2(image) if downsample == 2 else image
    h, w = work.shape[:2]
    if w < backend.min_input[0] or h < backend.min_input[1]:
        raise ContractError(
            f"input {w}x{h} below backend minimum {backend.min_input}"
        )
    classes = backend.run(work)
    if classes.shape != (h, w):
        raise ContractError(
            f"backend {backend.name} returned {classes.shape}, expected {(h, w)}"
        )
    if np.any(classes == CLASS_UNLABELED):
        raise ContractError(f"backend {backend.name} emitted unlabeled pixels")
    return SegMask(classes=classes, scale=downsample, class_table=dict(backend.class_table))
