"""Image-quality metrics feeding the operator exposure loop.

Histogram and sharpness travel over the downlink so the operator can judge
exposure and focus remotely; exposure_advice closes the loop with a
deterministic rule for the max-exposure command.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import convolve

from ..errors import DomainError

# 4-neighbor Laplacian; gradient energy is its mean squared response.
_LAPLACIAN = np.array([[0, 1, 0], [1, -4, 1], [0, 1, 0]], dtype=np.float64)

DARK_BINS = 8
DARK_FRACTION_LIMIT = 0.20
MIN_EXPOSURE_US = 50
MAX_EXPOSURE_US = 20_000


def luminance(image: np.ndarray) -> np.ndarray:
    image = np.asarray(image)
    if image.ndim == 3:
        return (
            0.299 * image[..., 0] + 0.587 * image[..., 1] + 0.114 * image[..., 2]
        ).astype(np.float64)
    return image.astype(np.float64)


def histogram(image: np.ndarray) -> np.ndarray:
    """256-bin luminance histogram; bins sum to the pixel count."""
    image = np.asarray(image)
    if image.size == 0:
        raise DomainError("empty image")
    lum = np.clip(np.round(luminance(image)), 0, 255).astype(np.uint8)
    return np.bincount(lum.ravel(), minlength=256).astype(np.int64)


@dataclass(frozen=True)
class SharpnessReport:
    global_score: float
    tile_grid: np.ndarray  # (rows, cols) per-tile scores
    exposure_us: float


def sharpness(image: np.ndarray, tile: int = 128, exposure_us: float = 0.0) -> SharpnessReport:
    """Per-tile gradient energy (mean squared Laplacian); global = median tile.

    The image is padded by edge replication so tiles cover it completely.
    """
    lum = luminance(image)
    if lum.size == 0:
        raise DomainError("empty image")
    if tile <= 0:
        raise DomainError("tile size must be positive")
    response = convolve(lum, _LAPLACIAN, mode="nearest")
    sq = response**2
    h, w = sq.shape
    rows = (h + tile - 1) // tile
    cols = (w + tile - 1) // tile
    pad_r = rows * tile - h
    pad_c = cols * tile - w
    if pad_r or pad_c:
        sq = np.pad(sq, ((0, pad_r), (0, pad_c)), mode="edge")
    grid = sq.reshape(rows, tile, cols, tile).mean(axis=(1, 3))
    return SharpnessReport(
        global_score=float(np.median(grid)),
        tile_grid=grid,
        exposure_us=float(exposure_us),
    )


def exposure_advice(
    hist: np.ndarray,
    report: SharpnessReport,
    current_max_exposure_us: float,
    sharpness_floor: float = 25.0,
) -> dict:
    """Deterministic exposure recommendation.

    Lower the cap when sharpness is below the floor (motion blur) and the
    exposure can still come down; raise it when the histogram piles up dark
    while sharpness is healthy; otherwise hold.
    """
    hist = np.asarray(hist)
    total = int(hist.sum())
    if total <= 0:
        raise DomainError("histogram is empty")
    dark_fraction = float(hist[:DARK_BINS].sum()) / total
    blurred = report.global_score < sharpness_floor
    if blurred and current_max_exposure_us > MIN_EXPOSURE_US:
        suggested = max(MIN_EXPOSURE_US, int(current_max_exposure_us / 2))
        return {
            "action": "lower",
            "suggested_max_exposure_us": suggested,
            "reason": f"sharpness {report.global_score:.1f} below floor {sharpness_floor}",
        }
    if dark_fraction > DARK_FRACTION_LIMIT and not blurred:
        suggested = min(MAX_EXPOSURE_US, int(current_max_exposure_us * 2))
        return {
            "action": "raise",
            "suggested_max_exposure_us": suggested,
            "reason": f"{dark_fraction:.0%} of pixels in the bottom {DARK_BINS} bins",
        }
    return {
        "action": "hold",
        "suggested_max_exposure_us": int(current_max_exposure_us),
        "reason": "exposure healthy",
    }
