"""Procedural ground-truth scenes on the local ground plane.

A scene is a pair of rasters over an E-N extent: a class raster (the truth
oracle for end-to-end accuracy) and a luminance raster the renderer samples.
Regions come from thresholded multi-octave value noise: jagged boundaries
that stress the vectorizer the way river ice does.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import zoom

from ..errors import OutOfBoundsError
from ..geodesy import EnuFrame, GeodeticPosition

CLASS_BACKGROUND = 0
CLASS_FROZEN_WATER = 1

ICE_LUM = 205.0
WATER_LUM = 70.0
TEXTURE_AMP = 18.0


def fractal_field(shape, seed, octaves=5, base_cells=4, persistence=0.55) -> np.ndarray:
    """Multi-octave value noise in [0, 1], deterministic per seed."""
    rng = np.random.default_rng(seed)
    h, w = shape
    field = np.zeros(shape, dtype=np.float64)
    amp = 1.0
    total = 0.0
    for k in range(octaves):
        cells = base_cells * (2**k)
        grid = rng.standard_normal((min(cells, h), min(cells, w)))
        up = zoom(grid, (h / grid.shape[0], w / grid.shape[1]), order=1, grid_mode=True, mode="nearest")
        field += amp * up[:h, :w]
        total += amp
        amp *= persistence
    field /= total
    lo, hi = field.min(), field.max()
    return (field - lo) / (hi - lo + 1e-12)


def fractal_mask(shape, seed, coverage=0.5, octaves=6, base_cells=6) -> np.ndarray:
    """Boolean mask with fractal boundaries covering ~coverage of the area."""
    field = fractal_field(shape, seed, octaves=octaves, base_cells=base_cells)
    threshold = np.quantile(field, 1.0 - coverage)
    return field >= threshold


@dataclass(frozen=True)
class SimScene:
    """Ground-truth rasters on the plane u = ground_u of `frame`.

    Cell (row, col) covers east in [e0 + col*res, e0 + (col+1)*res) and
    north in [n0 + row*res, ...); row 0 is the southern edge.
    """

    frame: EnuFrame
    extent_e: float
    extent_n: float
    resolution: float
    class_raster: np.ndarray  # (H, W) uint8
    lum_raster: np.ndarray  # (H, W) float32
    ground_u: float = 0.0
    seed: int = 0

    @property
    def origin_en(self):
        return (-self.extent_e / 2.0, -self.extent_n / 2.0)

    def contains(self, e, n) -> np.ndarray:
        e0, n0 = self.origin_en
        e = np.asarray(e)
        n = np.asarray(n)
        return (
            (e >= e0)
            & (e <= e0 + self.extent_e)
            & (n >= n0)
            & (n <= n0 + self.extent_n)
        )

    def _grid_coords(self, e, n):
        e0, n0 = self.origin_en
        col = (np.asarray(e, dtype=float) - e0) / self.resolution - 0.5
        row = (np.asarray(n, dtype=float) - n0) / self.resolution - 0.5
        return row, col

    def sample_lum(self, e, n) -> np.ndarray:
        """Bilinear luminance sample; raises when outside the scene."""
        if not np.all(self.contains(e, n)):
            raise OutOfBoundsError("footprint leaves the scene extent")
        row, col = self._grid_coords(e, n)
        h, w = self.lum_raster.shape
        r0 = np.clip(np.floor(row).astype(int), 0, h - 2)
        c0 = np.clip(np.floor(col).astype(int), 0, w - 2)
        fr = np.clip(row - r0, 0.0, 1.0)
        fc = np.clip(col - c0, 0.0, 1.0)
        lum = self.lum_raster
        top = lum[r0, c0] * (1 - fc) + lum[r0, c0 + 1] * fc
        bot = lum[r0 + 1, c0] * (1 - fc) + lum[r0 + 1, c0 + 1] * fc
        return top * (1 - fr) + bot * fr

    def sample_class(self, e, n) -> np.ndarray:
        """Nearest-neighbor class sample; raises when outside the scene."""
        if not np.all(self.contains(e, n)):
            raise OutOfBoundsError("footprint leaves the scene extent")
        row, col = self._grid_coords(e, n)
        h, w = self.class_raster.shape
        r = np.clip(np.round(row).astype(int), 0, h - 1)
        c = np.clip(np.round(col).astype(int), 0, w - 1)
        return self.class_raster[r, c]


def generate_scene(
    seed: int,
    extent_e: float = 220.0,
    extent_n: float = 300.0,
    resolution: float = 0.25,
    coverage: float = 0.45,
    feature_cells: int = 5,
    origin: GeodeticPosition | None = None,
    ground_u: float = 0.0,
) -> SimScene:
    """Build a deterministic scene with frozen-water regions over background."""
    if origin is None:
        origin = GeodeticPosition(64.9, -147.6, 120.0)
    h = int(round(extent_n / resolution))
    w = int(round(extent_e / resolution))
    region = fractal_mask((h, w), seed, coverage=coverage, base_cells=feature_cells)
    classes = np.where(region, CLASS_FROZEN_WATER, CLASS_BACKGROUND).astype(np.uint8)
    rng = np.random.default_rng(seed + 1)
    texture = fractal_field((h, w), seed + 2, octaves=6, base_cells=16)
    lum = np.where(region, ICE_LUM, WATER_LUM) + TEXTURE_AMP * (2 * texture - 1)
    lum += rng.normal(0, 2.0, size=(h, w))
    return SimScene(
        frame=EnuFrame(origin),
        extent_e=extent_e,
        extent_n=extent_n,
        resolution=resolution,
        class_raster=classes,
        lum_raster=np.clip(lum, 0, 255).astype(np.float32),
        ground_u=ground_u,
        seed=seed,
    )
