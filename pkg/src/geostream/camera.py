"""Pinhole camera with Brown-Conrady radial-tangential distortion.

Camera frame: +z along the optical axis, +x toward image right, +y toward
image bottom. Pixel coordinates are (x=column, y=row) with (0, 0) at the
center of the top-left pixel. The boresight quaternion maps INS-body vectors
into this camera frame; the lever arm is the camera position offset from the
INS reference point, expressed in the body frame.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, NumericError
from .quat import UnitQuaternion

UNDISTORT_MAX_ITER = 20
UNDISTORT_TOL = 1e-8


@dataclass(frozen=True)
class CameraModel:
    width: int
    height: int
    fx: float
    fy: float
    cx: float
    cy: float
    k1: float = 0.0
    k2: float = 0.0
    p1: float = 0.0
    p2: float = 0.0
    boresight: UnitQuaternion = field(default_factory=UnitQuaternion.identity)
    lever_arm: tuple = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise DomainError("focal lengths must be positive")
        if not (0 < self.cx < self.width) or not (0 < self.cy < self.height):
            raise DomainError("principal point must lie inside the image")

    def scaled(self, factor: float) -> "CameraModel":
        """Equivalent camera for an image downsampled by `factor`."""
        return CameraModel(
            width=int(round(self.width / factor)),
            height=int(round(self.height / factor)),
            fx=self.fx / factor,
            fy=self.fy / factor,
            cx=self.cx / factor,
            cy=self.cy / factor,
            k1=self.k1,
            k2=self.k2,
            p1=self.p1,
            p2=self.p2,
            boresight=self.boresight,
            lever_arm=self.lever_arm,
        )


def distort_normalized(cam: CameraModel, xy: np.ndarray) -> np.ndarray:
    """Apply the distortion model to normalized coordinates (..., 2)."""
    x = xy[..., 0]
    y = xy[..., 1]
    r2 = x * x + y * y
    radial = 1.0 + cam.k1 * r2 + cam.k2 * r2 * r2
    xd = x * radial + 2.0 * cam.p1 * x * y + cam.p2 * (r2 + 2.0 * x * x)
    yd = y * radial + cam.p1 * (r2 + 2.0 * y * y) + 2.0 * cam.p2 * x * y
    return np.stack([xd, yd], axis=-1)


def undistort_normalized(cam: CameraModel, xy_d: np.ndarray) -> np.ndarray:
    """Invert the distortion by fixed-point iteration.

    Raises NumericError with the iteration count when the update fails to
    contract within UNDISTORT_MAX_ITER iterations.
    """
    if cam.k1 == 0 and cam.k2 == 0 and cam.p1 == 0 and cam.p2 == 0:
        return np.array(xy_d, dtype=float, copy=True)
    xy = np.array(xy_d, dtype=float, copy=True)
    for i in range(UNDISTORT_MAX_ITER):
        x = xy[..., 0]
        y = xy[..., 1]
        r2 = x * x + y * y
        radial = 1.0 + cam.k1 * r2 + cam.k2 * r2 * r2
        dx = 2.0 * cam.p1 * x * y + cam.p2 * (r2 + 2.0 * x * x)
        dy = cam.p1 * (r2 + 2.0 * y * y) + 2.0 * cam.p2 * x * y
        new = np.stack(
            [(xy_d[..., 0] - dx) / radial, (xy_d[..., 1] - dy) / radial], axis=-1
        )
        step = np.max(np.abs(new - xy))
        xy = new
        if step < UNDISTORT_TOL:
            return xy
    raise NumericError(
        f"undistortion did not converge (last step {step:.3e})",
        iterations=UNDISTORT_MAX_ITER,
    )


def pixel_to_ray(cam: CameraModel, px) -> np.ndarray:
    """Unit viewing direction in the camera frame for pixel coords (..., 2).

    Pixels slightly outside the image bounds are accepted; ring vertices from
    upstream vectorization may overshoot by sub-pixel amounts.
    """
    px = np.asarray(px, dtype=float)
    xy_d = np.stack(
        [(px[..., 0] - cam.cx) / cam.fx, (px[..., 1] - cam.cy) / cam.fy], axis=-1
    )
    xy = undistort_normalized(cam, xy_d)
    ones = np.ones(xy.shape[:-1])
    dirs = np.stack([xy[..., 0], xy[..., 1], ones], axis=-1)
    return dirs / np.linalg.norm(dirs, axis=-1, keepdims=True)


def project(cam: CameraModel, points_cam) -> np.ndarray:
    """Project camera-frame points (..., 3) to pixel coordinates (..., 2).

    Points must be in front of the camera (z > 0).
    """
    p = np.asarray(points_cam, dtype=float)
    z = p[..., 2]
    if np.any(z <= 0):
        raise DomainError("cannot project points at or behind the camera plane")
    xy = np.stack([p[..., 0] / z, p[..., 1] / z], axis=-1)
    xy_d = distort_normalized(cam, xy)
    return np.stack(
        [xy_d[..., 0] * cam.fx + cam.cx, xy_d[..., 1] * cam.fy + cam.cy], axis=-1
    )


def mount_boresight(pitch_forward_rad: float = 0.0) -> UnitQuaternion:
    """Boresight for a belly mount: nadir at 0, tipping toward body-forward.

    Body frame: +x forward, +y left, +z up. Camera frame: +z optical axis,
    +x image right, +y image down. At pitch 0 the optical axis is straight
    down with image top facing forward.
    """
    import math

    c, s = math.cos(pitch_forward_rad), math.sin(pitch_forward_rad)
    rows = np.array(
        [
            [0.0, -1.0, 0.0],
            [-c, 0.0, -s],
            [s, 0.0, -c],
        ]
    )
    return UnitQuaternion.from_matrix(rows)


_RAY_GRID_CACHE: dict = {}


def ray_grid(cam: CameraModel) -> np.ndarray:
    """Cached (H, W, 3) unit ray directions for every pixel center."""
    key = (
        cam.width, cam.height, cam.fx, cam.fy, cam.cx, cam.cy,
        cam.k1, cam.k2, cam.p1, cam.p2,
    )
    grid = _RAY_GRID_CACHE.get(key)
    if grid is None:
        xs, ys = np.meshgrid(
            np.arange(cam.width, dtype=float), np.arange(cam.height, dtype=float)
        )
        grid = pixel_to_ray(cam, np.stack([xs, ys], axis=-1))
        _RAY_GRID_CACHE[key] = grid
    return grid
