"""Frame rendering: per-pixel ray casts into the scene with a motion-blur model.

Every pixel's ray goes through the full camera model (distortion included),
gets rotated by the pose, and intersects the ground plane. Motion blur is an
along-track box average over the exposure window: the scene is sampled at
several sub-exposure ground offsets and averaged. Truth masks render with
zero blur at mid-exposure.
"""

from __future__ import annotations

import math

import numpy as np

from ..camera import CameraModel, ray_grid
from ..errors import OutOfBoundsError
from ..georef import camera_pose_enu
from ..pose import TimestampedPose
from .scene import SimScene


def blur_length_px(speed_mps: float, exposure_us: float, gsd_m: float) -> float:
    """Ground smear of one exposure in pixels."""
    return speed_mps * exposure_us * 1e-6 / gsd_m


def render_frame(
    scene: SimScene,
    cam: CameraModel,
    pose: TimestampedPose,
    exposure_us: float,
    velocity_enu=(0.0, 0.0, 0.0),
    rng=None,
    noise_sigma: float = 0.0,
):
    """Render (image, truth_mask) for one pose; both (H, W) uint8.

    The pose is the mid-exposure pose; sub-exposure motion is modeled by
    shifting the ground sample points along the velocity vector.
    """
    center, r_enu_cam = camera_pose_enu(cam, pose, scene.frame)
    if center[2] <= scene.ground_u:
        raise OutOfBoundsError("camera is not above the scene ground plane")
    dirs = ray_grid(cam) @ r_enu_cam.T
    du = dirs[..., 2]
    if np.any(du >= -1e-6):
        raise OutOfBoundsError("part of the frame looks at or above the horizon")
    t = (scene.ground_u - center[2]) / du
    e = center[0] + dirs[..., 0] * t
    n = center[1] + dirs[..., 1] * t
    if not np.all(scene.contains(e, n)):
        raise OutOfBoundsError("footprint leaves the scene extent")

    v = np.asarray(velocity_enu, dtype=float)
    gsd = (center[2] - scene.ground_u) / cam.fx
    blur_px = blur_length_px(float(np.hypot(v[0], v[1])), exposure_us, gsd)
    if blur_px <= 1.0:
        taps = [0.0]
    else:
        k = min(9, 2 * int(math.ceil(blur_px)) + 1)
        taps = np.linspace(-0.5, 0.5, k) * exposure_us * 1e-6
    acc = np.zeros(e.shape, dtype=np.float64)
    for tau in taps:
        acc += scene.sample_lum(e + v[0] * tau, n + v[1] * tau)
    img = acc / len(taps)
    if rng is not None and noise_sigma > 0:
        img = img + rng.normal(0, noise_sigma, size=img.shape)
    image = np.clip(np.round(img), 0, 255).astype(np.uint8)
    truth = scene.sample_class(e, n).astype(np.uint8)
    return image, truth


def footprint_ring(cam: CameraModel, pose: TimestampedPose, scene: SimScene, step_px: int = 64):
    """Closed (N, 2) ENU ring of the image border projected onto the ground."""
    w, h = cam.width, cam.height
    xs = list(range(0, w, step_px)) + [w - 1]
    ys = list(range(0, h, step_px)) + [h - 1]
    border = (
        [(x, 0) for x in xs]
        + [(w - 1, y) for y in ys[1:]]
        + [(x, h - 1) for x in reversed(xs[:-1])]
        + [(0, y) for y in reversed(ys[:-1])]
    )
    from ..camera import pixel_to_ray

    center, r_enu_cam = camera_pose_enu(cam, pose, scene.frame)
    dirs = pixel_to_ray(cam, np.asarray(border, dtype=float)) @ r_enu_cam.T
    du = dirs[..., 2]
    if np.any(du >= -1e-6):
        raise OutOfBoundsError("footprint border crosses the horizon")
    t = (scene.ground_u - center[2]) / du
    ring = center[:2] + dirs[..., :2] * t[:, None]
    return np.vstack([ring, ring[:1]])
