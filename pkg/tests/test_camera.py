import math

import numpy as np
import pytest

from geostream.camera import CameraModel, pixel_to_ray, project, ray_grid
from geostream.errors import DomainError


def simple_cam(**kw):
    defaults = dict(width=1000, height=800, fx=900.0, fy=900.0, cx=500.0, cy=400.0)
    defaults.update(kw)
    return CameraModel(**defaults)


def test_principal_point_is_optical_axis():
    cam = simple_cam()
    ray = pixel_to_ray(cam, [cam.cx, cam.cy])
    assert np.allclose(ray, [0.0, 0.0, 1.0], atol=1e-12)


def test_forty_five_degree_ray():
    cam = simple_cam()
    ray = pixel_to_ray(cam, [cam.cx + cam.fx, cam.cy])
    assert np.allclose(ray, [1 / math.sqrt(2), 0.0, 1 / math.sqrt(2)], atol=1e-12)


def test_project_unproject_round_trip_with_distortion():
    cam = simple_cam(k1=-0.1, k2=0.01, p1=1e-4, p2=-2e-4)
    rng = np.random.default_rng(5)
    px = rng.uniform([50, 50], [950, 750], size=(200, 2))
    rays = pixel_to_ray(cam, px)
    back = project(cam, rays)
    assert np.max(np.abs(back - px)) < 1e-3


def test_round_trip_strong_distortion():
    cam = simple_cam(k1=-0.3, k2=0.05)
    rng = np.random.default_rng(6)
    px = rng.uniform([100, 100], [900, 700], size=(100, 2))
    back = project(cam, pixel_to_ray(cam, px))
    assert np.max(np.abs(back - px)) < 1e-3


def test_ray_grid_matches_per_pixel():
    cam = simple_cam(width=32, height=24, fx=30.0, fy=30.0, cx=16.0, cy=12.0, k1=-0.05)
    grid = ray_grid(cam)
    assert grid.shape == (24, 32, 3)
    assert np.allclose(grid[5, 7], pixel_to_ray(cam, [7.0, 5.0]), atol=1e-12)


def test_invalid_intrinsics_rejected():
    with pytest.raises(DomainError):
        simple_cam(fx=-1.0)
    with pytest.raises(DomainError):
        simple_cam(cx=2000.0)


def test_project_behind_camera_rejected():
    cam = simple_cam()
    with pytest.raises(DomainError):
        project(cam, [[0.0, 0.0, -1.0]])


def test_scaled_camera_preserves_rays():
    cam = simple_cam(k1=-0.08)
    half = cam.scaled(2)
    # The same physical direction comes out of corresponding pixels.
    ray_full = pixel_to_ray(cam, [400.0, 300.0])
    ray_half = pixel_to_ray(half, [200.0, 150.0])
    assert np.allclose(ray_full, ray_half, atol=1e-9)
