"""Deterministic synthetic mission generation: scene, trajectory, rendering."""

from .scene import SimScene, fractal_field, generate_scene
from .plan import MissionPlan, generate_trajectory, ground_sample_distance, default_camera
from .render import render_frame, blur_length_px

__all__ = [
    "SimScene",
    "fractal_field",
    "generate_scene",
    "MissionPlan",
    "generate_trajectory",
    "ground_sample_distance",
    "default_camera",
    "render_frame",
    "blur_length_px",
]
