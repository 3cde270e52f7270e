"""Mission plans and kinematically smooth trajectory generation.

Paths are built from line and arc segments parametrized by arc length, then
sampled at the INS rate with attitude slaved to the velocity heading (level
flight; the camera's depression angle lives in the boresight mount).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..camera import CameraModel, mount_boresight
from ..errors import PlanError
from ..geodesy import EnuFrame, enu_to_geodetic_array
from ..pose import Trajectory

MAX_TURN_RATE_RAD_S = math.radians(60.0)

# Default virtual sensor: reproduces the validation flights' GSD figures
# (1 cm at 30 m AGL, 2 cm at 60 m) with an 8 mm lens.
DEFAULT_WIDTH = 5320
DEFAULT_HEIGHT = 3032
DEFAULT_FOCAL_MM = 8.0
DEFAULT_PITCH_UM = 2.667


def ground_sample_distance(altitude_m: float, focal_mm: float, pixel_pitch_um: float) -> float:
    """Meters of ground per pixel for a nadir view."""
    if altitude_m <= 0 or focal_mm <= 0 or pixel_pitch_um <= 0:
        raise PlanError("GSD inputs must be positive")
    return altitude_m * (pixel_pitch_um * 1e-6) / (focal_mm * 1e-3)


def default_camera(pitch_forward_deg: float = 0.0) -> CameraModel:
    fpx = DEFAULT_FOCAL_MM * 1e-3 / (DEFAULT_PITCH_UM * 1e-6)
    return CameraModel(
        width=DEFAULT_WIDTH,
        height=DEFAULT_HEIGHT,
        fx=fpx,
        fy=fpx,
        cx=DEFAULT_WIDTH / 2.0,
        cy=DEFAULT_HEIGHT / 2.0,
        k1=-0.03,
        k2=0.002,
        boresight=mount_boresight(math.radians(pitch_forward_deg)),
    )


def desk_camera(scale: int = 8, pitch_forward_deg: float = 0.0) -> CameraModel:
    """Reduced-pixel-count camera with the full camera's footprint and FOV.

    Scaling the sensor down by `scale` multiplies the GSD by the same factor
    while keeping the swath, so desk-size simulations exercise identical
    geometry at a fraction of the ray count.
    """
    return default_camera(pitch_forward_deg).scaled(scale)


@dataclass(frozen=True)
class MissionPlan:
    pattern: str  # lawnmower | figure-eight | bank-line | hover
    altitude_m_agl: float = 30.0
    speed_mps: float = 10.0
    overlap: float = 0.3
    camera_fps: float = 4.0
    ins_hz: float = 100.0
    camera_pitch_deg: float = 0.0  # 0 = nadir, positive tips toward forward
    exposure_schedule: tuple = ((0.0, 500.0),)  # (mission_s, exposure_us)
    area_e_m: float = 150.0  # lawnmower survey extent east
    area_n_m: float = 200.0  # lawnmower pass length north
    radius_m: float = 40.0  # figure-eight lobe radius
    laps: int = 1
    leg_m: float = 200.0  # bank-line out-and-back leg
    duration_s: float = 60.0  # hover only
    altitude_span_m: float = 0.0  # figure-eight altitude variation
    t0_gps_s: float = 100_000.0
    seed: int = 0

    def __post_init__(self):
        if not (0.0 <= self.overlap <= 0.9):
            raise PlanError(f"overlap {self.overlap} outside [0, 0.9]")
        if self.camera_fps > self.ins_hz:
            raise PlanError("camera fps cannot exceed the INS rate")
        if self.pattern not in ("lawnmower", "figure-eight", "bank-line", "hover"):
            raise PlanError(f"unknown pattern {self.pattern!r}")
        if self.speed_mps <= 0 and self.pattern != "hover":
            raise PlanError("speed must be positive")

    def exposure_at(self, mission_s: float) -> float:
        exposure = self.exposure_schedule[0][1]
        for start, value in self.exposure_schedule:
            if mission_s >= start:
                exposure = value
        return float(exposure)


class _Line:
    def __init__(self, p0, p1):
        self.p0 = np.asarray(p0, dtype=float)
        self.p1 = np.asarray(p1, dtype=float)
        self.length = float(np.linalg.norm(self.p1 - self.p0))
        self._dir = (self.p1 - self.p0) / max(self.length, 1e-12)

    def point(self, s):
        return self.p0 + self._dir * s

    def tangent(self, s):
        return self._dir


class _Arc:
    def __init__(self, center, radius, ang0, ang1):
        """Angles in radians; traversal from ang0 to ang1 (signed sweep)."""
        self.center = np.asarray(center, dtype=float)
        self.radius = float(radius)
        self.ang0 = float(ang0)
        self.sweep = float(ang1 - ang0)
        self.length = abs(self.sweep) * self.radius

    def point(self, s):
        a = self.ang0 + self.sweep * (s / max(self.length, 1e-12))
        return self.center + self.radius * np.array([math.cos(a), math.sin(a)])

    def tangent(self, s):
        a = self.ang0 + self.sweep * (s / max(self.length, 1e-12))
        t = np.array([-math.sin(a), math.cos(a)])
        return t if self.sweep >= 0 else -t


def _lawnmower_segments(plan: MissionPlan, swath_m: float):
    spacing = swath_m * (1.0 - plan.overlap)
    if spacing <= 0:
        raise PlanError("swath and overlap give non-positive pass spacing")
    n_passes = max(1, int(math.ceil(plan.area_e_m / spacing)) + 1)
    radius = spacing / 2.0
    if plan.speed_mps / radius > MAX_TURN_RATE_RAD_S:
        raise PlanError(
            f"U-turn radius {radius:.1f} m needs a turn rate above "
            f"{math.degrees(MAX_TURN_RATE_RAD_S):.0f} deg/s at {plan.speed_mps} m/s"
        )
    # Passes centered on the survey area.
    e0 = -(n_passes - 1) * spacing / 2.0
    n_lo = -plan.area_n_m / 2.0
    n_hi = plan.area_n_m / 2.0
    segments = []
    for k in range(n_passes):
        e = e0 + k * spacing
        northbound = k % 2 == 0
        if northbound:
            segments.append(_Line([e, n_lo], [e, n_hi]))
            if k + 1 < n_passes:
                # Right-hand U-turn over the north edge.
                segments.append(_Arc([e + radius, n_hi], radius, math.pi, 0.0))
        else:
            segments.append(_Line([e, n_hi], [e, n_lo]))
            if k + 1 < n_passes:
                segments.append(_Arc([e + radius, n_lo], radius, math.pi, 2 * math.pi))
    return segments


def _figure_eight_segments(plan: MissionPlan):
    r = plan.radius_m
    if plan.speed_mps / r > MAX_TURN_RATE_RAD_S:
        raise PlanError(f"figure-eight radius {r} m exceeds the turn-rate bound")
    segments = []
    for _ in range(plan.laps):
        # Right lobe clockwise from the origin, then left lobe counter-clockwise.
        segments.append(_Arc([r, 0.0], r, math.pi, -math.pi))
        segments.append(_Arc([-r, 0.0], r, 0.0, 2 * math.pi))
    return segments


def _bank_line_segments(plan: MissionPlan):
    r = max(plan.speed_mps / MAX_TURN_RATE_RAD_S, 15.0)
    half = plan.leg_m / 2.0
    return [
        _Line([-half, 0.0], [half, 0.0]),
        _Arc([half, r], r, -math.pi / 2, math.pi / 2),
        _Line([half, 2 * r], [-half, 2 * r]),
        _Arc([-half, r], r, math.pi / 2, 3 * math.pi / 2),
    ]


def generate_trajectory(
    plan: MissionPlan,
    frame: EnuFrame,
    swath_m: float | None = None,
    ground_u: float = 0.0,
) -> Trajectory:
    """Sample the planned path at the INS rate.

    `swath_m` (footprint width on the ground) sizes lawnmower pass spacing;
    it comes from the camera and altitude at the mission level.
    """
    dt = 1.0 / plan.ins_hz
    alt_base = ground_u + plan.altitude_m_agl
    if plan.pattern == "hover":
        n = int(round(plan.duration_s * plan.ins_hz))
        ts = plan.t0_gps_s + np.arange(n) * dt
        enu = np.tile([0.0, 0.0, alt_base], (n, 1))
        yaw = np.zeros(n)
        return _assemble(ts, enu, yaw, frame)

    if plan.pattern == "lawnmower":
        if swath_m is None:
            raise PlanError("lawnmower plans need the camera swath width")
        segments = _lawnmower_segments(plan, swath_m)
    elif plan.pattern == "figure-eight":
        segments = _figure_eight_segments(plan)
    else:
        segments = _bank_line_segments(plan)

    total = sum(seg.length for seg in segments)
    n = int(math.floor(total / plan.speed_mps * plan.ins_hz)) + 1
    ts = plan.t0_gps_s + np.arange(n) * dt
    enu = np.zeros((n, 3))
    yaw = np.zeros(n)
    bounds = np.cumsum([seg.length for seg in segments])
    for i in range(n):
        s = min(plan.speed_mps * i * dt, total - 1e-9)
        k = int(np.searchsorted(bounds, s, side="right"))
        k = min(k, len(segments) - 1)
        s_local = s - (bounds[k - 1] if k > 0 else 0.0)
        p = segments[k].point(s_local)
        t = segments[k].tangent(s_local)
        enu[i, :2] = p
        yaw[i] = math.atan2(t[1], t[0])
    if plan.pattern == "figure-eight" and plan.altitude_span_m > 0:
        s_arr = np.minimum(plan.speed_mps * np.arange(n) * dt, total)
        enu[:, 2] = alt_base + 0.5 * plan.altitude_span_m * np.sin(
            2 * math.pi * s_arr / total
        )
    else:
        enu[:, 2] = alt_base
    return _assemble(ts, enu, yaw, frame)


def _assemble(ts, enu, yaw, frame) -> Trajectory:
    lat, lon, alt = enu_to_geodetic_array(enu, frame)
    quats = np.zeros((len(ts), 4))
    for i, y in enumerate(yaw):
        # Body axes in ENU: forward (cos y, sin y, 0), left, up.
        c, s = math.cos(y), math.sin(y)
        mat = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
        from ..quat import UnitQuaternion

        quats[i] = UnitQuaternion.from_matrix(mat).wxyz
    return Trajectory(ts, lat, lon, alt, quats, np.full(len(ts), 3, dtype=int))


def required_scene_extent(plan: MissionPlan, cam: CameraModel, margin_m: float = 10.0):
    """(extent_e, extent_n) in meters a scene needs to contain the mission.

    Accounts for pass overshoot, turn bulges, and the rotating footprint's
    half-diagonal so no rendered ray ever leaves the scene.
    """
    gsd = plan.altitude_m_agl / cam.fx
    half_diag = 0.5 * math.hypot(cam.width * gsd, cam.height * gsd)
    if plan.pattern == "hover":
        return (2 * (half_diag + margin_m), 2 * (half_diag + margin_m))
    if plan.pattern == "figure-eight":
        r = plan.radius_m
        return (
            2 * (2 * r + half_diag + margin_m),
            2 * (r + half_diag + margin_m),
        )
    if plan.pattern == "bank-line":
        r = max(plan.speed_mps / MAX_TURN_RATE_RAD_S, 15.0)
        return (
            plan.leg_m + 2 * (r + half_diag + margin_m),
            2 * r + 2 * (half_diag + margin_m) + 2 * r,
        )
    swath = cam.width * gsd
    spacing = swath * (1.0 - plan.overlap)
    n_passes = max(1, int(math.ceil(plan.area_e_m / spacing)) + 1)
    span_e = (n_passes - 1) * spacing
    extent_e = span_e + 2 * (half_diag + margin_m)
    extent_n = plan.area_n_m + 2 * (spacing / 2.0 + half_diag + margin_m)
    return (extent_e, extent_n)


def apply_ins_noise(traj: Trajectory, frame: EnuFrame, pos_sigma_m=0.02, att_sigma_deg=0.02, seed=0) -> Trajectory:
    """Gaussian white noise on position and attitude (the measured stream)."""
    from ..quat import UnitQuaternion

    rng = np.random.default_rng(seed)
    enu = traj.enu_positions(frame) + rng.normal(0, pos_sigma_m, size=(len(traj), 3))
    lat, lon, alt = enu_to_geodetic_array(enu, frame)
    quats = np.zeros((len(traj), 4))
    for i, pose in enumerate(traj):
        axis = rng.normal(size=3)
        angle = math.radians(rng.normal(0, att_sigma_deg))
        noise_q = UnitQuaternion.from_axis_angle(axis, angle)
        quats[i] = (noise_q @ pose.attitude).wxyz
    return Trajectory(
        traj.times, lat, lon, alt, quats, np.full(len(traj), 3, dtype=int)
    )
