"""Calibration solvers: world similarity, boresight rotation, residual time offset.

An SfM export supplies per-image camera poses that are accurate but only
defined up to a similarity transform. Pairing them with INS records at the
image times lets us solve, in order: the similarity mapping SfM coordinates
into the local ENU frame (positions only), the residual time offset between
image and INS timestamps (attitude agreement scan), and the fixed
INS-body-to-camera boresight rotation (chordal rotation averaging).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateGeometryError,
    InsufficientDataError,
    ParseError,
    UnobservableError,
)
from .geodesy import EnuFrame
from .pose import Trajectory, apply_time_offset
from .quat import UnitQuaternion

OFFSET_COARSE_STEP_S = 0.010
OFFSET_REFINE_TOL_S = 0.001
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class SfmPose:
    """One image's pose from the SfM export, joined with its capture time."""

    image_name: str
    t_image: float
    position: np.ndarray  # SfM coordinates
    rotation: UnitQuaternion  # SfM-world -> camera


@dataclass(frozen=True)
class SimilarityTransform:
    """x_out = scale * R @ x_in + translation."""

    scale: float
    rotation: UnitQuaternion
    translation: np.ndarray

    def __post_init__(self):
        if self.scale <= 0:
            raise DegenerateGeometryError("similarity scale must be positive")

    def apply(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        out = self.scale * pts @ self.rotation.to_matrix().T + self.translation
        return out if np.asarray(points).ndim > 1 else out[0]

    def inverse(self) -> "SimilarityTransform":
        r_inv = self.rotation.conjugate()
        return SimilarityTransform(
            scale=1.0 / self.scale,
            rotation=r_inv,
            translation=-r_inv.to_matrix() @ self.translation / self.scale,
        )


@dataclass(frozen=True)
class CalibrationResult:
    similarity: SimilarityTransform
    boresight: UnitQuaternion
    time_offset_s: float
    position_rms_m: float
    attitude_rms_deg: float
    offset_curve: tuple = ()  # (offset_s, residual) samples for reporting
    warnings: tuple = ()

    def to_json_dict(self) -> dict:
        return {
            "similarity": {
                "scale": self.similarity.scale,
                "rotation_wxyz": list(self.similarity.rotation.wxyz),
                "translation_m": list(np.asarray(self.similarity.translation)),
            },
            "boresight_wxyz": list(self.boresight.wxyz),
            "time_offset_s": self.time_offset_s,
            "position_rms_m": self.position_rms_m,
            "attitude_rms_deg": self.attitude_rms_deg,
            "offset_curve": [[o, r] for o, r in self.offset_curve],
            "warnings": list(self.warnings),
        }


def fit_similarity(sfm_positions, enu_positions) -> SimilarityTransform:
    """Least-squares similarity aligning one point cloud onto another.

    Closed form via the cross-covariance SVD with the determinant corrected
    to keep a proper rotation. Degenerate (collinear or tiny) configurations
    raise rather than returning a meaningless fit.
    """
    src = np.asarray(sfm_positions, dtype=float)
    dst = np.asarray(enu_positions, dtype=float)
    if src.shape != dst.shape or src.ndim != 2 or src.shape[1] != 3:
        raise DegenerateGeometryError("point clouds must both be (N, 3)")
    n = src.shape[0]
    if n < 3:
        raise DegenerateGeometryError(f"similarity fit needs >= 3 points, got {n}")
    mu_src = src.mean(axis=0)
    mu_dst = dst.mean(axis=0)
    d_src = src - mu_src
    d_dst = dst - mu_dst
    var_src = (d_src**2).sum() / n
    if var_src < 1e-18:
        raise DegenerateGeometryError("source cloud has no spatial extent")
    cov = d_dst.T @ d_src / n
    u, s, vt = np.linalg.svd(cov)
    # Rank < 2 leaves a rotation axis unconstrained.
    if s[1] < 1e-12 * max(s[0], 1e-300):
        raise DegenerateGeometryError("point configuration is rank deficient (collinear)")
    sign = np.eye(3)
    if np.linalg.det(u) * np.linalg.det(vt) < 0:
        sign[2, 2] = -1.0
    rot = u @ sign @ vt
    scale = float((s * sign.diagonal()).sum() / var_src)
    if scale <= 0:
        raise DegenerateGeometryError("degenerate configuration produced non-positive scale")
    trans = mu_dst - scale * rot @ mu_src
    return SimilarityTransform(
        scale=scale, rotation=UnitQuaternion.from_matrix(rot), translation=trans
    )


@dataclass(frozen=True)
class BoresightFit:
    rotation: UnitQuaternion
    per_image_error_rad: np.ndarray
    rms_error_rad: float


def fit_boresight(cam_rotations, ins_rotations) -> BoresightFit:
    """Optimal fixed rotation B minimizing sum ||R_cam_i - B R_ins_i||_F^2.

    Both lists are world->frame rotations paired per image. Closed form via
    the SVD of sum(R_cam_i @ R_ins_i^T); the chordal metric admits it.
    """
    cams = list(cam_rotations)
    inss = list(ins_rotations)
    if not cams or len(cams) != len(inss):
        raise InsufficientDataError(
            f"boresight fit needs equal non-empty rotation lists, got {len(cams)}/{len(inss)}"
        )
    m = np.zeros((3, 3))
    cam_mats = [q.to_matrix() for q in cams]
    ins_mats = [q.to_matrix() for q in inss]
    for rc, ri in zip(cam_mats, ins_mats):
        m += rc @ ri.T
    u, _, vt = np.linalg.svd(m)
    sign = np.eye(3)
    if np.linalg.det(u) * np.linalg.det(vt) < 0:
        sign[2, 2] = -1.0
    b = u @ sign @ vt
    bq = UnitQuaternion.from_matrix(b)
    errors = np.array(
        [
            _rotation_angle(rc @ (b @ ri).T)
            for rc, ri in zip(cam_mats, ins_mats)
        ]
    )
    rms = float(np.sqrt(np.mean(errors**2)))
    return BoresightFit(rotation=bq, per_image_error_rad=errors, rms_error_rad=rms)


def _rotation_angle(r: np.ndarray) -> float:
    # atan2 of the skew and trace parts: accurate for tiny residual angles
    # where acos((tr-1)/2) loses half the significand.
    s = 0.5 * math.sqrt(
        (r[2, 1] - r[1, 2]) ** 2 + (r[0, 2] - r[2, 0]) ** 2 + (r[1, 0] - r[0, 1]) ** 2
    )
    c = (np.trace(r) - 1.0) / 2.0
    return math.atan2(s, c)


def scan_time_offset(
    traj: Trajectory,
    truth_poses,
    search_window_s: float,
    frame: EnuFrame | None = None,
):
    """Find the lookup offset that best reconciles INS attitude with truth.

    `truth_poses` is a list of (t, world->camera UnitQuaternion). A positive
    returned offset means INS timestamps lag the image clock: the pose for an
    image at time t lives at INS stamp t + offset. Each candidate d is tested
    by shifting the INS stream with apply_time_offset(traj, -d) and
    interpolating at the truth times; the residual is the post-boresight-fit
    RMS angle. A coarse 10 ms grid bounds the minimum, then golden-section
    refines to 1 ms. Returns (offset_s, curve) where curve is a list of
    (offset, residual_rad) samples.
    """
    if search_window_s > 2.0:
        raise DegenerateGeometryError("search window capped at 2 s")
    if frame is None:
        frame = traj.median_frame()
    times = [t for t, _ in truth_poses]
    cam_rots = [q for _, q in truth_poses]

    def residual(offset):
        shifted = apply_time_offset(traj, -offset)
        ins_rots = [
            UnitQuaternion.from_matrix(
                shifted.interpolate(float(t), frame).attitude.to_matrix().T
            )
            for t in times
        ]
        return fit_boresight(cam_rots, ins_rots).rms_error_rad

    n_steps = max(2, int(round(search_window_s / OFFSET_COARSE_STEP_S)))
    grid = np.linspace(-search_window_s, search_window_s, 2 * n_steps + 1)
    curve = [(float(o), residual(float(o))) for o in grid]
    residuals = np.array([r for _, r in curve])
    spread = residuals.max() - residuals.min()
    # A flat curve (hover, or constant-rate single-axis rotation that the
    # boresight fit absorbs exactly) leaves nothing to minimize.
    if spread < 1e-6:
        raise UnobservableError(
            "residual curve is flat; attitude dynamics do not constrain the offset",
            diagnostic={
                "max_residual_rad": float(residuals.max()),
                "spread_rad": float(spread),
            },
        )
    k = int(residuals.argmin())
    lo = float(grid[max(0, k - 1)])
    hi = float(grid[min(len(grid) - 1, k + 1)])
    # Golden-section refinement inside the bracketing coarse cells.
    a, b = lo, hi
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = residual(c), residual(d)
    while (b - a) > OFFSET_REFINE_TOL_S:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = residual(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = residual(d)
        curve.append((float(c), fc))
        curve.append((float(d), fd))
    best = 0.5 * (a + b)
    curve.sort(key=lambda p: p[0])
    return float(best), curve


def calibrate(sfm_poses, traj: Trajectory, frame: EnuFrame, search_window_s=0.5) -> CalibrationResult:
    """Full calibration pipeline from an SfM export and an INS trajectory.

    Interpolates INS positions at the image times, fits the similarity that
    maps SfM positions onto them, carries the SfM rotations into the world
    frame, scans for the residual time offset, and fits the boresight at the
    best offset. One refinement pass re-pairs positions at the corrected
    lookup times; without it a time offset d leaks a rotation bias of about
    (position angular rate * d) through the similarity into the boresight.
    """
    sfm_poses = sorted(sfm_poses, key=lambda p: p.t_image)
    if len(sfm_poses) < 3:
        raise InsufficientDataError(f"calibration needs >= 3 images, got {len(sfm_poses)}")
    warnings = []
    if len(sfm_poses) < 10:
        warnings.append(f"only {len(sfm_poses)} images; >= 10 recommended")
    times = np.array([p.t_image for p in sfm_poses])
    sfm_pos = np.array([p.position for p in sfm_poses])

    offset = 0.0
    similarity = None
    curve = []
    for _ in range(2):
        ins_pos = apply_time_offset(traj, -offset).sample_positions_enu(times, frame)
        similarity = fit_similarity(sfm_pos, ins_pos)
        # Rotations into the world frame: R_world->cam = R_sfm->cam @ R_sim^T.
        r_sim_t = similarity.rotation.to_matrix().T
        truth = [
            (p.t_image, UnitQuaternion.from_matrix(p.rotation.to_matrix() @ r_sim_t))
            for p in sfm_poses
        ]
        offset, curve = scan_time_offset(traj, truth, search_window_s, frame)

    ins_pos = apply_time_offset(traj, -offset).sample_positions_enu(times, frame)
    mapped = similarity.apply(sfm_pos)
    position_rms = float(np.sqrt(np.mean(np.sum((mapped - ins_pos) ** 2, axis=1))))
    shifted = apply_time_offset(traj, -offset)
    ins_rots = [
        UnitQuaternion.from_matrix(shifted.interpolate(t, frame).attitude.to_matrix().T)
        for t, _ in truth
    ]
    fit = fit_boresight([q for _, q in truth], ins_rots)
    attitude_rms_deg = math.degrees(fit.rms_error_rad)
    if position_rms > 1.0:
        warnings.append(f"position RMS {position_rms:.2f} m exceeds 1 m")
    if attitude_rms_deg > 1.0:
        warnings.append(f"attitude RMS {attitude_rms_deg:.2f} deg exceeds 1 deg")
    return CalibrationResult(
        similarity=similarity,
        boresight=fit.rotation,
        time_offset_s=offset,
        position_rms_m=position_rms,
        attitude_rms_deg=attitude_rms_deg,
        offset_curve=tuple((float(o), float(r)) for o, r in curve),
        warnings=tuple(warnings),
    )


# --- file ingest -----------------------------------------------------------


def read_sfm_poses(sfm_path, times_path):
    """Parse the SfM pose export plus its capture-time sidecar CSV.

    Pose lines: `image_name qw qx qy qz tx ty tz` (world->camera rotation,
    position in SfM units). Sidecar: CSV `image_name, t_gps_s`.
    """
    import csv as _csv

    times = {}
    with open(times_path, newline="") as f:
        reader = _csv.reader(f)
        header = next(reader, None)
        if header is None or [h.strip() for h in header][:2] != ["image_name", "t_gps_s"]:
            raise ParseError(f"{times_path}: expected header image_name, t_gps_s")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                times[row[0].strip()] = float(row[1])
            except (ValueError, IndexError) as exc:
                raise ParseError(f"{times_path}:{lineno}: bad time record: {exc}") from exc
    poses = []
    with open(sfm_path) as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 8:
                raise ParseError(
                    f"{sfm_path}:{lineno}: expected 8 fields "
                    f"(image_name qw qx qy qz tx ty tz), got {len(parts)}"
                )
            name = parts[0]
            if name not in times:
                raise ParseError(f"{sfm_path}:{lineno}: no capture time for {name}")
            try:
                qw, qx, qy, qz, tx, ty, tz = (float(v) for v in parts[1:])
            except ValueError as exc:
                raise ParseError(f"{sfm_path}:{lineno}: bad number: {exc}") from exc
            poses.append(
                SfmPose(
                    image_name=name,
                    t_image=times[name],
                    position=np.array([tx, ty, tz]),
                    rotation=UnitQuaternion(qw, qx, qy, qz),
                )
            )
    return poses


def write_sfm_poses(path, poses) -> None:
    with open(path, "w") as f:
        for p in poses:
            q = p.rotation
            f.write(
                f"{p.image_name} {q.w:.12f} {q.x:.12f} {q.y:.12f} {q.z:.12f} "
                f"{p.position[0]:.6f} {p.position[1]:.6f} {p.position[2]:.6f}\n"
            )


def write_calibration_json(path, result: CalibrationResult) -> None:
    with open(path, "w") as f:
        json.dump(result.to_json_dict(), f, indent=2)
