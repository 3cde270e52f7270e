"""Timestamped INS poses, trajectories, and pose interpolation.

A trajectory stores its sample times as a base array plus an accumulated
time offset so that shifting by +d then -d restores the original times
bit-for-bit (float offsets cancel exactly; re-adding a rounded sum would
not).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, RangeError, ValidityError
from .geodesy import (
    EnuFrame,
    GeodeticPosition,
    enu_to_geodetic_array,
    geodetic_to_enu_array,
)
from .quat import UnitQuaternion, slerp

STATUS_FIX_VALID = 0x1
STATUS_ATTITUDE_VALID = 0x2
STATUS_ALL_VALID = STATUS_FIX_VALID | STATUS_ATTITUDE_VALID

# How far pose lookups may extrapolate beyond the trajectory ends, holding
# constant velocity and attitude rate (five INS periods at 100 Hz).
EXTRAPOLATION_WINDOW_S = 0.05

INS_CSV_HEADER = ["t_gps_s", "lat_deg", "lon_deg", "alt_m", "qw", "qx", "qy", "qz", "status_hex"]


@dataclass(frozen=True)
class TimestampedPose:
    """One INS record: GPS-time instant, geodetic position, body->ENU attitude."""

    t: float
    position: GeodeticPosition
    attitude: UnitQuaternion
    status: int = STATUS_ALL_VALID


class Trajectory:
    """An ordered sequence of TimestampedPose records with fast interpolation."""

    def __init__(self, times, lats, lons, alts, quats, statuses, time_offset=0.0):
        self._times = np.asarray(times, dtype=float)
        if self._times.size == 0:
            raise DomainError("trajectory must have at least one pose")
        if np.any(np.diff(self._times) <= 0):
            raise DomainError("trajectory times must be strictly increasing")
        self._lats = np.asarray(lats, dtype=float)
        self._lons = np.asarray(lons, dtype=float)
        self._alts = np.asarray(alts, dtype=float)
        self._quats = np.asarray(quats, dtype=float)  # (N, 4) wxyz
        self._statuses = np.asarray(statuses, dtype=int)
        self._offset = float(time_offset)
        self._enu_cache: dict = {}

    @classmethod
    def from_poses(cls, poses) -> "Trajectory":
        poses = list(poses)
        return cls(
            [p.t for p in poses],
            [p.position.lat_deg for p in poses],
            [p.position.lon_deg for p in poses],
            [p.position.alt_m for p in poses],
            [p.attitude.wxyz for p in poses],
            [p.status for p in poses],
        )

    def __len__(self) -> int:
        return self._times.size

    @property
    def times(self) -> np.ndarray:
        return self._times + self._offset

    @property
    def time_offset(self) -> float:
        return self._offset

    def pose_at_index(self, i: int) -> TimestampedPose:
        return TimestampedPose(
            t=float(self._times[i] + self._offset),
            position=GeodeticPosition(
                float(self._lats[i]), float(self._lons[i]), float(self._alts[i])
            ),
            attitude=UnitQuaternion.from_wxyz(self._quats[i]),
            status=int(self._statuses[i]),
        )

    def __iter__(self):
        return (self.pose_at_index(i) for i in range(len(self)))

    def shifted(self, delta_s: float) -> "Trajectory":
        """Trajectory with every timestamp moved by delta_s; data shared."""
        if not math.isfinite(delta_s):
            raise DomainError("time offset must be finite")
        out = Trajectory.__new__(Trajectory)
        out._times = self._times
        out._lats = self._lats
        out._lons = self._lons
        out._alts = self._alts
        out._quats = self._quats
        out._statuses = self._statuses
        out._offset = self._offset + delta_s
        out._enu_cache = self._enu_cache
        return out

    def median_frame(self) -> EnuFrame:
        """ENU frame at the median latitude/longitude over the trajectory."""
        return EnuFrame(
            GeodeticPosition(
                float(np.median(self._lats)),
                float(np.median(self._lons)),
                float(np.median(self._alts)),
            )
        )

    def enu_positions(self, frame: EnuFrame) -> np.ndarray:
        """(N, 3) sample positions in the given frame, cached per frame."""
        cached = self._enu_cache.get(frame)
        if cached is None:
            cached = geodetic_to_enu_array(self._lats, self._lons, self._alts, frame)
            self._enu_cache[frame] = cached
        return cached

    def _bracket(self, t: float):
        """Indices (i0, i1) and clamped fraction for an internal query time."""
        times = self.times
        t0, t1 = times[0], times[-1]
        if t < t0 - EXTRAPOLATION_WINDOW_S or t > t1 + EXTRAPOLATION_WINDOW_S:
            raise RangeError(
                f"time {t} outside trajectory span [{t0}, {t1}] "
                f"+/- {EXTRAPOLATION_WINDOW_S}s"
            )
        if len(self) == 1:
            return 0, 0, 0.0
        i1 = int(np.searchsorted(times, t, side="left"))
        i1 = min(max(i1, 1), len(self) - 1)
        i0 = i1 - 1
        u = (t - times[i0]) / (times[i1] - times[i0])
        return i0, i1, u

    def interpolate(self, t: float, frame: EnuFrame | None = None) -> TimestampedPose:
        """Pose at time t: position lerped in ENU, attitude slerped.

        Queries up to EXTRAPOLATION_WINDOW_S beyond either end extrapolate at
        constant velocity and attitude rate (the bracket fraction simply runs
        outside [0, 1]).
        """
        if frame is None:
            frame = self.median_frame()
        i0, i1, u = self._bracket(t)
        s0, s1 = self._statuses[i0], self._statuses[i1]
        if (s0 & STATUS_ALL_VALID) != STATUS_ALL_VALID or (
            s1 & STATUS_ALL_VALID
        ) != STATUS_ALL_VALID:
            raise ValidityError(
                f"bracketing sample has invalid status bits ({s0:#x}, {s1:#x})"
            )
        enu = self.enu_positions(frame)
        pos_enu = enu[i0] + (enu[i1] - enu[i0]) * u
        lat, lon, alt = enu_to_geodetic_array(pos_enu, frame)
        q0 = UnitQuaternion.from_wxyz(self._quats[i0])
        if i0 == i1:
            q = q0
        else:
            q1 = UnitQuaternion.from_wxyz(self._quats[i1])
            q = slerp(q0, q1, u)
        return TimestampedPose(
            t=t,
            position=GeodeticPosition(float(lat), float(lon), float(alt)),
            attitude=q,
            status=int(s0 & s1),
        )

    def sample_positions_enu(self, ts, frame: EnuFrame) -> np.ndarray:
        """(M, 3) interpolated ENU positions at query times; extrapolation rules apply."""
        out = np.empty((len(np.atleast_1d(ts)), 3))
        enu = self.enu_positions(frame)
        for k, t in enumerate(np.atleast_1d(ts)):
            i0, i1, u = self._bracket(float(t))
            out[k] = enu[i0] + (enu[i1] - enu[i0]) * u
        return out


def interpolate_pose(traj: Trajectory, t: float, frame: EnuFrame | None = None) -> TimestampedPose:
    """Interpolate the trajectory at GPS time t. See Trajectory.interpolate."""
    return traj.interpolate(t, frame)


def apply_time_offset(traj: Trajectory, delta_s: float) -> Trajectory:
    """Shift every sample time by delta_s, preserving order. O(1)."""
    return traj.shifted(delta_s)


def write_ins_csv(path, traj: Trajectory) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(INS_CSV_HEADER)
        for p in traj:
            writer.writerow(
                [
                    f"{p.t:.9f}",
                    f"{p.position.lat_deg:.10f}",
                    f"{p.position.lon_deg:.10f}",
                    f"{p.position.alt_m:.5f}",
                    f"{p.attitude.w:.10f}",
                    f"{p.attitude.x:.10f}",
                    f"{p.attitude.y:.10f}",
                    f"{p.attitude.z:.10f}",
                    f"{p.status:02x}",
                ]
            )


def read_ins_csv(path) -> Trajectory:
    from .errors import ParseError

    times, lats, lons, alts, quats, statuses = [], [], [], [], [], []
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None:
            raise ParseError(f"{path}: empty INS log")
        header = [h.strip() for h in header]
        missing = [c for c in INS_CSV_HEADER if c not in header]
        if missing:
            raise ParseError(f"{path}: missing column(s) {', '.join(missing)}")
        idx = {c: header.index(c) for c in INS_CSV_HEADER}
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                times.append(float(row[idx["t_gps_s"]]))
                lats.append(float(row[idx["lat_deg"]]))
                lons.append(float(row[idx["lon_deg"]]))
                alts.append(float(row[idx["alt_m"]]))
                quats.append(
                    [
                        float(row[idx["qw"]]),
                        float(row[idx["qx"]]),
                        float(row[idx["qy"]]),
                        float(row[idx["qz"]]),
                    ]
                )
                statuses.append(int(row[idx["status_hex"]], 16))
            except (ValueError, IndexError) as exc:
                raise ParseError(f"{path}:{lineno}: bad INS record: {exc}") from exc
    return Trajectory(times, lats, lons, alts, quats, statuses)
