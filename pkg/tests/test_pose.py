import math

import numpy as np
import pytest

from geostream.errors import DomainError, ParseError, RangeError, ValidityError
from geostream.geodesy import EnuFrame, GeodeticPosition, geodetic_to_enu
from geostream.pose import (
    STATUS_ALL_VALID,
    TimestampedPose,
    Trajectory,
    apply_time_offset,
    interpolate_pose,
    read_ins_csv,
    write_ins_csv,
)
from geostream.quat import UnitQuaternion

from oracles import quat_angle

ORIGIN = GeodeticPosition(64.85, -147.7, 150.0)
FRAME = EnuFrame(ORIGIN)


def make_pose(t, lat, lon, alt, yaw=0.0, status=STATUS_ALL_VALID):
    return TimestampedPose(
        t=t,
        position=GeodeticPosition(lat, lon, alt),
        attitude=UnitQuaternion.from_axis_angle([0, 0, 1], yaw),
        status=status,
    )


def two_sample_traj():
    # Two samples 10 ms apart, positions ~1 m apart north.
    p0 = make_pose(100.0, 64.85, -147.7, 150.0)
    p1 = make_pose(100.01, 64.85 + 1.0 / 111_000, -147.7, 150.0)
    return Trajectory.from_poses([p0, p1])


def test_exact_sample_returned():
    traj = two_sample_traj()
    got = interpolate_pose(traj, 100.0, FRAME)
    assert got.t == 100.0
    assert got.position.lat_deg == pytest.approx(64.85, abs=1e-12)


def test_midpoint_linear():
    traj = two_sample_traj()
    mid = interpolate_pose(traj, 100.005, FRAME)
    e0 = geodetic_to_enu(traj.pose_at_index(0).position, FRAME).as_array()
    e1 = geodetic_to_enu(traj.pose_at_index(1).position, FRAME).as_array()
    em = geodetic_to_enu(mid.position, FRAME).as_array()
    # The lerp itself is exact; 2e-9 absorbs the double-precision floor of
    # the geodetic round trip through ~6.4e6 m ECEF coordinates.
    assert np.allclose(em, 0.5 * (e0 + e1), atol=2e-9)


def test_circle_trajectory_against_closed_form():
    # Vehicle flying a circle at constant rate; closed form gives the truth.
    radius, omega = 200.0, 0.05  # rad/s
    ins_hz = 100.0
    ts = np.arange(0, 60.0, 1.0 / ins_hz) + 1000.0

    def truth(t):
        ang = omega * (t - 1000.0)
        e, n = radius * math.cos(ang), radius * math.sin(ang)
        yaw = ang + math.pi / 2
        return np.array([e, n, 100.0]), yaw

    poses = []
    from geostream.geodesy import enu_to_geodetic, EnuPoint

    for t in ts:
        enu, yaw = truth(t)
        poses.append(
            TimestampedPose(
                t=float(t),
                position=enu_to_geodetic(EnuPoint(*enu), FRAME),
                attitude=UnitQuaternion.from_axis_angle([0, 0, 1], yaw),
            )
        )
    traj = Trajectory.from_poses(poses)
    rng = np.random.default_rng(11)
    # Second-order interpolation bound: |err| <= (w*dt)^2/8 * radius for
    # position chords; attitude error similarly second order.
    dt = 1.0 / ins_hz
    pos_bound = radius * (omega * dt) ** 2 / 8 + 1e-9
    for t in rng.uniform(1000.0, 1059.9, size=40):
        got = interpolate_pose(traj, float(t), FRAME)
        want_pos, want_yaw = truth(t)
        got_enu = geodetic_to_enu(got.position, FRAME).as_array()
        assert np.linalg.norm(got_enu - want_pos) <= pos_bound * 1.01
        want_q = UnitQuaternion.from_axis_angle([0, 0, 1], want_yaw)
        assert quat_angle(got.attitude.wxyz, want_q.wxyz) <= (omega * dt) ** 2 / 8 + 1e-9


def test_out_of_range_raises():
    traj = two_sample_traj()
    with pytest.raises(RangeError):
        interpolate_pose(traj, 100.2, FRAME)
    with pytest.raises(RangeError):
        interpolate_pose(traj, 99.9, FRAME)


def test_extrapolation_window():
    traj = two_sample_traj()
    # 50 ms beyond the last sample extrapolates at constant velocity.
    got = interpolate_pose(traj, 100.05, FRAME)
    e0 = geodetic_to_enu(traj.pose_at_index(0).position, FRAME).as_array()
    e1 = geodetic_to_enu(traj.pose_at_index(1).position, FRAME).as_array()
    expected = e0 + (e1 - e0) * 5.0
    got_enu = geodetic_to_enu(got.position, FRAME).as_array()
    assert np.allclose(got_enu, expected, atol=1e-6)


def test_invalid_status_raises():
    p0 = make_pose(0.0, 64.85, -147.7, 150.0)
    p1 = make_pose(1.0, 64.85, -147.7, 150.0, status=0x1)  # attitude invalid
    traj = Trajectory.from_poses([p0, p1])
    with pytest.raises(ValidityError):
        interpolate_pose(traj, 0.5, FRAME)


def test_non_monotonic_rejected():
    p0 = make_pose(1.0, 64.85, -147.7, 150.0)
    p1 = make_pose(1.0, 64.85, -147.7, 150.0)
    with pytest.raises(DomainError):
        Trajectory.from_poses([p0, p1])


def test_time_offset_zero_is_identity():
    traj = two_sample_traj()
    shifted = apply_time_offset(traj, 0.0)
    assert np.array_equal(shifted.times, traj.times)


def test_time_offset_exact_shift():
    traj = two_sample_traj()
    shifted = apply_time_offset(traj, 0.25)
    assert np.all(shifted.times == traj.times + 0.25)


def test_time_offset_round_trip_bitwise():
    traj = two_sample_traj()
    delta = 0.1234567
    back = apply_time_offset(apply_time_offset(traj, delta), -delta)
    # Bitwise equality, not approx: offsets cancel exactly.
    assert np.array_equal(
        back.times.view(np.uint64), traj.times.view(np.uint64)
    )


def test_ins_csv_round_trip(tmp_path):
    traj = two_sample_traj()
    path = tmp_path / "ins.csv"
    write_ins_csv(path, traj)
    back = read_ins_csv(path)
    assert len(back) == len(traj)
    for a, b in zip(traj, back):
        assert a.t == pytest.approx(b.t, abs=1e-9)
        assert a.position.lat_deg == pytest.approx(b.position.lat_deg, abs=1e-10)
        assert a.status == b.status


def test_ins_csv_missing_column(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("t_gps_s,lat_deg,lon_deg,alt_m,qw,qx,qy\n1,0,0,0,1,0,0\n")
    with pytest.raises(ParseError) as exc:
        read_ins_csv(path)
    assert "qz" in str(exc.value)
