"""Acceptance gate: one test per criterion, each printing a PASS line.

Run with `pytest -s tests/test_acceptance.py` to see the per-criterion
lines; every tolerance is pinned here, not calibrated elsewhere.
"""

import json
import math
import time

import numpy as np
import pytest

from geostream.geodesy import (
    EnuFrame,
    EnuPoint,
    GeodeticPosition,
    enu_to_geodetic,
    enu_to_geodetic_array,
    geodetic_to_enu,
    geodetic_to_enu_array,
)
from geostream.quat import UnitQuaternion, slerp

from oracles import iou_oracle, masked_metrics_oracle, quat_angle, rasterize_rings_oracle

FRAME = EnuFrame(GeodeticPosition(64.9, -147.6, 120.0))


def report(name, detail):
    print(f"\nACCEPTANCE PASS: {name} ({detail})", flush=True)


def test_time_sync_error_model():
    """10 deg/s turn, 200 m slant range, 1.0 s pose-lookup offset -> 34.9 +/- 0.5 m."""
    t_start = time.perf_counter()
    from geostream.camera import CameraModel, mount_boresight
    from geostream.georef import georegister_pixel
    from geostream.pose import TimestampedPose, Trajectory, interpolate_pose

    cam = CameraModel(
        width=1000, height=800, fx=900.0, fy=900.0, cx=500.0, cy=400.0,
        boresight=mount_boresight(0.0),
    )
    # Hovering vehicle pitching at 10 deg/s; slant range 200 m at the
    # +/- 5 deg window around nadir.
    h = 200.0 * math.cos(math.radians(5.0))
    rate = math.radians(10.0)
    t0 = 500.0
    poses = []
    for t in np.arange(0.0, 3.0, 0.01):
        pitch = rate * (t - 1.5)  # zero pitch mid-trajectory
        poses.append(
            TimestampedPose(
                t=t0 + t,
                position=enu_to_geodetic(EnuPoint(0.0, 0.0, h), FRAME),
                attitude=UnitQuaternion.from_axis_angle([1, 0, 0], pitch),
            )
        )
    traj = Trajectory.from_poses(poses)
    t_query = t0 + 2.0  # pitch +5 deg
    pose_now = interpolate_pose(traj, t_query, FRAME)
    pose_stale = interpolate_pose(traj, t_query - 1.0, FRAME)  # pitch -5 deg
    px = [cam.cx, cam.cy]
    p_now = geodetic_to_enu(georegister_pixel(cam, pose_now, FRAME, 0.0, px), FRAME)
    p_stale = geodetic_to_enu(georegister_pixel(cam, pose_stale, FRAME, 0.0, px), FRAME)
    moved = np.linalg.norm(p_now.as_array() - p_stale.as_array())
    elapsed = time.perf_counter() - t_start
    assert moved == pytest.approx(34.9, abs=0.5)
    assert elapsed < 1.0
    report("time-sync error model", f"displacement {moved:.2f} m in {elapsed:.2f} s")


def _figure_eight_calibration(ins_noise: bool, seed: int = 0):
    from geostream.calib import SfmPose, calibrate
    from geostream.camera import mount_boresight
    from geostream.flightsim.plan import MissionPlan, apply_ins_noise, generate_trajectory
    from geostream.quat import UnitQuaternion

    plan = MissionPlan(
        pattern="figure-eight", radius_m=60.0, speed_mps=12.0, laps=2,
        altitude_m_agl=50.0, altitude_span_m=20.0, ins_hz=100.0,
    )
    traj_true = generate_trajectory(plan, FRAME)
    boresight = mount_boresight(math.radians(45.0))
    sim_rot = UnitQuaternion.from_axis_angle([0.3, 0.2, 1.0], 0.9)
    sim_trans = np.array([210.0, -45.0, 30.0])
    scale = 3.7
    r_sim = sim_rot.to_matrix()
    t_first, t_last = traj_true.times[0], traj_true.times[-1]
    times = np.arange(t_first + 1.0, t_last - 1.0, 0.25)
    sfm = []
    for i, t in enumerate(times):
        pose = traj_true.interpolate(float(t), FRAME)
        p_enu = geodetic_to_enu(pose.position, FRAME).as_array()
        p_sfm = r_sim.T @ (p_enu - sim_trans) / scale
        r_w2c = (boresight @ pose.attitude.conjugate()).to_matrix()
        sfm.append(
            SfmPose(
                image_name=f"img_{i:05d}.jpg",
                t_image=float(t),
                position=p_sfm,
                rotation=UnitQuaternion.from_matrix(r_w2c @ r_sim),
            )
        )
    traj_meas = (
        apply_ins_noise(traj_true, FRAME, 0.02, 0.02, seed=seed) if ins_noise else traj_true
    )
    result = calibrate(sfm, traj_meas, FRAME, search_window_s=0.3)
    return result, boresight, scale


def test_calibration_closed_loop():
    """Figure-eight: boresight 45 deg, s = 3.7, zero offset, noiseless and noisy."""
    t_start = time.perf_counter()
    result, boresight, scale = _figure_eight_calibration(ins_noise=False)
    bore_err = math.degrees(quat_angle(result.boresight.wxyz, boresight.wxyz))
    assert bore_err < 0.01
    assert abs(result.similarity.scale - scale) < 1e-6
    assert abs(result.time_offset_s) < 0.005

    noisy, _, _ = _figure_eight_calibration(ins_noise=True, seed=3)
    noisy_err = math.degrees(quat_angle(noisy.boresight.wxyz, boresight.wxyz))
    assert noisy_err < 0.2
    assert abs(noisy.time_offset_s) < 0.015
    elapsed = time.perf_counter() - t_start
    assert elapsed < 30.0
    report(
        "calibration closed loop",
        f"noiseless boresight {bore_err:.4f} deg, scale err "
        f"{abs(result.similarity.scale - scale):.2e}, offset "
        f"{abs(result.time_offset_s)*1e3:.2f} ms; noisy boresight {noisy_err:.3f} deg, "
        f"offset {abs(noisy.time_offset_s)*1e3:.1f} ms; {elapsed:.1f} s",
    )


def test_injected_time_offset_recovery():
    """+0.25 s injected into a 100 Hz INS stream recovered within 10 ms."""
    t_start = time.perf_counter()
    from geostream.calib import scan_time_offset
    from geostream.camera import mount_boresight
    from geostream.flightsim.plan import MissionPlan, generate_trajectory
    from geostream.pose import apply_time_offset

    plan = MissionPlan(
        pattern="figure-eight", radius_m=60.0, speed_mps=12.0, laps=1,
        altitude_m_agl=50.0, ins_hz=100.0,
    )
    traj = generate_trajectory(plan, FRAME)
    boresight = mount_boresight(math.radians(45.0))
    times = np.arange(traj.times[0] + 1.0, traj.times[-1] - 1.0, 0.25)
    truth = []
    for t in times:
        pose = traj.interpolate(float(t), FRAME)
        truth.append((float(t), boresight @ pose.attitude.conjugate()))
    shifted = apply_time_offset(traj, 0.25)
    offset, curve = scan_time_offset(shifted, truth, 0.5, FRAME)
    elapsed = time.perf_counter() - t_start
    assert offset == pytest.approx(0.25, abs=0.010)
    assert elapsed < 10.0
    report(
        "injected time-offset recovery",
        f"recovered {offset*1e3:.1f} ms vs 250 ms in {elapsed:.1f} s",
    )


def test_vectorization_budget_20_seeds():
    """2048x2048 fractal masks: <= 20480 B and oracle IoU >= 0.99, 20 seeds."""
    t_start = time.perf_counter()
    from geostream.analytics.segment import SegMask
    from geostream.analytics.vectorize import vectorize
    from geostream.flightsim.scene import fractal_mask

    worst_iou = 1.0
    largest = 0
    for seed in range(20):
        blob = fractal_mask(
            (2048, 2048), seed=1000 + seed, coverage=0.45, octaves=7, base_cells=8
        )
        result = vectorize(SegMask(classes=blob.astype(np.uint8)), 20_480)
        assert result.encoded_bytes <= 20_480
        rings = result.polygons[0].outers + result.polygons[0].holes
        oracle_mask = rasterize_rings_oracle(rings, 2048, 2048)
        iou = iou_oracle(oracle_mask, blob)
        assert iou >= 0.99
        worst_iou = min(worst_iou, iou)
        largest = max(largest, result.encoded_bytes)
    elapsed = time.perf_counter() - t_start
    assert elapsed < 60.0
    report(
        "vectorization budget",
        f"20 seeds, max {largest} B, worst IoU {worst_iou:.4f}, {elapsed:.1f} s",
    )


def _mission_pair(tmp_path, blackout: bool):
    from geostream.downlink.linksim import LinkProfile
    from geostream.flightsim.mission import run_mission
    from geostream.flightsim.plan import MissionPlan, desk_camera, required_scene_extent
    from geostream.flightsim.scene import generate_scene

    plan = MissionPlan(
        pattern="lawnmower", altitude_m_agl=30.0, speed_mps=10.0, overlap=0.3,
        camera_fps=4.0, area_e_m=100.0, area_n_m=250.0,
    )
    cam = desk_camera(scale=28)
    ext_e, ext_n = required_scene_extent(plan, cam)
    scene = generate_scene(seed=31, extent_e=ext_e, extent_n=ext_n, resolution=0.5)
    windows = ((40.0, 70.0),) if blackout else ()
    profile = LinkProfile(bandwidth_bps=2e6, latency_ms=20.0, blackout_windows=windows)
    name = "blackout" if blackout else "clean"
    out = tmp_path / name
    summary = run_mission(plan, scene, profile, out, cam, seed=11)
    return out, summary


def test_blackout_exactly_once(tmp_path):
    """2-minute sortie with 30 s blackout: analytics exactly once, store identical."""
    t_start = time.perf_counter()
    out_clean, sum_clean = _mission_pair(tmp_path, blackout=False)
    out_bo, sum_bo = _mission_pair(tmp_path, blackout=True)
    assert sum_clean["duration_s"] > 110.0  # 2-minute class sortie
    assert sum_bo["analytics_committed"] == sum_bo["analytics_emitted"]
    assert sum_bo["unacked_analytics"] == []
    clean_log = (out_clean / "store" / "analytics.log").read_bytes()
    bo_log = (out_bo / "store" / "analytics.log").read_bytes()
    assert clean_log == bo_log
    assert len(clean_log) > 0
    elapsed = time.perf_counter() - t_start
    assert elapsed < 60.0
    report(
        "blackout exactly-once",
        f"{sum_bo['analytics_committed']} analytics frames, store byte-identical, "
        f"{elapsed:.1f} s",
    )


def test_bandwidth_fit(tmp_path):
    """1 Mbps cap: 4 fps x <= 20 KB analytics + 10 Hz telemetry, latency < 500 ms."""
    t_start = time.perf_counter()
    from geostream.downlink.linksim import LinkProfile
    from geostream.downlink.session import run_payload_session
    from geostream.downlink.wire import (
        MSG_ANALYTICS,
        MSG_TELEMETRY,
        pack_telemetry,
    )
    from geostream.pose import TimestampedPose
    from geostream.station.state import Station
    from geostream.station.store import MissionStore

    rng = np.random.default_rng(41)
    pose = TimestampedPose(
        t=0.0, position=GeodeticPosition(64.9, -147.6, 150.0),
        attitude=UnitQuaternion.identity(),
    )
    events = []
    duration = 40.0
    t = 0.0
    while t < duration:
        events.append((round(t, 3), MSG_TELEMETRY, pack_telemetry(pose)))
        t += 0.1
    t = 0.0
    while t < duration:
        events.append((round(t, 3), MSG_ANALYTICS, rng.bytes(19_800)))
        t += 0.25
    profile = LinkProfile(bandwidth_bps=1e6, latency_ms=20.0)
    store = MissionStore(tmp_path / "bw")
    station = Station(store)
    result = run_payload_session(
        sorted(events), profile, station, tmp_path / "bw.spool"
    )
    n_analytics = sum(1 for _, mt, _ in events if mt == MSG_ANALYTICS)
    assert store.committed == list(range(n_analytics))
    telemetry = [r for r in result.records if r.msg_type == MSG_TELEMETRY and r.t_delivered]
    latencies = [r.t_delivered - r.t_emit for r in telemetry]
    assert max(latencies) < 0.5
    elapsed = time.perf_counter() - t_start
    assert elapsed < 60.0
    report(
        "bandwidth fit",
        f"{n_analytics} analytics sustained at 1 Mbps, max telemetry latency "
        f"{max(latencies)*1e3:.0f} ms, {elapsed:.1f} s",
    )


def test_end_to_end_mapping_fidelity(tmp_path):
    """Lawnmower mission: exported polygons vs scene truth IoU >= 0.95."""
    t_start = time.perf_counter()
    from geostream.analytics.vectorize import rasterize_class_rings
    from geostream.downlink.linksim import LinkProfile
    from geostream.flightsim.mission import run_mission
    from geostream.flightsim.plan import MissionPlan, desk_camera, required_scene_extent
    from geostream.flightsim.scene import generate_scene

    plan = MissionPlan(
        pattern="lawnmower", altitude_m_agl=30.0, speed_mps=10.0, overlap=0.3,
        camera_fps=2.0, area_e_m=120.0, area_n_m=220.0,
    )
    cam = desk_camera(scale=8)
    ext_e, ext_n = required_scene_extent(plan, cam)
    scene = generate_scene(seed=47, extent_e=ext_e, extent_n=ext_n, resolution=0.3)
    profile = LinkProfile(bandwidth_bps=2e6, latency_ms=20.0)
    out = tmp_path / "mapping"
    summary = run_mission(plan, scene, profile, out, cam, seed=13)
    assert summary["unacked_analytics"] == []

    fc = json.loads((out / "export.geojson").read_text())
    h, w = scene.class_raster.shape
    e0, n0 = scene.origin_en

    def rings_to_grid(rings_lonlat):
        out_rings = []
        for ring in rings_lonlat:
            arr = np.array(ring)
            enu = geodetic_to_enu_array(arr[:, 1], arr[:, 0], np.zeros(len(arr)), scene.frame)
            x = (enu[:, 0] - e0) / scene.resolution - 0.5
            y = (enu[:, 1] - n0) / scene.resolution - 0.5
            out_rings.append(np.column_stack([x, y]))
        return out_rings

    union = np.zeros((h, w), dtype=bool)
    per_image: dict = {}
    for feat in fc["features"]:
        per_image.setdefault(feat["properties"]["image_id"], []).extend(
            rings_to_grid(feat["geometry"]["coordinates"])
        )
    for rings in per_image.values():
        union |= rasterize_class_rings(rings, h, w)
    footprint = np.zeros((h, w), dtype=bool)
    for line in (out / "truth_ledger.jsonl").read_text().splitlines():
        rec = json.loads(line)
        ring = np.array(rec["footprint_enu"])
        x = (ring[:, 0] - e0) / scene.resolution - 0.5
        y = (ring[:, 1] - n0) / scene.resolution - 0.5
        footprint |= rasterize_class_rings([np.column_stack([x, y])], h, w)
    truth = (scene.class_raster == 1) & footprint
    got = union & footprint
    inter = np.logical_and(truth, got).sum()
    uni = np.logical_or(truth, got).sum()
    iou = inter / uni
    elapsed = time.perf_counter() - t_start
    assert iou >= 0.95
    assert elapsed < 300.0
    report(
        "end-to-end mapping fidelity",
        f"{summary['frames']} frames, IoU {iou:.4f} over "
        f"{int(footprint.sum())} visible cells, {elapsed:.0f} s",
    )


def test_gsd_reproduction():
    """Default virtual camera: 1.00 cm GSD at 30 m AGL, 2.00 cm at 60 m."""
    from geostream.flightsim.plan import default_camera, ground_sample_distance

    g30 = ground_sample_distance(30.0, 8.0, 2.667)
    g60 = ground_sample_distance(60.0, 8.0, 2.667)
    assert f"{g30:.3g}" == "0.01"
    assert f"{g60:.3g}" == "0.02"
    cam = default_camera()
    assert f"{30.0 / cam.fx:.3g}" == "0.01"
    assert f"{60.0 / cam.fx:.3g}" == "0.02"
    report("GSD reproduction", f"30 m -> {g30*100:.4f} cm, 60 m -> {g60*100:.4f} cm")


def test_property_suites():
    """Wire fuzz, geodesy round trip, slerp invariants, metrics oracle, blur."""
    t_start = time.perf_counter()
    from geostream.downlink.wire import MSG_TYPES, DownlinkMessage, decode, encode

    rng = np.random.default_rng(99)
    failures = 0
    for _ in range(10_000):
        msg = DownlinkMessage(
            msg_type=int(rng.choice(MSG_TYPES)),
            seq=int(rng.integers(0, 2**32)),
            t_gps_ns=int(rng.integers(0, 2**63)),
            payload=rng.bytes(int(rng.integers(0, 256))),
        )
        if decode(encode(msg)) != msg:
            failures += 1
    assert failures == 0

    pts = rng.uniform(-50_000, 50_000, size=(500, 3))
    pts[:, 2] = rng.uniform(-100, 5000, size=500)
    lat, lon, alt = enu_to_geodetic_array(pts, FRAME)
    back = geodetic_to_enu_array(lat, lon, alt, FRAME)
    geodesy_err = float(np.max(np.abs(back - pts)))
    assert geodesy_err < 1e-3

    for _ in range(300):
        v = rng.normal(size=4)
        q0 = UnitQuaternion.from_wxyz(v / np.linalg.norm(v))
        v = rng.normal(size=4)
        q1 = UnitQuaternion.from_wxyz(v / np.linalg.norm(v))
        u = float(rng.uniform())
        out = slerp(q0, q1, u)
        assert abs(np.linalg.norm(out.wxyz) - 1.0) < 1e-9
        rev = slerp(q1, q0, 1.0 - u)
        assert quat_angle(out.wxyz, rev.wxyz) < 1e-9

    from geostream.annotate import DEFAULT_COLOR_TABLE, SparseLabelImage, masked_metrics

    labels = rng.choice([0, 1, 255], size=(32, 32), p=[0.3, 0.3, 0.4]).astype(np.uint8)
    sparse = SparseLabelImage(image_id="p", labels=labels, color_table=DEFAULT_COLOR_TABLE)
    pred = rng.integers(0, 2, size=(32, 32)).astype(np.uint8)
    ours = masked_metrics(pred, sparse)
    oracle = masked_metrics_oracle(pred, labels)
    for cls, vals in oracle.items():
        for key in ("precision", "recall", "iou"):
            got = ours["classes"][cls][key]
            if vals[key] is None:
                assert got is None
            else:
                assert got == pytest.approx(vals[key], abs=1e-12)

    from scipy.ndimage import uniform_filter

    from geostream.analytics.quality import sharpness

    img = rng.integers(0, 256, size=(256, 256)).astype(float)
    scores = [sharpness(uniform_filter(img, size=k, mode="nearest"), tile=64).global_score
              for k in (1, 2, 3, 5, 8)]
    for a, b in zip(scores, scores[1:]):
        assert b < a

    elapsed = time.perf_counter() - t_start
    report(
        "property suites",
        f"10k wire round-trips clean, geodesy max err {geodesy_err*1e6:.2f} um, "
        f"slerp/metrics/blur invariants hold, {elapsed:.1f} s",
    )
