import numpy as np
import pytest

from geostream.camera import CameraModel, mount_boresight
from geostream.downlink.wire import (
    MSG_ANALYTICS,
    MSG_TELEMETRY,
    DownlinkMessage,
    decode,
    encode,
    pack_telemetry,
    unpack_json,
)
from geostream.geodesy import EnuFrame, EnuPoint, GeodeticPosition, enu_to_geodetic
from geostream.georef import encode_polygon_set_payload, georegister_mask
from geostream.pose import TimestampedPose
from geostream.quat import UnitQuaternion
from geostream.station.export import export_mission, union_area_m2
from geostream.station.state import Station
from geostream.station.store import MissionStore

FRAME = EnuFrame(GeodeticPosition(64.9, -147.6, 0.0))


def analytics_frame(seq, image_id="img_0", offset_e=0.0):
    cam = CameraModel(
        width=400, height=300, fx=300.0, fy=300.0, cx=200.0, cy=150.0,
        boresight=mount_boresight(0.0),
    )
    pose = TimestampedPose(
        t=100.0 + seq,
        position=enu_to_geodetic(EnuPoint(offset_e, 0.0, 80.0), FRAME),
        attitude=UnitQuaternion.identity(),
    )
    ring = np.array(
        [[100, 80], [300, 80], [300, 220], [100, 220], [100, 80]], dtype=float
    )
    ps = georegister_mask(cam, pose, FRAME, 0.0, [(1, ring, [])], image_id=image_id)
    payload = encode_polygon_set_payload(ps.image_id, ps.polygons, ps.ground_alt_m)
    msg = DownlinkMessage(
        msg_type=MSG_ANALYTICS,
        seq=seq,
        t_gps_ns=int((100.0 + seq) * 1e9),
        payload=payload,
    )
    return encode(msg), ps


def telemetry_frame(seq, t, lat=64.9):
    pose = TimestampedPose(
        t=t, position=GeodeticPosition(lat, -147.6, 150.0), attitude=UnitQuaternion.identity()
    )
    msg = DownlinkMessage(
        msg_type=MSG_TELEMETRY, seq=seq, t_gps_ns=int(t * 1e9), payload=pack_telemetry(pose)
    )
    return encode(msg)


def test_duplicate_analytics_stored_once(tmp_path):
    store = MissionStore(tmp_path / "m")
    station = Station(store)
    frame, _ = analytics_frame(0)
    station.receive_frame(frame, now=1.0)
    station.receive_frame(frame, now=2.0)
    assert store.committed == [0]
    assert station.state.link["duplicates"] == 1
    # Duplicate still triggers a re-ack.
    uplink = station.drain_uplink(3.0)
    assert len(uplink) >= 1


def test_out_of_order_telemetry_keeps_latest_pose(tmp_path):
    store = MissionStore(tmp_path / "m")
    station = Station(store)
    station.receive_frame(telemetry_frame(0, t=100.0), now=0.0)
    station.receive_frame(telemetry_frame(2, t=102.0, lat=64.95), now=0.1)
    station.receive_frame(telemetry_frame(1, t=101.0), now=0.2)  # old arrives late
    assert station.state.latest_pose["t"] == 102.0
    assert station.state.latest_pose["lat_deg"] == pytest.approx(64.95)
    # Track inserted by timestamp.
    times = [t for t, *_ in station.state.pose_track]
    assert times == sorted(times)


def test_out_of_order_analytics_reassembled_in_order(tmp_path):
    store = MissionStore(tmp_path / "m")
    station = Station(store)
    frames = [analytics_frame(i)[0] for i in range(4)]
    for i in (1, 3, 0, 2):
        station.receive_frame(frames[i], now=float(i))
    assert store.committed == [0, 1, 2, 3]
    msgs = list(store.iter_analytics())
    assert [m.seq for m in msgs] == [0, 1, 2, 3]


def test_ack_after_durable_no_ack_on_persist_failure(tmp_path):
    store = MissionStore(tmp_path / "m")
    station = Station(store)
    store.fail_persist = True
    frame, _ = analytics_frame(0)
    station.receive_frame(frame, now=1.0)
    uplink = station.drain_uplink(2.0)
    acks = [f for f in uplink if b'"command":"ack"' in f]
    assert acks == []
    assert store.committed == []
    # Disk recovers; retransmission lands and is acked.
    store.fail_persist = False
    station.receive_frame(frame, now=3.0)
    uplink = station.drain_uplink(4.0)
    assert any(b'"command":"ack"' in f for f in uplink)
    assert store.committed == [0]


def test_acknowledged_frame_survives_restart(tmp_path):
    store = MissionStore(tmp_path / "m")
    station = Station(store)
    # Out of order on purpose: seq 1 stays staged (not yet committed).
    f1, _ = analytics_frame(1)
    station.receive_frame(f1, now=1.0)
    assert station.drain_uplink(1.5)  # acked from staging
    # Crash: reopen the same directory.
    store2 = MissionStore(tmp_path / "m")
    assert store2.has_analytics(1)
    f0, _ = analytics_frame(0)
    station2 = Station(store2)
    station2.receive_frame(f0, now=2.0)
    assert store2.committed == [0, 1]


def test_ack_state_cum_and_sparse(tmp_path):
    store = MissionStore(tmp_path / "m")
    station = Station(store)
    for seq in (0, 1, 4):
        frame, _ = analytics_frame(seq)
        station.receive_frame(frame, now=float(seq))
    cum, sparse = store.ack_state()
    assert cum == 1
    assert sparse == [4]
    uplink = station.drain_uplink(5.0)
    body = unpack_json(decode(uplink[0]).payload)
    assert body["cum"] == 1 and body["sparse"] == [4]


def test_export_empty_mission(tmp_path):
    store = MissionStore(tmp_path / "m")
    fc, report = export_mission(store)
    assert fc == {"type": "FeatureCollection", "features": []}
    assert report["analytics_frames"] == 0
    assert report["coverage_area_m2"] == 0.0


def test_export_single_square(tmp_path):
    store = MissionStore(tmp_path / "m")
    station = Station(store)
    frame, ps = analytics_frame(0, image_id="img_7")
    station.receive_frame(frame, now=1.0)
    fc, report = export_mission(store)
    assert len(fc["features"]) == 1
    feat = fc["features"][0]
    assert feat["properties"]["image_id"] == "img_7"
    assert feat["properties"]["class_id"] == 1
    assert len(feat["geometry"]["coordinates"][0]) == 5
    # 200x140 px at 80m/300px focal: 53.33 x 37.33 m ~ 1991 m^2.
    expect = (200 * 80 / 300.0) * (140 * 80 / 300.0)
    assert report["coverage_area_m2"] == pytest.approx(expect, rel=0.02)


def test_union_area_overlapping_images(tmp_path):
    store = MissionStore(tmp_path / "m")
    station = Station(store)
    fa, ps_a = analytics_frame(0, image_id="a", offset_e=0.0)
    fb, ps_b = analytics_frame(1, image_id="b", offset_e=10.0)
    station.receive_frame(fa, now=1.0)
    station.receive_frame(fb, now=2.0)
    single = union_area_m2([ps_a])
    union = union_area_m2([ps_a, ps_b])
    # Shifted copy overlaps: union strictly between one and two footprints.
    assert single * 1.05 < union < single * 2.0
