#!/usr/bin/env python3
"""Generate console test fixtures from a blackout mission.

Runs the simulator's blackout sortie, replays the station capture through a
recording bus, and pairs every event with its link delivery time so the
console tests can drive the reducer on a realistic timeline (including the
silent gap while the link was down).

Usage: python3 frontend/scripts/gen_fixtures.py [out_json]
"""

import json
import sys
import tempfile
from pathlib import Path

from geostream.downlink.linksim import LinkProfile
from geostream.downlink.wire import TYPE_NAMES
from geostream.flightsim.mission import run_mission
from geostream.flightsim.plan import MissionPlan, desk_camera, required_scene_extent
from geostream.flightsim.scene import generate_scene
from geostream.station.state import Station
from geostream.station.store import MissionStore, read_capture

BLACKOUT = (30.0, 60.0)


class RecordingBus:
    def __init__(self):
        self.events = []
        self.clock = 0.0

    def publish(self, topic, payload):
        if topic == "thumbnail" and "jpeg" in payload:
            payload = {k: v for k, v in payload.items() if k != "jpeg"}
        self.events.append({"at": self.clock, "topic": topic, "data": payload})


def main(out_path):
    plan = MissionPlan(
        pattern="lawnmower", altitude_m_agl=30.0, speed_mps=10.0, overlap=0.3,
        camera_fps=2.0, area_e_m=60.0, area_n_m=180.0,
    )
    cam = desk_camera(scale=20)
    ext_e, ext_n = required_scene_extent(plan, cam)
    scene = generate_scene(seed=77, extent_e=ext_e, extent_n=ext_n, resolution=0.5)
    profile = LinkProfile(
        bandwidth_bps=2e6, latency_ms=20.0, blackout_windows=(BLACKOUT,)
    )
    with tempfile.TemporaryDirectory() as tmp:
        out = Path(tmp) / "mission"
        summary = run_mission(plan, scene, profile, out, cam, seed=23)
        export = json.loads((out / "export.geojson").read_text())
        report = json.loads((out / "report.json").read_text())
        deliveries = {}
        for line in (out / "delivery_log.jsonl").read_text().splitlines():
            rec = json.loads(line)
            if rec["t_delivered"] is not None:
                deliveries[(rec["msg_type"], rec["seq"])] = rec["t_delivered"]
        # Replay the capture (arrival order) through a recording bus, stamping
        # each event with its simulated delivery time.
        bus = RecordingBus()
        store = MissionStore(Path(tmp) / "replay_store")
        station = Station(store, bus=bus)
        for msg in read_capture(out / "store" / "capture.log"):
            at = deliveries.get((msg.msg_type, msg.seq))
            if at is None:
                continue
            bus.clock = at
            from geostream.downlink.wire import encode

            station.receive_frame(encode(msg), now=at)
        fixture = {
            "summary": {k: v for k, v in summary.items() if k != "summary_hash"},
            "blackout_window": list(BLACKOUT),
            "export": export,
            "report": report,
            "events": sorted(bus.events, key=lambda e: e["at"]),
        }
    Path(out_path).write_text(json.dumps(fixture))
    print(
        f"wrote {out_path}: {len(fixture['events'])} events, "
        f"{len(export['features'])} features"
    )


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "frontend/test/fixtures/mission.json")
