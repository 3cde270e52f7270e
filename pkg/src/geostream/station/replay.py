"""Re-drive a station from a recorded downlink capture.

Ingest is order-driven, so the final store is identical at any speed
factor; the speed only paces event emission for a watching console.
"""

from __future__ import annotations

import time
from pathlib import Path

from .state import Station
from .store import MissionStore, read_capture


def replay_capture(capture_path, store_dir, bus=None, speed: float = 0.0, mission_id=None):
    """Replay every captured frame into a fresh station store.

    speed <= 0 replays as fast as possible; otherwise inter-frame gaps are
    scaled by 1/speed. Returns the closed MissionStore.
    """
    capture_path = Path(capture_path)
    frames = read_capture(capture_path)
    store = MissionStore(store_dir, mission_id=mission_id or Path(store_dir).name)
    station = Station(store, bus=bus)
    t_first = None
    t_prev = None
    for msg in frames:
        t = msg.t_gps_ns / 1e9
        if t_first is None:
            t_first = t
        if speed > 0 and t_prev is not None:
            gap = max(0.0, min(t - t_prev, 5.0)) / speed
            if gap > 1e-4:
                time.sleep(gap)
        t_prev = t
        from ..downlink.wire import encode

        station.receive_frame(encode(msg), now=t - t_first)
        station.drain_uplink(t - t_first)  # acks go nowhere in replay
    station.close({"replay_of": str(capture_path)})
    return store, station
