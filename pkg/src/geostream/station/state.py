"""Live mission state and the station ingest endpoint.

The Station decodes downlink frames, persists analytics before any
acknowledgment leaves (ack-after-durable), keeps the operator-facing state
fresh, and runs the uplink command channel with retransmission. An optional
bus receives (topic, payload) events for the streaming API.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field

from ..errors import DomainError, FramingError, IntegrityError, SpoolError
from ..downlink.wire import (
    MSG_ANALYTICS,
    MSG_COMMAND,
    MSG_COMMAND_ACK,
    MSG_DIAGNOSTICS,
    MSG_HISTOGRAM,
    MSG_SHARPNESS,
    MSG_TELEMETRY,
    MSG_THUMBNAIL,
    DownlinkMessage,
    decode,
    encode,
    pack_json,
    unpack_histogram,
    unpack_json,
    unpack_sharpness,
    unpack_telemetry,
    unpack_thumbnail,
)
from ..georef import decode_polygon_set_payload, polygon_set_features
from .store import MissionStore

POSE_KEYFRAME_INTERVAL_S = 0.5  # 2 Hz decimation for the UI track
COMMAND_TIMEOUT_S = 2.0
COMMAND_BACKOFF = 2.0
COMMAND_MAX_INTERVAL_S = 30.0
COMMAND_MAX_WAIT_S = 90.0
EXPOSURE_MIN_US = 50.0
EXPOSURE_MAX_US = 20_000.0


@dataclass
class PendingCommand:
    seq: int
    value_us: float
    status: str  # pending | acked | timeout
    sent_at: float
    next_retry: float
    interval: float
    applied_value: float | None = None


@dataclass
class MissionState:
    latest_pose: dict | None = None
    pose_track: list = field(default_factory=list)  # (t, lat, lon, alt) keyframes
    analytic_index: dict = field(default_factory=dict)  # image_id -> summary
    latest_histogram: dict | None = None
    latest_sharpness: dict | None = None
    latest_thumbnail: dict | None = None
    diagnostics: dict = field(default_factory=dict)
    link: dict = field(default_factory=lambda: {"last_heard_s": None, "frames": 0, "integrity_errors": 0, "duplicates": 0})
    pending_commands: dict = field(default_factory=dict)
    _track_times: list = field(default_factory=list, repr=False)

    def insert_track_point(self, t, lat, lon, alt):
        """Timestamp-ordered insert; out-of-order telemetry lands in place."""
        if self._track_times and t <= self._track_times[-1]:
            i = bisect.bisect_left(self._track_times, t)
            if i < len(self._track_times) and self._track_times[i] == t:
                return
            self._track_times.insert(i, t)
            self.pose_track.insert(i, (t, lat, lon, alt))
            return
        # Decimate: keep ~2 Hz keyframes.
        if self._track_times and t - self._track_times[-1] < POSE_KEYFRAME_INTERVAL_S:
            return
        self._track_times.append(t)
        self.pose_track.append((t, lat, lon, alt))


class Station:
    """Single-mission ingest endpoint with an uplink command channel."""

    def __init__(self, store: MissionStore, bus=None):
        self.store = store
        self.state = MissionState()
        self.bus = bus
        self._command_seq = 0
        self._ack_dirty = False
        self._uplink_queue: list = []
        self._seen: dict = {}  # msg_type -> set of seqs (dedup for non-analytics)

    # --- ingest ----------------------------------------------------------

    def receive_frame(self, frame: bytes, now: float):
        try:
            msg = decode(frame)
        except (FramingError, IntegrityError):
            self.state.link["integrity_errors"] += 1
            return
        self.store.record_capture(frame)
        self.state.link["last_heard_s"] = now
        self.state.link["frames"] += 1
        handler = {
            MSG_TELEMETRY: self._on_telemetry,
            MSG_THUMBNAIL: self._on_thumbnail,
            MSG_HISTOGRAM: self._on_histogram,
            MSG_SHARPNESS: self._on_sharpness,
            MSG_ANALYTICS: self._on_analytics,
            MSG_DIAGNOSTICS: self._on_diagnostics,
            MSG_COMMAND_ACK: self._on_command_ack,
        }.get(msg.msg_type)
        if handler is None:
            return
        try:
            handler(msg, frame, now)
        except Exception:
            # A malformed payload must not take down ingest; the frame is
            # already in the capture log for post-mission inspection.
            self.state.link["integrity_errors"] += 1

    def _publish(self, topic: str, payload: dict):
        if self.bus is not None:
            self.bus.publish(topic, payload)

    def _on_telemetry(self, msg, frame, now):
        data = unpack_telemetry(msg.payload)
        t = msg.t_gps_ns / 1e9
        if self.state.latest_pose is None or t >= self.state.latest_pose["t"]:
            self.state.latest_pose = {"t": t, **data}
            self._publish("pose", self.state.latest_pose)
        self.state.insert_track_point(t, data["lat_deg"], data["lon_deg"], data["alt_m"])

    def _on_analytics(self, msg, frame, now):
        if self.store.has_analytics(msg.seq):
            self.state.link["duplicates"] += 1
            self._ack_dirty = True  # re-ack so the payload stops retrying
            return
        try:
            self.store.persist_analytics(msg.seq, frame)
        except SpoolError:
            # Not durable: no ack; the payload will retransmit.
            return
        self._ack_dirty = True
        try:
            ps = decode_polygon_set_payload(msg.payload)
            summary = {
                "image_id": ps.image_id,
                "t": msg.t_gps_ns / 1e9,
                "seq": msg.seq,
                "classes": sorted({p.class_id for p in ps.polygons}),
                "polygons": len(ps.polygons),
                "encoded_bytes": ps.encoded_bytes,
            }
            self.state.analytic_index[ps.image_id] = summary
            # The console draws polygons straight off the stream, so the
            # event carries the same features the mission export will.
            self._publish(
                "analytics", {**summary, "features": polygon_set_features(ps)}
            )
        except Exception:
            self.state.analytic_index[f"seq_{msg.seq}"] = {"seq": msg.seq, "undecodable": True}

    def _on_histogram(self, msg, frame, now):
        bins, exposure_us = unpack_histogram(msg.payload)
        self.state.latest_histogram = {
            "t": msg.t_gps_ns / 1e9,
            "exposure_us": exposure_us,
            "bins": [int(b) for b in bins],
        }
        self._publish("histogram", self.state.latest_histogram)

    def _on_sharpness(self, msg, frame, now):
        data = unpack_sharpness(msg.payload)
        self.state.latest_sharpness = {
            "t": msg.t_gps_ns / 1e9,
            "global_score": data["global_score"],
            "exposure_us": data["exposure_us"],
            "tile_grid": data["tile_grid"].tolist(),
        }
        self._publish("sharpness", self.state.latest_sharpness)

    def _on_thumbnail(self, msg, frame, now):
        image_id, jpeg = unpack_thumbnail(msg.payload)
        self.state.latest_thumbnail = {
            "t": msg.t_gps_ns / 1e9,
            "image_id": image_id,
            "jpeg": jpeg,
        }
        self._publish(
            "thumbnail",
            {"t": self.state.latest_thumbnail["t"], "image_id": image_id, "bytes": len(jpeg)},
        )

    def _on_diagnostics(self, msg, frame, now):
        data = unpack_json(msg.payload)
        self.state.diagnostics.update(data)
        self._publish("diagnostics", data)

    def _on_command_ack(self, msg, frame, now):
        body = unpack_json(msg.payload)
        pending = self.state.pending_commands.get(body.get("command_seq"))
        if pending is not None and pending.status == "pending":
            pending.status = "acked"
            pending.applied_value = body.get("value_us")
            self._publish(
                "command",
                {"seq": pending.seq, "status": "acked", "value_us": pending.applied_value},
            )

    # --- uplink ------------------------------------------------------------

    def send_command(self, value_us: float, now: float) -> PendingCommand:
        """Queue an exposure-limit update; validated locally first."""
        if not (EXPOSURE_MIN_US <= value_us <= EXPOSURE_MAX_US):
            raise DomainError(
                f"exposure {value_us} us outside [{EXPOSURE_MIN_US}, {EXPOSURE_MAX_US}]"
            )
        seq = self._command_seq
        self._command_seq += 1
        cmd = PendingCommand(
            seq=seq,
            value_us=float(value_us),
            status="pending",
            sent_at=now,
            next_retry=now,  # send at the next drain
            interval=COMMAND_TIMEOUT_S,
        )
        self.state.pending_commands[seq] = cmd
        self._publish("command", {"seq": seq, "status": "pending", "value_us": cmd.value_us})
        return cmd

    def _command_frame(self, cmd: PendingCommand, now: float) -> bytes:
        msg = DownlinkMessage(
            msg_type=MSG_COMMAND,
            seq=cmd.seq,
            t_gps_ns=int(round(now * 1e9)),
            payload=pack_json({"command": "set_max_exposure_us", "value_us": cmd.value_us}),
        )
        return encode(msg)

    def drain_uplink(self, now: float) -> list:
        """Ack frame (when dirty) plus due command (re)transmissions."""
        frames = []
        if self._ack_dirty:
            cum, sparse = self.store.ack_state()
            seq = self._command_seq
            self._command_seq += 1
            msg = DownlinkMessage(
                msg_type=MSG_COMMAND,
                seq=seq,
                t_gps_ns=int(round(now * 1e9)),
                payload=pack_json(
                    {"command": "ack", "type": MSG_ANALYTICS, "cum": cum, "sparse": sparse}
                ),
            )
            frames.append(encode(msg))
            self._ack_dirty = False
        for cmd in self.state.pending_commands.values():
            if cmd.status != "pending":
                continue
            if now - cmd.sent_at > COMMAND_MAX_WAIT_S:
                cmd.status = "timeout"
                self._publish("command", {"seq": cmd.seq, "status": "timeout"})
                continue
            if now >= cmd.next_retry:
                frames.append(self._command_frame(cmd, now))
                cmd.next_retry = now + cmd.interval
                cmd.interval = min(cmd.interval * COMMAND_BACKOFF, COMMAND_MAX_INTERVAL_S)
        return frames

    def close(self, metadata=None):
        stats = dict(self.state.link)
        meta = {"link": stats}
        meta.update(metadata or {})
        self.store.close(meta)
