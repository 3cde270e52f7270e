"""Payload-side session: queues, scheduling, acks, retransmission, spool.

Reliability split:
  - analytics: write-ahead to the on-disk spool, ack + retransmit with a
    2 s timeout backing off x2 to 30 s; exactly-once at the station by seq.
  - command acks: sent once per received command; the station retransmits
    commands, the payload re-acks duplicates, so no payload-side timer.
  - telemetry / histogram / sharpness / thumbnail: lossy-latest.

Analytics acks ride the station's command channel (type 7) as
{"command": "ack", "type": 5, "cum": N, "sparse": [...]}: everything at or
below `cum` plus the sparse list has been persisted station-side.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import SpoolError
from .linksim import LinkProfile, LinkSimulator
from .schedule import PriorityQueues, schedule
from .spool import Spool
from .wire import (
    MSG_ANALYTICS,
    MSG_COMMAND,
    MSG_COMMAND_ACK,
    MSG_DIAGNOSTICS,
    DownlinkMessage,
    decode,
    encode,
    pack_json,
    unpack_json,
)

RETRANS_TIMEOUT_S = 2.0
RETRANS_BACKOFF = 2.0
RETRANS_MAX_S = 30.0
DEFAULT_TICK_S = 0.01
DEFAULT_DRAIN_S = 90.0


@dataclass
class EmitRecord:
    msg_type: int
    seq: int
    t_emit: float
    size: int
    attempts: int = 0
    t_delivered: float | None = None


@dataclass
class SessionResult:
    records: list
    emitted: dict
    spool_path: str
    unacked_analytics: list
    diagnostics_events: list = field(default_factory=list)

    def delivered_count(self, msg_type: int) -> int:
        return sum(
            1 for r in self.records if r.msg_type == msg_type and r.t_delivered is not None
        )


class PayloadSession:
    """Single-mission payload state machine driven by a simulated clock."""

    def __init__(self, spool: Spool, initial_exposure_us: float = 500.0, t_gps_offset_s: float = 0.0):
        self.t_gps_offset_s = t_gps_offset_s
        self.queues = PriorityQueues()
        self.spool = spool
        self.seq_counters = {t: 0 for t in range(1, 9)}
        self.unacked: dict = {}  # seq -> EmitRecord
        self.retry_at: dict = {}  # seq -> (next_retry_t, interval)
        self.exposure_limit_us = initial_exposure_us
        self.records: list = []
        self.emitted = {t: 0 for t in range(1, 9)}
        self.diagnostics_events: list = []
        self._seen_commands: set = set()

    def next_seq(self, msg_type: int) -> int:
        seq = self.seq_counters[msg_type]
        self.seq_counters[msg_type] = seq + 1
        return seq

    def emit(self, msg_type: int, payload: bytes, t: float):
        """Producer-facing: assign seq, encode, enqueue (and spool analytics)."""
        if msg_type == MSG_DIAGNOSTICS:
            base = unpack_json(payload)
            base["max_exposure_us"] = self.exposure_limit_us
            payload = pack_json(base)
        seq = self.next_seq(msg_type)
        msg = DownlinkMessage(
            msg_type=msg_type,
            seq=seq,
            t_gps_ns=int(round((t + self.t_gps_offset_s) * 1e9)),
            payload=payload,
        )
        frame = encode(msg)
        record = EmitRecord(msg_type=msg_type, seq=seq, t_emit=t, size=len(frame))
        self.records.append(record)
        self.emitted[msg_type] += 1
        if msg_type == MSG_ANALYTICS:
            try:
                self.spool.append(msg_type, seq, frame)
            except SpoolError as exc:
                evicted = self.queues.evict_oldest_thumbnail()
                diag = {
                    "event": "spool_failure",
                    "error": str(exc),
                    "thumbnail_evicted": evicted is not None,
                }
                self.diagnostics_events.append(diag)
                self.emit(MSG_DIAGNOSTICS, pack_json(diag), t)
            self.unacked[seq] = record
            self.retry_at[seq] = (math.inf, RETRANS_TIMEOUT_S)  # set on first send
        self.queues.push(msg_type, frame, record)
        return record

    def handle_uplink(self, frame_bytes: bytes, now: float):
        """Process one station-to-payload frame (commands and analytics acks)."""
        msg = decode(frame_bytes)
        if msg.msg_type != MSG_COMMAND:
            return
        body = unpack_json(msg.payload)
        if body.get("command") == "ack" and body.get("type") == MSG_ANALYTICS:
            cum = body.get("cum", -1)
            acked = {s for s in self.unacked if s <= cum}
            acked.update(s for s in body.get("sparse", ()) if s in self.unacked)
            for seq in acked:
                self.unacked.pop(seq, None)
                self.retry_at.pop(seq, None)
            return
        if body.get("command") == "set_max_exposure_us":
            if msg.seq not in self._seen_commands:
                self._seen_commands.add(msg.seq)
                self.exposure_limit_us = float(body["value_us"])
            ack = {
                "command_seq": msg.seq,
                "status": "applied",
                "value_us": self.exposure_limit_us,
            }
            self.emit(MSG_COMMAND_ACK, pack_json(ack), now)

    def check_retransmits(self, now: float):
        """Re-queue analytics whose ack timer expired, with backoff."""
        for seq, (due, interval) in list(self.retry_at.items()):
            if due <= now and seq in self.unacked:
                frame = self.spool.read(MSG_ANALYTICS, seq)
                record = self.unacked[seq]
                # Front of the queue: oldest outstanding data first.
                self.queues.queue(MSG_ANALYTICS).appendleft((frame, record))
                next_interval = min(interval * RETRANS_BACKOFF, RETRANS_MAX_S)
                self.retry_at[seq] = (now + interval, next_interval)

    def mark_sent(self, record: EmitRecord, now: float):
        record.attempts += 1
        if record.msg_type == MSG_ANALYTICS and record.seq in self.retry_at:
            _, interval = self.retry_at[record.seq]
            self.retry_at[record.seq] = (now + interval, interval)


def run_payload_session(
    events,
    profile: LinkProfile,
    station,
    spool_path,
    tick_s: float = DEFAULT_TICK_S,
    drain_s: float = DEFAULT_DRAIN_S,
    seed: int = 0,
    initial_exposure_us: float = 500.0,
    spool_factory=Spool,
    t_gps_offset_s: float = 0.0,
) -> SessionResult:
    """Drive producer events through the link to the station, with acks back.

    `events` is an iterable of (t_s, msg_type, payload_bytes) sorted by time
    (mission seconds, also the link clock); `t_gps_offset_s` converts those
    to absolute GPS stamps on the wire. `station` must provide
    receive_frame(bytes, now) and drain_uplink(now) -> list[bytes].
    """
    events = sorted(events, key=lambda e: e[0])
    spool = spool_factory(spool_path)
    session = PayloadSession(
        spool, initial_exposure_us=initial_exposure_us, t_gps_offset_s=t_gps_offset_s
    )
    down = LinkSimulator(profile, seed=seed)
    up = LinkSimulator(profile, seed=seed + 1)
    down_inflight: list = []  # (t_deliver, idx, frame, record)
    up_inflight: list = []
    counter = 0

    t_end_events = events[-1][0] if events else 0.0
    now = events[0][0] if events else 0.0
    deadline = t_end_events + drain_s
    ev_idx = 0

    while now <= deadline:
        # 1. producer emissions due
        while ev_idx < len(events) and events[ev_idx][0] <= now:
            t, msg_type, payload = events[ev_idx]
            session.emit(msg_type, payload, t)
            ev_idx += 1
        # 2. uplink deliveries (acks, commands) into the payload
        while up_inflight and up_inflight[0][0] <= now:
            _, _, frame = heapq.heappop(up_inflight)
            session.handle_uplink(frame, now)
        # 3. retransmission timers
        session.check_retransmits(now)
        # 4. schedule within the link's available tokens
        down._refill(now)
        budget = int(down._tokens)
        if budget > 0:
            for msg_type, frame, record in schedule(session.queues, budget):
                delivered = down.send(len(frame), now)
                session.mark_sent(record, now)
                if delivered is not None:
                    counter += 1
                    heapq.heappush(down_inflight, (delivered, counter, frame, record))
        # 5. station receives due frames, then its uplink goes out
        while down_inflight and down_inflight[0][0] <= now:
            t_del, _, frame, record = heapq.heappop(down_inflight)
            if record.t_delivered is None:
                record.t_delivered = t_del
            station.receive_frame(frame, now)
        for frame in station.drain_uplink(now):
            up._refill(now)
            delivered = up.send(len(frame), now)
            if delivered is not None:
                counter += 1
                heapq.heappush(up_inflight, (delivered, counter, frame))
        # Stop early once everything is out and acknowledged.
        if (
            ev_idx >= len(events)
            and not session.unacked
            and not down_inflight
            and not up_inflight
            and len(session.queues) == 0
        ):
            break
        now = round(now + tick_s, 9)

    spool.close()
    return SessionResult(
        records=session.records,
        emitted=session.emitted,
        spool_path=str(spool_path),
        unacked_analytics=sorted(session.unacked),
        diagnostics_events=session.diagnostics_events,
    )
