"""Priority scheduling of encoded frames under a per-tick byte budget.

Strict class priority (telemetry first, thumbnails last), FIFO within a
class, and whole-frame-or-nothing per tick: when the head frame of the
highest non-empty class does not fit the remaining budget, the pass ends
and unused budget stays in the caller's token bucket, so large analytics
frames accumulate credit instead of being bypassed forever.

Reliability split: analytics/command/command-ack queues are drained by the
session layer's retransmission machinery and never dropped here; telemetry,
histogram, sharpness, and thumbnail queues are lossy-latest (a newer frame
supersedes a queued older one of the same kind).
"""

from __future__ import annotations

from collections import deque

from ..errors import DomainError
from .wire import (
    MSG_ANALYTICS,
    MSG_COMMAND_ACK,
    MSG_DIAGNOSTICS,
    MSG_HISTOGRAM,
    MSG_SHARPNESS,
    MSG_TELEMETRY,
    MSG_THUMBNAIL,
)

# High to low; histogram and sharpness share a class.
PRIORITY_ORDER = (
    (MSG_TELEMETRY,),
    (MSG_COMMAND_ACK,),
    (MSG_DIAGNOSTICS,),
    (MSG_ANALYTICS,),
    (MSG_HISTOGRAM, MSG_SHARPNESS),
    (MSG_THUMBNAIL,),
)

LOSSY_LATEST = {MSG_TELEMETRY, MSG_HISTOGRAM, MSG_SHARPNESS, MSG_THUMBNAIL}


class PriorityQueues:
    """Per-type FIFO queues of (frame_bytes, meta) with lossy-latest rules."""

    def __init__(self):
        self._queues = {t: deque() for group in PRIORITY_ORDER for t in group}

    def push(self, msg_type: int, frame: bytes, meta=None):
        q = self._queues[msg_type]
        if msg_type in LOSSY_LATEST and q:
            q.clear()  # newer supersedes older; these streams refresh constantly
        q.append((frame, meta))

    def __len__(self):
        return sum(len(q) for q in self._queues.values())

    def queued_bytes(self, msg_type=None) -> int:
        if msg_type is not None:
            return sum(len(f) for f, _ in self._queues[msg_type])
        return sum(len(f) for q in self._queues.values() for f, _ in q)

    def evict_oldest_thumbnail(self):
        q = self._queues[MSG_THUMBNAIL]
        return q.popleft() if q else None

    def queue(self, msg_type: int) -> deque:
        return self._queues[msg_type]


def schedule(queues: PriorityQueues, budget_bytes: int) -> list:
    """Drain queues into an ordered batch within the byte budget.

    Returns a list of (msg_type, frame_bytes, meta). Stops at the first head
    frame that does not fit; the caller keeps the unused budget.
    """
    if budget_bytes <= 0:
        raise DomainError("schedule budget must be positive")
    remaining = budget_bytes
    batch = []
    for group in PRIORITY_ORDER:
        for msg_type in group:
            q = queues.queue(msg_type)
            while q:
                frame, meta = q[0]
                if len(frame) > remaining:
                    return batch
                q.popleft()
                batch.append((msg_type, frame, meta))
                remaining -= len(frame)
    return batch
