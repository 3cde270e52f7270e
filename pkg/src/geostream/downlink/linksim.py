"""Lossy wireless link simulation: token-bucket bandwidth, latency, drops.

The token bucket's capacity is one maximum frame, so bytes released in any
one-second window never exceed the configured bandwidth plus one frame.
Blackout windows drop every frame whose transmission overlaps them, which
is what a severed radio path does to partially sent frames.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from ..errors import DomainError

DEFAULT_MAX_FRAME_BYTES = 65536


@dataclass(frozen=True)
class LinkProfile:
    bandwidth_bps: float
    latency_ms: float = 20.0
    drop_probability: float = 0.0
    blackout_windows: tuple = ()  # ((start_s, end_s), ...) in mission seconds

    def __post_init__(self):
        if self.bandwidth_bps <= 0:
            raise DomainError("bandwidth must be positive")
        if not (0.0 <= self.drop_probability <= 1.0):
            raise DomainError("drop probability outside [0, 1]")
        windows = sorted(tuple(w) for w in self.blackout_windows)
        for (a0, a1), (b0, b1) in zip(windows, windows[1:]):
            if b0 < a1:
                raise DomainError("blackout windows overlap")
        object.__setattr__(self, "blackout_windows", tuple(windows))

    def in_blackout(self, t0: float, t1: float | None = None) -> bool:
        t1 = t0 if t1 is None else t1
        for start, end in self.blackout_windows:
            if t0 < end and t1 > start:
                return True
        return False

    @classmethod
    def from_json(cls, path) -> "LinkProfile":
        with open(path) as f:
            raw = json.load(f)
        return cls(
            bandwidth_bps=raw["bandwidth_bps"],
            latency_ms=raw.get("latency_ms", 20.0),
            drop_probability=raw.get("drop_probability", 0.0),
            blackout_windows=tuple(tuple(w) for w in raw.get("blackout_windows", ())),
        )


@dataclass
class DeliveryRecord:
    size: int
    t_submit: float
    t_delivered: float | None  # None = dropped
    reason: str = "ok"


class LinkSimulator:
    """Single-direction link with serialization, latency, drops, blackouts.

    Deterministic for a fixed seed. Time is the caller's simulated mission
    clock in seconds.
    """

    def __init__(self, profile: LinkProfile, seed: int = 0, max_frame_bytes=DEFAULT_MAX_FRAME_BYTES):
        self.profile = profile
        self.rng = np.random.default_rng(seed)
        self.max_frame_bytes = max_frame_bytes
        self._tokens = float(max_frame_bytes)
        self._last_refill = None
        self._tx_free_at = 0.0
        self.records: list = []

    def can_send(self, size: int, now: float) -> bool:
        self._refill(now)
        return self._tokens >= size

    def _refill(self, now: float):
        if self._last_refill is None:
            self._last_refill = now
        dt = max(0.0, now - self._last_refill)
        self._tokens = min(
            float(self.max_frame_bytes), self._tokens + dt * self.profile.bandwidth_bps / 8.0
        )
        self._last_refill = now

    def send(self, size: int, now: float):
        """Submit one frame; returns delivery time or None when dropped."""
        if size > self.max_frame_bytes:
            raise DomainError(f"frame of {size} B exceeds link MTU {self.max_frame_bytes}")
        self._refill(now)
        self._tokens -= size  # may dip below zero; caller paces with can_send
        tx_time = size * 8.0 / self.profile.bandwidth_bps
        start = max(now, self._tx_free_at)
        end = start + tx_time
        self._tx_free_at = end
        record = DeliveryRecord(size=size, t_submit=now, t_delivered=None)
        self.records.append(record)
        if self.profile.in_blackout(start, end):
            record.reason = "blackout"
            return None
        if self.profile.drop_probability > 0 and self.rng.random() < self.profile.drop_probability:
            record.reason = "drop"
            return None
        record.t_delivered = end + self.profile.latency_ms / 1000.0
        return record.t_delivered


def simulate_link(profile: LinkProfile, frames, seed: int = 0):
    """Run a timed frame stream through the link.

    `frames` is an iterable of (t_submit_s, frame_bytes). Returns a list of
    (t_delivered_or_None, frame_bytes) plus the simulator for its records.
    Frames are paced by the token bucket: a frame waits until the bucket
    covers it.
    """
    sim = LinkSimulator(profile, seed=seed)
    out = []
    ready_at = 0.0
    for t, frame in frames:
        now = max(float(t), ready_at)
        size = len(frame)
        # Wait for tokens at the bandwidth rate if the bucket is short.
        sim._refill(now)
        if sim._tokens < size:
            deficit = size - sim._tokens
            now += deficit * 8.0 / profile.bandwidth_bps
        delivered = sim.send(size, now)
        ready_at = sim._tx_free_at
        out.append((delivered, frame))
    return out, sim
