"""Durable per-mission storage.

Layout under the mission directory:

    analytics.log   canonical record log: analytics frames, length-prefixed,
                    committed strictly in seq order (the reassembly output);
                    byte-identical across runs whenever the same frames were
                    produced, regardless of link behavior
    staging/        out-of-order analytics persisted-but-not-yet-committed,
                    one file per seq (durability precedes acknowledgment)
    capture.log     every received frame in arrival order (replay input)
    mission.json    metadata + link statistics, written at close

Restart recovery rebuilds the index from analytics.log (resync-on-magic)
plus whatever staging files survived; an acknowledged frame is therefore
always recovered.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

from ..errors import SpoolError
from ..downlink.wire import FrameDecoder, decode

_LEN_FMT = ">I"


class MissionStore:
    def __init__(self, directory, mission_id: str = "mission"):
        self.dir = Path(directory)
        self.mission_id = mission_id
        self.staging_dir = self.dir / "staging"
        self.staging_dir.mkdir(parents=True, exist_ok=True)
        self.analytics_log = self.dir / "analytics.log"
        self.capture_log = self.dir / "capture.log"
        self._analytics_fh = open(self.analytics_log, "ab")
        self._capture_fh = open(self.capture_log, "ab")
        self.committed: list = []  # seqs in commit order
        self.staged: dict = {}  # seq -> staging path
        self.next_commit = 0
        self.fail_persist = False  # test hook: simulate a dead disk
        self._recover()

    def _recover(self):
        if self.analytics_log.exists() and self.analytics_log.stat().st_size:
            with open(self.analytics_log, "rb") as f:
                decoder = FrameDecoder()
                msgs = decoder.feed(f.read()) + decoder.finish()
                for msg in msgs:
                    self.committed.append(msg.seq)
            if self.committed:
                self.next_commit = self.committed[-1] + 1
        for path in sorted(self.staging_dir.glob("*.bin")):
            seq = int(path.stem)
            if seq >= self.next_commit:
                self.staged[seq] = path
        self._commit_contiguous()

    # --- analytics -----------------------------------------------------

    def has_analytics(self, seq: int) -> bool:
        # Commits are strictly in order from zero, so committed == [0, next_commit).
        return seq < self.next_commit or seq in self.staged

    def persist_analytics(self, seq: int, frame: bytes) -> None:
        """Durably store one analytics frame; must precede any acknowledgment."""
        if self.fail_persist:
            raise SpoolError("injected persistence failure")
        if self.has_analytics(seq):
            return
        path = self.staging_dir / f"{seq:08d}.bin"
        tmp = path.with_suffix(".tmp")
        with open(tmp, "wb") as f:
            f.write(frame)
            f.flush()
        tmp.rename(path)
        self.staged[seq] = path
        self._commit_contiguous()

    def _commit_contiguous(self):
        while self.next_commit in self.staged:
            seq = self.next_commit
            frame = self.staged[seq].read_bytes()
            self._analytics_fh.write(struct.pack(_LEN_FMT, len(frame)))
            self._analytics_fh.write(frame)
            self._analytics_fh.flush()
            self.staged[seq].unlink()
            del self.staged[seq]
            self.committed.append(seq)
            self.next_commit = seq + 1

    def ack_state(self):
        """(cum, sparse): highest contiguous persisted seq plus outliers."""
        cum = self.next_commit - 1
        return cum, sorted(self.staged)

    def iter_analytics(self):
        """Decoded analytics messages in seq order (committed then staged)."""
        if self.analytics_log.exists():
            with open(self.analytics_log, "rb") as f:
                data = f.read()
            decoder = FrameDecoder()
            for msg in decoder.feed(data) + decoder.finish():
                yield msg
        for seq in sorted(self.staged):
            yield decode(self.staged[seq].read_bytes())

    # --- capture ---------------------------------------------------------

    def record_capture(self, frame: bytes) -> None:
        self._capture_fh.write(struct.pack(_LEN_FMT, len(frame)))
        self._capture_fh.write(frame)

    # --- lifecycle -------------------------------------------------------

    def close(self, metadata: dict | None = None) -> None:
        self._analytics_fh.flush()
        self._capture_fh.flush()
        self._analytics_fh.close()
        self._capture_fh.close()
        meta = {"mission_id": self.mission_id, "analytics_committed": len(self.committed)}
        meta.update(metadata or {})
        with open(self.dir / "mission.json", "w") as f:
            json.dump(meta, f, indent=2, sort_keys=True)


def read_capture(path):
    """All frames from a capture log in arrival order."""
    with open(path, "rb") as f:
        data = f.read()
    decoder = FrameDecoder()
    return decoder.feed(data) + decoder.finish()
