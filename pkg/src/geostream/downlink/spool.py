"""On-disk frame spool: length-prefixed encoded frames, crash-recoverable.

Every analytics frame is written ahead of transmission, so a blackout that
outlives the mission still leaves the full record on disk. Recovery scans
for frame magic and revalidates CRCs, skipping torn tails.
"""

from __future__ import annotations

import struct
from pathlib import Path

from ..errors import SpoolError
from .wire import FrameDecoder

_LEN_FMT = ">I"


class Spool:
    def __init__(self, path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = open(self.path, "ab")
        self._offsets: dict = {}  # (msg_type, seq) -> (offset, length)

    def append(self, msg_type: int, seq: int, frame: bytes) -> int:
        """Write one frame; returns its offset. Raises SpoolError on failure."""
        try:
            offset = self._fh.tell()
            self._fh.write(struct.pack(_LEN_FMT, len(frame)))
            self._fh.write(frame)
            self._fh.flush()
        except OSError as exc:
            raise SpoolError(f"spool write failed: {exc}") from exc
        self._offsets[(msg_type, seq)] = (offset, len(frame))
        return offset

    def read(self, msg_type: int, seq: int) -> bytes:
        offset, length = self._offsets[(msg_type, seq)]
        with open(self.path, "rb") as f:
            f.seek(offset + struct.calcsize(_LEN_FMT))
            return f.read(length)

    def close(self):
        self._fh.close()


def read_spool(path):
    """Recover every valid frame from a spool file, resyncing on magic."""
    decoder = FrameDecoder()
    frames = []
    with open(path, "rb") as f:
        data = f.read()
    # Strip the length prefixes by letting the deframer resync; prefixes are
    # not valid magic so they are skipped as garbage.
    frames.extend(decoder.feed(data))
    frames.extend(decoder.finish())
    return frames


class FailingSpool(Spool):
    """Test double: fails after `allow` writes to exercise the spill path."""

    def __init__(self, path, allow: int = 0):
        super().__init__(path)
        self._allow = allow

    def append(self, msg_type, seq, frame):
        if self._allow <= 0:
            raise SpoolError("injected spool failure")
        self._allow -= 1
        return super().append(msg_type, seq, frame)
