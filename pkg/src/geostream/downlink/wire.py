"""Binary wire format shared by payload and station.

Frame layout, all big-endian:

    offset  size  field
    0       2     magic 0xAD 0x47
    2       1     version (currently 1)
    3       1     msg_type
    4       4     seq (u32, per-type counter)
    8       8     t_gps (u64 nanoseconds)
    16      4     payload_len (u32)
    20      n     payload
    20+n    4     crc32 over bytes [0, 20+n)

Decoding rejects bad magic, bad CRC, and length mismatches; the streaming
decoder resynchronizes on the next magic after garbage and counts what it
skipped.
"""

from __future__ import annotations

import json
import struct
import zlib
from dataclasses import dataclass

import numpy as np

from ..errors import DomainError, FramingError, IntegrityError

MAGIC = b"\xad\x47"
VERSION = 1
HEADER_LEN = 20
CRC_LEN = 4

MSG_TELEMETRY = 1
MSG_THUMBNAIL = 2
MSG_HISTOGRAM = 3
MSG_SHARPNESS = 4
MSG_ANALYTICS = 5
MSG_DIAGNOSTICS = 6
MSG_COMMAND = 7
MSG_COMMAND_ACK = 8

MSG_TYPES = (
    MSG_TELEMETRY,
    MSG_THUMBNAIL,
    MSG_HISTOGRAM,
    MSG_SHARPNESS,
    MSG_ANALYTICS,
    MSG_DIAGNOSTICS,
    MSG_COMMAND,
    MSG_COMMAND_ACK,
)

TYPE_NAMES = {
    MSG_TELEMETRY: "telemetry",
    MSG_THUMBNAIL: "thumbnail",
    MSG_HISTOGRAM: "histogram",
    MSG_SHARPNESS: "sharpness",
    MSG_ANALYTICS: "analytics",
    MSG_DIAGNOSTICS: "diagnostics",
    MSG_COMMAND: "command",
    MSG_COMMAND_ACK: "command_ack",
}


@dataclass(frozen=True)
class DownlinkMessage:
    msg_type: int
    seq: int
    t_gps_ns: int
    payload: bytes

    def __post_init__(self):
        if self.msg_type not in MSG_TYPES:
            raise DomainError(f"unknown msg_type {self.msg_type}")
        if not (0 <= self.seq < 2**32):
            raise DomainError(f"seq {self.seq} outside u32")
        if not (0 <= self.t_gps_ns < 2**64):
            raise DomainError(f"t_gps_ns {self.t_gps_ns} outside u64")
        if len(self.payload) >= 2**32:
            raise DomainError("payload too large")


def encode(msg: DownlinkMessage) -> bytes:
    head = MAGIC + struct.pack(
        ">BBIQI", VERSION, msg.msg_type, msg.seq, msg.t_gps_ns, len(msg.payload)
    )
    body = head + msg.payload
    return body + struct.pack(">I", zlib.crc32(body) & 0xFFFFFFFF)


def decode(frame: bytes) -> DownlinkMessage:
    if len(frame) < HEADER_LEN + CRC_LEN:
        raise FramingError(f"frame truncated at {len(frame)} bytes")
    if frame[:2] != MAGIC:
        raise FramingError("bad magic")
    version, msg_type, seq, t_gps, payload_len = struct.unpack(">BBIQI", frame[2:HEADER_LEN])
    if version != VERSION:
        raise IntegrityError(f"unsupported version {version}")
    total = HEADER_LEN + payload_len + CRC_LEN
    if len(frame) < total:
        raise FramingError(f"frame truncated: need {total}, have {len(frame)}")
    if len(frame) != total:
        raise IntegrityError(f"length mismatch: header says {total}, frame is {len(frame)}")
    (crc,) = struct.unpack(">I", frame[total - CRC_LEN : total])
    if crc != zlib.crc32(frame[: total - CRC_LEN]) & 0xFFFFFFFF:
        raise IntegrityError("crc mismatch")
    if msg_type not in MSG_TYPES:
        raise IntegrityError(f"unknown msg_type {msg_type}")
    return DownlinkMessage(
        msg_type=msg_type, seq=seq, t_gps_ns=t_gps, payload=frame[HEADER_LEN : total - CRC_LEN]
    )


class FrameDecoder:
    """Streaming deframer: feed bytes, yields messages, resyncs on garbage."""

    def __init__(self):
        self._buf = bytearray()
        self.crc_errors = 0
        self.resyncs = 0

    def feed(self, data: bytes):
        self._buf += data
        out = []
        while True:
            idx = self._buf.find(MAGIC)
            if idx < 0:
                # Keep the final byte in case it is half a magic.
                if len(self._buf) > 1:
                    self.resyncs += 1
                del self._buf[:-1]
                break
            if idx > 0:
                self.resyncs += 1
                del self._buf[:idx]
            if len(self._buf) < HEADER_LEN:
                break
            payload_len = struct.unpack(">I", self._buf[16:20])[0]
            total = HEADER_LEN + payload_len + CRC_LEN
            if len(self._buf) < total:
                # Could be a stale length from garbage; cap what we wait for.
                if payload_len > 1 << 28:
                    self.crc_errors += 1
                    del self._buf[:2]
                    continue
                break
            frame = bytes(self._buf[:total])
            try:
                out.append(decode(frame))
                del self._buf[:total]
            except (FramingError, IntegrityError):
                # Skip this magic and rescan from the next byte.
                self.crc_errors += 1
                del self._buf[:2]
        return out

    def finish(self):
        """Flush at end of stream: garbage pseudo-headers stop being waited on.

        During streaming, a header claiming more bytes than buffered might be
        a real frame still arriving; once the stream has ended it cannot be,
        so every stuck candidate is skipped and rescanned.
        """
        out = []
        while True:
            idx = self._buf.find(MAGIC)
            if idx < 0:
                self._buf.clear()
                return out
            del self._buf[:idx]
            if len(self._buf) < HEADER_LEN + CRC_LEN:
                self._buf.clear()
                return out
            payload_len = struct.unpack(">I", self._buf[16:20])[0]
            total = HEADER_LEN + payload_len + CRC_LEN
            if len(self._buf) < total:
                self.resyncs += 1
                del self._buf[:2]
                continue
            try:
                out.append(decode(bytes(self._buf[:total])))
                del self._buf[:total]
            except (FramingError, IntegrityError):
                self.crc_errors += 1
                del self._buf[:2]


# --- payload codecs ---------------------------------------------------------

_TELEMETRY_FMT = ">dddddddH"


def pack_telemetry(pose) -> bytes:
    q = pose.attitude
    return struct.pack(
        _TELEMETRY_FMT,
        pose.position.lat_deg,
        pose.position.lon_deg,
        pose.position.alt_m,
        q.w,
        q.x,
        q.y,
        q.z,
        pose.status,
    )


def unpack_telemetry(payload: bytes) -> dict:
    lat, lon, alt, qw, qx, qy, qz, status = struct.unpack(_TELEMETRY_FMT, payload)
    return {
        "lat_deg": lat,
        "lon_deg": lon,
        "alt_m": alt,
        "q_wxyz": [qw, qx, qy, qz],
        "status": status,
    }


def pack_histogram(bins, exposure_us: float) -> bytes:
    arr = np.asarray(bins, dtype=">u4")
    if arr.shape != (256,):
        raise DomainError("histogram payload needs 256 bins")
    return struct.pack(">f", exposure_us) + arr.tobytes()


def unpack_histogram(payload: bytes):
    (exposure_us,) = struct.unpack(">f", payload[:4])
    bins = np.frombuffer(payload[4:], dtype=">u4").astype(np.int64)
    return bins, float(exposure_us)


def pack_sharpness(report) -> bytes:
    grid = np.asarray(report.tile_grid, dtype=">f4")
    rows, cols = grid.shape
    head = struct.pack(">HHff", rows, cols, report.global_score, report.exposure_us)
    return head + grid.tobytes()


def unpack_sharpness(payload: bytes) -> dict:
    rows, cols, global_score, exposure_us = struct.unpack(">HHff", payload[:12])
    grid = np.frombuffer(payload[12:], dtype=">f4").reshape(rows, cols)
    return {
        "global_score": float(global_score),
        "exposure_us": float(exposure_us),
        "tile_grid": grid.astype(float),
    }


def pack_json(obj) -> bytes:
    return json.dumps(obj, separators=(",", ":"), sort_keys=True).encode()


def unpack_json(payload: bytes):
    return json.loads(payload.decode())


def pack_thumbnail(image_id: str, jpeg: bytes) -> bytes:
    ident = image_id.encode()
    return struct.pack(">H", len(ident)) + ident + jpeg


def unpack_thumbnail(payload: bytes):
    (n,) = struct.unpack(">H", payload[:2])
    return payload[2 : 2 + n].decode(), payload[2 + n :]
