"""LEB128-style varints and zig-zag signed variants used by wire encodings."""

from __future__ import annotations

from .errors import IntegrityError


def write_uvarint(buf: bytearray, value: int) -> None:
    if value < 0:
        raise ValueError("uvarint cannot encode negatives")
    while True:
        b = value & 0x7F
        value >>= 7
        if value:
            buf.append(b | 0x80)
        else:
            buf.append(b)
            return


def read_uvarint(data: bytes, pos: int) -> tuple[int, int]:
    shift = 0
    value = 0
    while True:
        if pos >= len(data):
            raise IntegrityError("truncated varint")
        b = data[pos]
        pos += 1
        value |= (b & 0x7F) << shift
        if not b & 0x80:
            return value, pos
        shift += 7
        if shift > 63:
            raise IntegrityError("varint too long")


def zigzag(value: int) -> int:
    return (-value << 1) - 1 if value < 0 else value << 1


def unzigzag(value: int) -> int:
    return (value >> 1) ^ -(value & 1)


def write_svarint(buf: bytearray, value: int) -> None:
    write_uvarint(buf, zigzag(value))


def read_svarint(data: bytes, pos: int) -> tuple[int, int]:
    raw, pos = read_uvarint(data, pos)
    return unzigzag(raw), pos
