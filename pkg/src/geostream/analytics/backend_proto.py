"""Out-of-process segmenter protocol over a local byte-stream socket.

Lets GPU inference processes plug in without being linked: the pipeline
sends an image header plus raw pixels, the backend process answers with a
mask header plus class bytes.

Request:  magic "SGRQ" | u16 id_len | id utf8 | u32 width | u32 height |
          u32 stride | u8 pixel_format (1 = gray8, 3 = rgb8) | pixels
Response: magic "SGRS" | u16 id_len | id utf8 | u32 width | u32 height |
          class bytes (height * width)

All integers big-endian. One request per response, pipelined in order.
"""

from __future__ import annotations

import socket
import struct

import numpy as np

from ..errors import ContractError
from .segment import DEFAULT_CLASS_TABLE, SegmenterBackend

REQUEST_MAGIC = b"SGRQ"
RESPONSE_MAGIC = b"SGRS"

PIXEL_GRAY8 = 1
PIXEL_RGB8 = 3


def _recv_exact(sock: socket.socket, n: int) -> bytes:
    buf = bytearray()
    while len(buf) < n:
        chunk = sock.recv(n - len(buf))
        if not chunk:
            raise ContractError("backend socket closed mid-message")
        buf += chunk
    return bytes(buf)


def send_request(sock: socket.socket, image_id: str, image: np.ndarray) -> None:
    image = np.ascontiguousarray(image)
    if image.ndim == 2:
        fmt = PIXEL_GRAY8
        stride = image.shape[1]
    elif image.ndim == 3 and image.shape[2] == 3:
        fmt = PIXEL_RGB8
        stride = image.shape[1] * 3
    else:
        raise ContractError(f"unsupported image shape {image.shape}")
    ident = image_id.encode()
    head = REQUEST_MAGIC + struct.pack(
        ">HIIIB", len(ident), image.shape[1], image.shape[0], stride, fmt
    )
    sock.sendall(head + ident + image.astype(np.uint8).tobytes())


def recv_request(sock: socket.socket):
    magic = _recv_exact(sock, 4)
    if magic != REQUEST_MAGIC:
        raise ContractError(f"bad request magic {magic!r}")
    id_len, width, height, stride, fmt = struct.unpack(">HIIIB", _recv_exact(sock, 15))
    image_id = _recv_exact(sock, id_len).decode()
    n = stride * height
    raw = np.frombuffer(_recv_exact(sock, n), dtype=np.uint8)
    if fmt == PIXEL_GRAY8:
        image = raw.reshape(height, stride)[:, :width]
    elif fmt == PIXEL_RGB8:
        image = raw.reshape(height, stride)[:, : width * 3].reshape(height, width, 3)
    else:
        raise ContractError(f"unknown pixel format {fmt}")
    return image_id, image


def send_response(sock: socket.socket, image_id: str, classes: np.ndarray) -> None:
    ident = image_id.encode()
    head = RESPONSE_MAGIC + struct.pack(
        ">HII", len(ident), classes.shape[1], classes.shape[0]
    )
    sock.sendall(head + ident + np.ascontiguousarray(classes, dtype=np.uint8).tobytes())


def recv_response(sock: socket.socket):
    magic = _recv_exact(sock, 4)
    if magic != RESPONSE_MAGIC:
        raise ContractError(f"bad response magic {magic!r}")
    id_len, width, height = struct.unpack(">HII", _recv_exact(sock, 10))
    image_id = _recv_exact(sock, id_len).decode()
    classes = np.frombuffer(_recv_exact(sock, width * height), dtype=np.uint8).reshape(
        height, width
    )
    return image_id, classes.copy()


def serve_backend(sock: socket.socket, backend: SegmenterBackend, max_requests=None):
    """Answer segmentation requests on a connected socket until EOF."""
    served = 0
    while max_requests is None or served < max_requests:
        try:
            image_id, image = recv_request(sock)
        except ContractError:
            return served
        send_response(sock, image_id, backend.run(image))
        served += 1
    return served


class SocketSegmenterBackend(SegmenterBackend):
    """Client-side backend speaking the socket protocol to a remote process."""

    name = "socket"
    class_table = DEFAULT_CLASS_TABLE

    def __init__(self, sock: socket.socket, name: str = "socket"):
        self._sock = sock
        self.name = name
        self._counter = 0

    def run(self, image: np.ndarray) -> np.ndarray:
        image_id = f"req_{self._counter}"
        self._counter += 1
        send_request(self._sock, image_id, image)
        resp_id, classes = recv_response(self._sock)
        if resp_id != image_id:
            raise ContractError(f"response id {resp_id!r} does not match {image_id!r}")
        if classes.shape != image.shape[:2]:
            raise ContractError(
                f"backend returned {classes.shape}, expected {image.shape[:2]}"
            )
        return classes
