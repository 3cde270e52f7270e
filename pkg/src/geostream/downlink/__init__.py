"""Payload-to-station wire protocol, scheduling, link simulation, sessions."""

from .wire import (
    MSG_ANALYTICS,
    MSG_COMMAND,
    MSG_COMMAND_ACK,
    MSG_DIAGNOSTICS,
    MSG_HISTOGRAM,
    MSG_SHARPNESS,
    MSG_TELEMETRY,
    MSG_THUMBNAIL,
    DownlinkMessage,
    FrameDecoder,
    decode,
    encode,
)
from .schedule import PriorityQueues, schedule
from .linksim import LinkProfile, LinkSimulator, simulate_link

__all__ = [
    "DownlinkMessage",
    "FrameDecoder",
    "encode",
    "decode",
    "MSG_TELEMETRY",
    "MSG_THUMBNAIL",
    "MSG_HISTOGRAM",
    "MSG_SHARPNESS",
    "MSG_ANALYTICS",
    "MSG_DIAGNOSTICS",
    "MSG_COMMAND",
    "MSG_COMMAND_ACK",
    "PriorityQueues",
    "schedule",
    "LinkProfile",
    "LinkSimulator",
    "simulate_link",
]
