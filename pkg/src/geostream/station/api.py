"""Operator-facing HTTP API: queries, exports, live event stream, commands.

Endpoints:
    GET  /missions                         list mission summaries
    GET  /missions/{id}/export.geojson     analytics as GeoJSON
    GET  /missions/{id}/report             mission report
    GET  /stream?topics=pose,analytics     server-sent events for live topics
    POST /command/exposure                 {"value_us": n} exposure-limit update
    GET  /command/{seq}                    command lifecycle status

Thumbnails travel on the stream base64-wrapped; polygon coordinates are
emitted verbatim from station payloads so the console never re-derives
geodesy beyond its display projection.
"""

from __future__ import annotations

import asyncio
import base64
import json
import threading
from collections import deque
from pathlib import Path

from fastapi import FastAPI, HTTPException
from fastapi.responses import JSONResponse, StreamingResponse
from pydantic import BaseModel

from ..errors import DomainError
from .export import export_mission
from .store import MissionStore

ALL_TOPICS = ("pose", "thumbnail", "histogram", "sharpness", "analytics", "diagnostics", "link", "command")


class EventBus:
    """Thread-safe fan-out of (topic, payload) events to SSE subscribers."""

    def __init__(self, history: int = 256):
        self._lock = threading.Lock()
        self._subscribers: list = []
        self._history: deque = deque(maxlen=history)
        self._next_id = 0

    def publish(self, topic: str, payload: dict):
        if topic == "thumbnail" and "jpeg" in payload:
            payload = dict(payload)
            payload["jpeg_b64"] = base64.b64encode(payload.pop("jpeg")).decode()
        with self._lock:
            event = (self._next_id, topic, payload)
            self._next_id += 1
            self._history.append(event)
            for q in self._subscribers:
                q.append(event)

    def subscribe(self, replay_history: bool = True):
        q: deque = deque()
        with self._lock:
            if replay_history:
                q.extend(self._history)
            self._subscribers.append(q)
        return q

    def unsubscribe(self, q):
        with self._lock:
            if q in self._subscribers:
                self._subscribers.remove(q)


class ExposureCommand(BaseModel):
    value_us: float


def _mission_dirs(root: Path):
    for child in sorted(root.iterdir()):
        if (child / "store" / "mission.json").exists() or (child / "store").is_dir():
            yield child


def create_app(missions_root, bus: EventBus | None = None, command_handler=None) -> FastAPI:
    """Build the station API over a directory of mission outputs.

    `command_handler(value_us) -> dict` routes exposure commands to a live
    uplink when one exists; without it the endpoint reports no-uplink.
    """
    root = Path(missions_root)
    app = FastAPI(title="geostream station")
    app.state.bus = bus or EventBus()
    app.state.command_handler = command_handler
    app.state.command_log = {}

    @app.get("/missions")
    def missions():
        out = []
        for mdir in _mission_dirs(root):
            meta_path = mdir / "store" / "mission.json"
            meta = json.loads(meta_path.read_text()) if meta_path.exists() else {}
            summary_path = mdir / "mission_summary.json"
            if summary_path.exists():
                meta["summary"] = json.loads(summary_path.read_text())
            meta["id"] = mdir.name
            out.append(meta)
        return out

    def _mission_dir(mission_id: str) -> Path:
        mdir = root / mission_id
        if not mdir.is_dir() or not (mdir / "store").is_dir():
            raise HTTPException(status_code=404, detail=f"no mission {mission_id!r}")
        return mdir

    @app.get("/missions/{mission_id}/export.geojson")
    def export_geojson(mission_id: str):
        mdir = _mission_dir(mission_id)
        cached = mdir / "export.geojson"
        if cached.exists():
            return JSONResponse(json.loads(cached.read_text()))
        store = MissionStore(mdir / "store", mission_id=mission_id)
        fc, _ = export_mission(store)
        return JSONResponse(fc)

    @app.get("/missions/{mission_id}/report")
    def report(mission_id: str):
        mdir = _mission_dir(mission_id)
        cached = mdir / "report.json"
        if cached.exists():
            return JSONResponse(json.loads(cached.read_text()))
        store = MissionStore(mdir / "store", mission_id=mission_id)
        _, rep = export_mission(store)
        return JSONResponse(rep)

    @app.get("/stream")
    async def stream(topics: str = "", max_events: int = 0):
        """SSE stream; max_events > 0 ends the stream after that many events
        (bounded consumers, tests, curl probes)."""
        wanted = set(t.strip() for t in topics.split(",") if t.strip()) or set(ALL_TOPICS)
        unknown = wanted - set(ALL_TOPICS)
        if unknown:
            raise HTTPException(status_code=400, detail=f"unknown topics {sorted(unknown)}")
        q = app.state.bus.subscribe()

        async def gen():
            emitted = 0
            try:
                while True:
                    sent = False
                    while q:
                        event_id, topic, payload = q.popleft()
                        if topic in wanted:
                            yield (
                                f"id: {event_id}\nevent: {topic}\n"
                                f"data: {json.dumps(payload)}\n\n"
                            )
                            sent = True
                            emitted += 1
                            if max_events and emitted >= max_events:
                                return
                    if not sent:
                        yield ": keepalive\n\n"
                        await asyncio.sleep(0.05)
            finally:
                app.state.bus.unsubscribe(q)

        return StreamingResponse(gen(), media_type="text/event-stream")

    @app.post("/command/exposure")
    def command_exposure(cmd: ExposureCommand):
        handler = app.state.command_handler
        if handler is None:
            raise HTTPException(status_code=503, detail="no live uplink attached")
        try:
            result = handler(cmd.value_us)
        except DomainError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        app.state.command_log[result["seq"]] = result
        return result

    @app.get("/command/{seq}")
    def command_status(seq: int):
        result = app.state.command_log.get(seq)
        if result is None:
            raise HTTPException(status_code=404, detail=f"no command {seq}")
        if callable(result.get("refresh")):
            result = {**result["refresh"](), "seq": seq}
        return {k: v for k, v in result.items() if not callable(v)}

    return app
