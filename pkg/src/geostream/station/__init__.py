"""Ground station: durable ingest, live mission state, export, HTTP API."""

from .store import MissionStore
from .state import MissionState, Station
from .export import export_mission

__all__ = ["MissionStore", "MissionState", "Station", "export_mission"]
