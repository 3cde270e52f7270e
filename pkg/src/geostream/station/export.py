"""Mission product export: GeoJSON FeatureCollection plus a summary report.

Coverage area is the union area of all exported polygons, computed by
rasterizing them onto a local ENU grid anchored at the median vertex.
"""

from __future__ import annotations

import json

import numpy as np

from ..analytics.vectorize import rasterize_class_rings
from ..geodesy import EnuFrame, GeodeticPosition, geodetic_to_enu_array
from ..georef import decode_polygon_set_payload, feature_collection
from .store import MissionStore


def _collect_polygon_sets(store: MissionStore):
    sets = []
    for msg in store.iter_analytics():
        try:
            sets.append(decode_polygon_set_payload(msg.payload))
        except Exception:
            continue
    return sets


def union_area_m2(polygon_sets, cell_m: float = 0.5) -> float:
    """Union area of every ring across the mission, even-odd per image.

    Images overlap, so rasters are OR-ed across polygon sets after even-odd
    filling within each set (holes subtract inside their own image only).
    """
    rings_per_set = []
    all_pts = []
    for ps in polygon_sets:
        rings = []
        for poly in ps.polygons:
            for ring in (poly.outer, *poly.holes):
                pts = np.array([[p.lon_deg, p.lat_deg] for p in ring.points])
                rings.append(pts)
                all_pts.append(pts)
        if rings:
            rings_per_set.append(rings)
    if not all_pts:
        return 0.0
    stacked = np.vstack(all_pts)
    origin = GeodeticPosition(
        float(np.median(stacked[:, 1])), float(np.median(stacked[:, 0])), 0.0
    )
    frame = EnuFrame(origin)

    def to_enu(rings):
        out = []
        for pts in rings:
            enu = geodetic_to_enu_array(pts[:, 1], pts[:, 0], np.zeros(len(pts)), frame)
            out.append(enu[:, :2])
        return out

    enu_sets = [to_enu(r) for r in rings_per_set]
    all_enu = np.vstack([np.vstack(r) for r in enu_sets])
    e_min, n_min = all_enu.min(axis=0) - cell_m
    e_max, n_max = all_enu.max(axis=0) + cell_m
    width = int(np.ceil((e_max - e_min) / cell_m)) + 1
    height = int(np.ceil((n_max - n_min) / cell_m)) + 1
    if width * height > 64_000_000:
        raise MemoryError("coverage grid too large; increase cell_m")
    union = np.zeros((height, width), dtype=bool)
    for rings in enu_sets:
        px = [
            np.column_stack([(r[:, 0] - e_min) / cell_m, (r[:, 1] - n_min) / cell_m])
            for r in rings
        ]
        union |= rasterize_class_rings(px, height, width)
    return float(union.sum()) * cell_m * cell_m


def export_mission(store: MissionStore, link_stats: dict | None = None):
    """(FeatureCollection dict, report dict) for a closed mission."""
    sets = _collect_polygon_sets(store)
    fc = feature_collection(sets)
    report = {
        "mission_id": store.mission_id,
        "analytics_frames": len(store.committed) + len(store.staged),
        "images_with_analytics": len(sets),
        "coverage_area_m2": union_area_m2(sets) if sets else 0.0,
        "link": link_stats or {},
    }
    return fc, report


def write_export(store: MissionStore, out_dir, link_stats=None):
    from pathlib import Path

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    fc, report = export_mission(store, link_stats)
    with open(out_dir / "export.geojson", "w") as f:
        json.dump(fc, f)
    with open(out_dir / "report.json", "w") as f:
        json.dump(report, f, indent=2, sort_keys=True)
    return fc, report
