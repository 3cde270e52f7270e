"""Direct georeferencing: pixels and pixel-space masks onto the ground plane.

The ground is a single horizontal plane at a configured ENU height. Rays
within GRAZING_ANGLE_DEG of the plane (or pointing upward) are rejected as
horizon failures; mask edges crossing that threshold are clipped in pixel
space before georegistration.
"""

from __future__ import annotations

import json
import math
import struct
import zlib
from dataclasses import dataclass

import numpy as np

from .camera import CameraModel, pixel_to_ray, project
from .errors import DomainError, HorizonError, IntegrityError
from .geodesy import (
    EnuFrame,
    GeodeticPosition,
    enu_to_geodetic_array,
    geodetic_to_enu,
)
from .pose import TimestampedPose
from .varint import read_uvarint, write_svarint, write_uvarint, read_svarint

GRAZING_ANGLE_DEG = 0.5


@dataclass(frozen=True)
class GeoRing:
    """A closed ring of geodetic vertices (first point repeated last)."""

    points: tuple  # tuple[GeodeticPosition, ...]

    def __post_init__(self):
        if len(self.points) < 4:
            raise DomainError("ring needs at least 3 distinct vertices plus closure")
        first, last = self.points[0], self.points[-1]
        if (first.lat_deg, first.lon_deg) != (last.lat_deg, last.lon_deg):
            raise DomainError("ring must be closed (first == last vertex)")


@dataclass(frozen=True)
class GeoPolygon:
    class_id: int
    outer: GeoRing
    holes: tuple = ()


@dataclass(frozen=True)
class GeoPolygonSet:
    """Per-image georegistered analytics: class-labeled polygons plus size metadata."""

    image_id: str
    polygons: tuple  # tuple[GeoPolygon, ...]
    encoded_bytes: int = 0
    ground_alt_m: float = 0.0
    dropped_rings: int = 0  # rings lost entirely to the horizon check


def camera_pose_enu(cam: CameraModel, pose: TimestampedPose, frame: EnuFrame):
    """Camera center (ENU) and the camera->ENU rotation matrix for one pose."""
    r_enu_body = pose.attitude.to_matrix()
    r_body_cam = cam.boresight.to_matrix().T
    center = geodetic_to_enu(pose.position, frame).as_array()
    center = center + r_enu_body @ np.asarray(cam.lever_arm, dtype=float)
    return center, r_enu_body @ r_body_cam


def _ray_plane_hits(center, dirs_enu, ground_u, min_angle_deg=GRAZING_ANGLE_DEG):
    """Plane intersections for (..., 3) ENU ray directions.

    Returns (points (..., 3), ok (...,) bool). A ray fails when it points
    upward/behind or meets the plane at less than the grazing threshold.
    """
    du = dirs_enu[..., 2]
    sin_angle = -du  # dirs are unit vectors; angle measured from the plane
    ok = sin_angle > math.sin(math.radians(min_angle_deg))
    safe_du = np.where(ok, du, -1.0)
    t = (ground_u - center[2]) / safe_du
    ok = ok & (t > 0)
    pts = center + dirs_enu * t[..., None]
    return pts, ok


def georegister_pixel(
    cam: CameraModel,
    pose: TimestampedPose,
    frame: EnuFrame,
    ground_u: float,
    px,
) -> GeodeticPosition:
    """Intersect one pixel's viewing ray with the ground plane."""
    center, r_enu_cam = camera_pose_enu(cam, pose, frame)
    if center[2] <= ground_u:
        raise HorizonError(
            f"camera at u={center[2]:.2f} not above ground plane u={ground_u:.2f}"
        )
    ray = pixel_to_ray(cam, np.asarray(px, dtype=float))
    d = r_enu_cam @ ray
    pts, ok = _ray_plane_hits(center, d[None, :], ground_u)
    if not ok[0]:
        raise HorizonError(
            f"pixel {tuple(np.asarray(px))} views above or within "
            f"{GRAZING_ANGLE_DEG} deg of the horizon"
        )
    lat, lon, alt = enu_to_geodetic_array(pts[0], frame)
    return GeodeticPosition(float(lat), float(lon), float(alt))


def reproject_point(
    cam: CameraModel, pose: TimestampedPose, frame: EnuFrame, point: GeodeticPosition
) -> np.ndarray:
    """Project a geodetic point back into pixel coordinates for this pose."""
    center, r_enu_cam = camera_pose_enu(cam, pose, frame)
    p_enu = geodetic_to_enu(point, frame).as_array()
    p_cam = r_enu_cam.T @ (p_enu - center)
    return project(cam, p_cam)


def _grazing_ok(center, r_enu_cam, cam, pts_px):
    dirs = pixel_to_ray(cam, pts_px) @ r_enu_cam.T
    sin_angle = -dirs[..., 2]
    return sin_angle > math.sin(math.radians(GRAZING_ANGLE_DEG))


def _clip_ring_to_horizon(cam, center, r_enu_cam, ring_px: np.ndarray):
    """Clip a closed pixel ring against the grazing-angle threshold.

    Vertices failing the check are dropped; each crossing edge gains a
    boundary vertex located by bisection along the pixel-space segment.
    Returns the clipped closed ring or None when nothing survives.
    """
    pts = ring_px[:-1]  # drop closure for processing
    ok = _grazing_ok(center, r_enu_cam, cam, pts)
    if ok.all():
        return ring_px
    if not ok.any():
        return None

    def crossing(p_in, p_out):
        lo, hi = 0.0, 1.0
        for _ in range(40):
            mid = 0.5 * (lo + hi)
            p = p_in + (p_out - p_in) * mid
            if _grazing_ok(center, r_enu_cam, cam, p[None, :])[0]:
                lo = mid
            else:
                hi = mid
        return p_in + (p_out - p_in) * lo

    out = []
    n = len(pts)
    for i in range(n):
        j = (i + 1) % n
        if ok[i]:
            out.append(pts[i])
            if not ok[j]:
                out.append(crossing(pts[i], pts[j]))
        elif ok[j]:
            out.append(crossing(pts[j], pts[i]))
    if len(out) < 3:
        return None
    out.append(out[0])
    return np.asarray(out)


def georegister_mask(
    cam: CameraModel,
    pose: TimestampedPose,
    frame: EnuFrame,
    ground_u: float,
    pixel_polygons,
    image_id: str = "",
) -> GeoPolygonSet:
    """Map pixel-space polygons to the ground plane vertex by vertex.

    `pixel_polygons` is a list of (class_id, outer_ring, holes) where each
    ring is an (N, 2) closed array of pixel coordinates. Ring closure and
    orientation are preserved. Rings entirely above the horizon are dropped
    and counted in `dropped_rings`.
    """
    center, r_enu_cam = camera_pose_enu(cam, pose, frame)
    if center[2] <= ground_u:
        raise HorizonError(
            f"camera at u={center[2]:.2f} not above ground plane u={ground_u:.2f}"
        )
    dropped = 0

    def map_ring(ring_px):
        nonlocal dropped
        ring_px = np.asarray(ring_px, dtype=float)
        clipped = _clip_ring_to_horizon(cam, center, r_enu_cam, ring_px)
        if clipped is None:
            dropped += 1
            return None
        dirs = pixel_to_ray(cam, clipped) @ r_enu_cam.T
        pts, ok = _ray_plane_hits(center, dirs, ground_u)
        if not ok.all():
            dropped += 1
            return None
        lat, lon, alt = enu_to_geodetic_array(pts, frame)
        geo = [
            GeodeticPosition(float(a), float(b), float(c))
            for a, b, c in zip(lat, lon, alt)
        ]
        geo[-1] = geo[0]  # exact closure after float round trips
        return GeoRing(tuple(geo))

    polys = []
    for class_id, outer_px, holes_px in pixel_polygons:
        outer = map_ring(outer_px)
        if outer is None:
            continue
        holes = tuple(h for h in (map_ring(hp) for hp in holes_px) if h is not None)
        polys.append(GeoPolygon(class_id=class_id, outer=outer, holes=holes))
    encoded = encode_polygon_set_payload(image_id, polys, ground_u)
    return GeoPolygonSet(
        image_id=image_id,
        polygons=tuple(polys),
        encoded_bytes=len(encoded),
        ground_alt_m=ground_u,
        dropped_rings=dropped,
    )


# --- canonical geodetic wire encoding -------------------------------------
#
# Per ring: class byte (bit7 = hole), vertex count varint (closure excluded),
# first vertex as two big-endian i32 in 1e-7 degree units, then zig-zag
# varint deltas. Rings concatenated and deflate-compressed. The payload
# carries image id and ground height up front.

_GEO_SCALE = 1e7


def _encode_ring(buf: bytearray, class_id: int, is_hole: bool, ring: GeoRing) -> None:
    pts = ring.points[:-1]
    flag = 0x80 if is_hole else 0
    buf.append(flag | (class_id & 0x7F))
    write_uvarint(buf, len(pts))
    lat_fp = [int(round(p.lat_deg * _GEO_SCALE)) for p in pts]
    lon_fp = [int(round(p.lon_deg * _GEO_SCALE)) for p in pts]
    buf += struct.pack(">ii", lat_fp[0], lon_fp[0])
    for i in range(1, len(pts)):
        write_svarint(buf, lat_fp[i] - lat_fp[i - 1])
        write_svarint(buf, lon_fp[i] - lon_fp[i - 1])


def encode_polygon_set_payload(image_id: str, polygons, ground_alt_m: float) -> bytes:
    raw = bytearray()
    raw.append(1)  # payload version
    ident = image_id.encode("utf-8")
    write_uvarint(raw, len(ident))
    raw += ident
    raw += struct.pack(">d", ground_alt_m)
    for poly in polygons:
        _encode_ring(raw, poly.class_id, False, poly.outer)
        for hole in poly.holes:
            _encode_ring(raw, poly.class_id, True, hole)
    return zlib.compress(bytes(raw), 9)


def decode_polygon_set_payload(payload: bytes) -> GeoPolygonSet:
    raw = zlib.decompress(payload)
    pos = 0
    if raw[0] != 1:
        raise IntegrityError(f"unknown analytics payload version {raw[0]}")
    pos = 1
    ident_len, pos = read_uvarint(raw, pos)
    image_id = raw[pos : pos + ident_len].decode("utf-8")
    pos += ident_len
    (ground_alt,) = struct.unpack_from(">d", raw, pos)
    pos += 8
    polys: list[GeoPolygon] = []
    while pos < len(raw):
        flag = raw[pos]
        pos += 1
        is_hole = bool(flag & 0x80)
        class_id = flag & 0x7F
        count, pos = read_uvarint(raw, pos)
        lat_fp, lon_fp = struct.unpack_from(">ii", raw, pos)
        pos += 8
        lats = [lat_fp]
        lons = [lon_fp]
        for _ in range(count - 1):
            dlat, pos = read_svarint(raw, pos)
            dlon, pos = read_svarint(raw, pos)
            lats.append(lats[-1] + dlat)
            lons.append(lons[-1] + dlon)
        pts = [
            GeodeticPosition(la / _GEO_SCALE, lo / _GEO_SCALE, ground_alt)
            for la, lo in zip(lats, lons)
        ]
        ring = GeoRing(tuple(pts + [pts[0]]))
        if is_hole:
            if not polys or polys[-1].class_id != class_id:
                raise IntegrityError("hole ring without a preceding outer ring")
            last = polys[-1]
            polys[-1] = GeoPolygon(last.class_id, last.outer, last.holes + (ring,))
        else:
            polys.append(GeoPolygon(class_id, ring))
    return GeoPolygonSet(
        image_id=image_id,
        polygons=tuple(polys),
        encoded_bytes=len(payload),
        ground_alt_m=ground_alt,
    )


# --- GeoJSON export --------------------------------------------------------


def polygon_set_features(ps: GeoPolygonSet) -> list:
    """One GeoJSON Feature per class region: Polygon with outer ring + holes."""

    def ring_coords(ring: GeoRing):
        return [[p.lon_deg, p.lat_deg] for p in ring.points]

    features = []
    for poly in ps.polygons:
        features.append(
            {
                "type": "Feature",
                "geometry": {
                    "type": "Polygon",
                    "coordinates": [ring_coords(poly.outer)]
                    + [ring_coords(h) for h in poly.holes],
                },
                "properties": {"class_id": poly.class_id, "image_id": ps.image_id},
            }
        )
    return features


def feature_collection(polygon_sets) -> dict:
    features = []
    for ps in polygon_sets:
        features.extend(polygon_set_features(ps))
    return {"type": "FeatureCollection", "features": features}


def write_geojson(path, polygon_sets) -> None:
    with open(path, "w") as f:
        json.dump(feature_collection(polygon_sets), f)
