"""WGS-84 geodetic coordinates and local east-north-up tangent frames.

All conversions go through ECEF. Angles are radians internally; degrees
appear only in the public dataclasses, which mirror what the INS reports.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

# WGS-84 defining constants
WGS84_A = 6378137.0
WGS84_F = 1.0 / 298.257223563
WGS84_E2 = WGS84_F * (2.0 - WGS84_F)


@dataclass(frozen=True)
class GeodeticPosition:
    """A WGS-84 geodetic position: degrees latitude/longitude, meters above ellipsoid."""

    lat_deg: float
    lon_deg: float
    alt_m: float

    def __post_init__(self):
        if not (-90.0 <= self.lat_deg <= 90.0):
            raise DomainError(f"latitude {self.lat_deg} outside [-90, 90]")
        if not (-180.0 <= self.lon_deg < 180.0):
            raise DomainError(f"longitude {self.lon_deg} outside [-180, 180)")
        if not math.isfinite(self.alt_m):
            raise DomainError(f"altitude {self.alt_m} not finite")


@dataclass(frozen=True)
class EnuFrame:
    """A local tangent frame fixed at a geodetic origin for the mission lifetime."""

    origin: GeodeticPosition


@dataclass(frozen=True)
class EnuPoint:
    """Cartesian meters east/north/up within one EnuFrame."""

    e: float
    n: float
    u: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.e, self.n, self.u)):
            raise DomainError("ENU components must be finite")

    def as_array(self) -> np.ndarray:
        return np.array([self.e, self.n, self.u], dtype=float)


def geodetic_to_ecef(lat_deg, lon_deg, alt_m):
    """Convert geodetic coordinates to ECEF meters. Accepts scalars or arrays."""
    lat = np.radians(lat_deg)
    lon = np.radians(lon_deg)
    sin_lat = np.sin(lat)
    cos_lat = np.cos(lat)
    n = WGS84_A / np.sqrt(1.0 - WGS84_E2 * sin_lat * sin_lat)
    x = (n + alt_m) * cos_lat * np.cos(lon)
    y = (n + alt_m) * cos_lat * np.sin(lon)
    z = (n * (1.0 - WGS84_E2) + alt_m) * sin_lat
    return np.stack([x, y, z], axis=-1)


def ecef_to_geodetic(xyz):
    """Convert ECEF meters to (lat_deg, lon_deg, alt_m) by fixed-point iteration.

    Converges well below 1 mm for altitudes within the aviation envelope.
    """
    xyz = np.asarray(xyz, dtype=float)
    x, y, z = xyz[..., 0], xyz[..., 1], xyz[..., 2]
    lon = np.arctan2(y, x)
    p = np.hypot(x, y)
    # Start from the spherical latitude and iterate the standard fixed point.
    lat = np.arctan2(z, p * (1.0 - WGS84_E2))
    for _ in range(10):
        sin_lat = np.sin(lat)
        n = WGS84_A / np.sqrt(1.0 - WGS84_E2 * sin_lat * sin_lat)
        lat = np.arctan2(z + WGS84_E2 * n * sin_lat, p)
    sin_lat = np.sin(lat)
    n = WGS84_A / np.sqrt(1.0 - WGS84_E2 * sin_lat * sin_lat)
    cos_lat = np.cos(lat)
    # Near the poles cos(lat) ~ 0; fall back to the z expression there.
    alt = np.where(
        np.abs(cos_lat) > 1e-8,
        p / np.where(np.abs(cos_lat) > 1e-8, cos_lat, 1.0) - n,
        np.abs(z) / np.where(np.abs(sin_lat) > 1e-8, np.abs(sin_lat), 1.0)
        - n * (1.0 - WGS84_E2),
    )
    return np.degrees(lat), np.degrees(lon), alt


def _enu_rotation(origin: GeodeticPosition) -> np.ndarray:
    """Rows are the east, north, up unit vectors of the frame in ECEF."""
    lat = math.radians(origin.lat_deg)
    lon = math.radians(origin.lon_deg)
    sin_lat, cos_lat = math.sin(lat), math.cos(lat)
    sin_lon, cos_lon = math.sin(lon), math.cos(lon)
    return np.array(
        [
            [-sin_lon, cos_lon, 0.0],
            [-sin_lat * cos_lon, -sin_lat * sin_lon, cos_lat],
            [cos_lat * cos_lon, cos_lat * sin_lon, sin_lat],
        ]
    )


def geodetic_to_enu(p: GeodeticPosition, frame: EnuFrame) -> EnuPoint:
    """Map a geodetic position into the frame's east-north-up coordinates."""
    e, n, u = geodetic_to_enu_array(
        np.array([p.lat_deg]), np.array([p.lon_deg]), np.array([p.alt_m]), frame
    )[0]
    return EnuPoint(float(e), float(n), float(u))


def geodetic_to_enu_array(lat_deg, lon_deg, alt_m, frame: EnuFrame) -> np.ndarray:
    """Vectorized geodetic to ENU; returns an (..., 3) array."""
    ecef = geodetic_to_ecef(lat_deg, lon_deg, alt_m)
    origin_ecef = geodetic_to_ecef(
        frame.origin.lat_deg, frame.origin.lon_deg, frame.origin.alt_m
    )
    rot = _enu_rotation(frame.origin)
    return (ecef - origin_ecef) @ rot.T


def enu_to_geodetic(p: EnuPoint, frame: EnuFrame) -> GeodeticPosition:
    """Map an ENU point back to geodetic coordinates (exact inverse path)."""
    lat, lon, alt = enu_to_geodetic_array(p.as_array(), frame)
    return GeodeticPosition(float(lat), float(lon), float(alt))


def enu_to_geodetic_array(enu, frame: EnuFrame):
    """Vectorized ENU to geodetic; accepts (..., 3), returns (lat, lon, alt) arrays."""
    enu = np.asarray(enu, dtype=float)
    origin_ecef = geodetic_to_ecef(
        frame.origin.lat_deg, frame.origin.lon_deg, frame.origin.alt_m
    )
    rot = _enu_rotation(frame.origin)
    ecef = enu @ rot + origin_ecef
    return ecef_to_geodetic(ecef)
