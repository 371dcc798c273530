"""Geographic positions and great-circle distance."""

from __future__ import annotations

import math
from dataclasses import dataclass

EARTH_RADIUS_M = 6_371_000.0


@dataclass(frozen=True, order=True)
class GeoPosition:
    latitude_deg: float
    longitude_deg: float

    def __post_init__(self):
        if not -90.0 <= self.latitude_deg <= 90.0:
            raise ValueError(f"latitude out of range: {self.latitude_deg}")
        if not -180.0 <= self.longitude_deg <= 180.0:
            raise ValueError(f"longitude out of range: {self.longitude_deg}")

    @property
    def radians(self) -> tuple[float, float]:
        return math.radians(self.latitude_deg), math.radians(self.longitude_deg)

    @classmethod
    def from_radians(cls, lat_rad: float, lon_rad: float) -> "GeoPosition":
        return cls(math.degrees(lat_rad), math.degrees(lon_rad))


def haversine_distance(a: GeoPosition, b: GeoPosition, radius_m: float = EARTH_RADIUS_M) -> float:
    """Great-circle distance in meters between two positions."""
    phi1, lam1 = a.radians
    phi2, lam2 = b.radians
    h = (math.sin((phi2 - phi1) / 2.0) ** 2
         + math.cos(phi1) * math.cos(phi2) * math.sin((lam2 - lam1) / 2.0) ** 2)
    # rounding can push h a hair above 1 for antipodes
    return 2.0 * radius_m * math.asin(math.sqrt(min(1.0, h)))


def offset(origin: GeoPosition, east_m: float, north_m: float,
           radius_m: float = EARTH_RADIUS_M) -> GeoPosition:
    """Position reached from ``origin`` by travelling the given east/north
    displacement along a great circle (exact distance from ``origin``)."""
    dist = math.hypot(east_m, north_m) / radius_m
    bearing = math.atan2(east_m, north_m)
    phi1, lam1 = origin.radians
    phi2 = math.asin(math.sin(phi1) * math.cos(dist)
                     + math.cos(phi1) * math.sin(dist) * math.cos(bearing))
    lam2 = lam1 + math.atan2(math.sin(bearing) * math.sin(dist) * math.cos(phi1),
                             math.cos(dist) - math.sin(phi1) * math.sin(phi2))
    return GeoPosition.from_radians(phi2, lam2)


def interpolate(a: GeoPosition, b: GeoPosition, fraction: float) -> GeoPosition:
    return GeoPosition(a.latitude_deg + (b.latitude_deg - a.latitude_deg) * fraction,
                       a.longitude_deg + (b.longitude_deg - a.longitude_deg) * fraction)
