"""Relay placement by walking a survey route and dropping a device every
``spacing_m`` metres, the way responders lay the chain out from the server."""

from __future__ import annotations

from typing import Sequence

from .geo import GeoPosition, haversine_distance, interpolate

DEFAULT_SPACING_M = 90.0
# drops within a millimetre of a waypoint snap onto it
_TOL_M = 1e-3


def point_along(a: GeoPosition, b: GeoPosition, distance_m: float) -> GeoPosition:
    """Point on the lat/lon segment a->b whose distance from ``a`` is ``distance_m``."""
    lo, hi = 0.0, 1.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if haversine_distance(a, interpolate(a, b, mid)) < distance_m:
            lo = mid
        else:
            hi = mid
    return interpolate(a, b, 0.5 * (lo + hi))


def deploy_chain(origin: GeoPosition, waypoints: Sequence[GeoPosition],
                 spacing_m: float = DEFAULT_SPACING_M) -> list[GeoPosition]:
    if spacing_m <= 0:
        raise ValueError("spacing must be positive")
    drops: list[GeoPosition] = []
    need = spacing_m
    start = origin
    for end in waypoints:
        length = haversine_distance(start, end)
        walked = 0.0
        while length - walked >= need - _TOL_M:
            walked = min(length, walked + need)
            drops.append(end if abs(length - walked) <= _TOL_M else point_along(start, end, walked))
            need = spacing_m
        need -= length - walked
        start = end
    return drops
