"""Small geodesy helpers shared by the network, ingest and synth modules.

Everything here works at city scale: great-circle lengths for edge
attributes, and a local equirectangular projection (meters) for snapping,
point-to-segment distances and nearest-node queries.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

EARTH_RADIUS_M = 6_371_008.8


def haversine_m(lat1: float, lon1: float, lat2: float, lon2: float) -> float:
    """Great-circle distance in meters between two WGS84 points."""
    p1 = math.radians(lat1)
    p2 = math.radians(lat2)
    dp = p2 - p1
    dl = math.radians(lon2 - lon1)
    a = math.sin(dp / 2.0) ** 2 + math.cos(p1) * math.cos(p2) * math.sin(dl / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_M * math.asin(min(1.0, math.sqrt(a)))


def polyline_length_m(points: list[tuple[float, float]]) -> float:
    """Sum of great-circle segment lengths along a [(lat, lon), ...] polyline."""
    total = 0.0
    for (lat1, lon1), (lat2, lon2) in zip(points, points[1:]):
        total += haversine_m(lat1, lon1, lat2, lon2)
    return total


@dataclass(frozen=True)
class LocalProjection:
    """Equirectangular projection centered on (lat0, lon0), in meters.

    Adequate for distances/snapping over a single urban network; not for
    long-range geodesy.
    """

    lat0: float
    lon0: float

    def to_xy(self, lat: float, lon: float) -> tuple[float, float]:
        x = EARTH_RADIUS_M * math.radians(lon - self.lon0) * math.cos(math.radians(self.lat0))
        y = EARTH_RADIUS_M * math.radians(lat - self.lat0)
        return x, y

    def to_latlon(self, x: float, y: float) -> tuple[float, float]:
        lat = self.lat0 + math.degrees(y / EARTH_RADIUS_M)
        lon = self.lon0 + math.degrees(x / (EARTH_RADIUS_M * math.cos(math.radians(self.lat0))))
        return lat, lon


def project_point_to_segment(
    px: float, py: float, ax: float, ay: float, bx: float, by: float
) -> tuple[float, float, float, float]:
    """Project point P onto segment AB (planar).

    Returns (t, qx, qy, dist) where t in [0, 1] is the position along AB,
    (qx, qy) the closest point and dist the distance P-Q.
    """
    dx = bx - ax
    dy = by - ay
    seg_sq = dx * dx + dy * dy
    if seg_sq == 0.0:
        t = 0.0
    else:
        t = ((px - ax) * dx + (py - ay) * dy) / seg_sq
        t = min(1.0, max(0.0, t))
    qx = ax + t * dx
    qy = ay + t * dy
    return t, qx, qy, math.hypot(px - qx, py - qy)


def point_polyline_distance(
    px: float, py: float, points_xy: list[tuple[float, float]]
) -> float:
    """Minimum planar distance from a point to a polyline given in xy meters."""
    best = math.inf
    for (ax, ay), (bx, by) in zip(points_xy, points_xy[1:]):
        _, _, _, d = project_point_to_segment(px, py, ax, ay, bx, by)
        if d < best:
            best = d
    if not points_xy:
        return best
    if len(points_xy) == 1:
        ax, ay = points_xy[0]
        best = math.hypot(px - ax, py - ay)
    return best
