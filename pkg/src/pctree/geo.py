"""Spherical and local-planar geometry used throughout the package.

Distances are great-circle distances on a sphere of radius 6,371 km.
Polygon measurements (area, edge distance) are taken in an
equirectangular tangent plane, which is accurate for the small
(building-sized) polygons this package deals with.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import FrozenSet, Iterable, Sequence, Tuple

import numpy as np

EARTH_RADIUS = 6_371_000.0  # metres

Tag = Tuple[str, str]


class InvalidGeometry(ValueError):
    """Raised for polygons that cannot be measured (fewer than 3 vertices, NaNs)."""


@dataclass(frozen=True)
class GeoPoint:
    lat: float
    lng: float

    def __post_init__(self):
        if math.isnan(self.lat) or math.isnan(self.lng):
            raise ValueError("NaN coordinate")
        if not -90.0 <= self.lat <= 90.0:
            raise ValueError(f"latitude out of range: {self.lat}")
        if not -180.0 <= self.lng <= 180.0:
            raise ValueError(f"longitude out of range: {self.lng}")


@dataclass(frozen=True)
class TrajectoryPoint:
    t: float
    pos: GeoPoint
    acc: float

    def __post_init__(self):
        if not math.isfinite(self.t):
            raise ValueError("timestamp must be finite")
        if not self.acc > 0:
            raise ValueError(f"accuracy must be positive, got {self.acc}")

    @property
    def lat(self) -> float:
        return self.pos.lat

    @property
    def lng(self) -> float:
        return self.pos.lng


@dataclass(frozen=True)
class Trajectory:
    points: Tuple[TrajectoryPoint, ...]
    # number of out-of-order rows that had to be sorted on load
    unsorted_rows: int = 0

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(self.points))
        ts = [p.t for p in self.points]
        if any(b < a for a, b in zip(ts, ts[1:])):
            raise ValueError("trajectory timestamps must be non-decreasing")

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def __getitem__(self, i):
        return self.points[i]

    def arrays(self):
        """Return ``(t, lat, lng, acc)`` as float arrays."""
        n = len(self.points)
        out = np.empty((4, n), dtype=float)
        for i, p in enumerate(self.points):
            out[0, i] = p.t
            out[1, i] = p.pos.lat
            out[2, i] = p.pos.lng
            out[3, i] = p.acc
        return out[0], out[1], out[2], out[3]


@dataclass(frozen=True)
class Polygon:
    ring: Tuple[GeoPoint, ...]

    def __post_init__(self):
        ring = tuple(self.ring)
        # drop an explicit closing vertex
        if len(ring) > 1 and ring[0] == ring[-1]:
            ring = ring[:-1]
        object.__setattr__(self, "ring", ring)
        if len(ring) < 3:
            raise InvalidGeometry(f"polygon needs at least 3 vertices, got {len(ring)}")

    @classmethod
    def from_lnglat(cls, coords: Iterable[Sequence[float]]) -> "Polygon":
        """Build from GeoJSON-ordered ``[lng, lat]`` pairs."""
        return cls(tuple(GeoPoint(float(c[1]), float(c[0])) for c in coords))

    def bbox(self) -> Tuple[float, float, float, float]:
        """``(min_lat, min_lng, max_lat, max_lng)``."""
        lats = [v.lat for v in self.ring]
        lngs = [v.lng for v in self.ring]
        return min(lats), min(lngs), max(lats), max(lngs)

    def centroid(self) -> GeoPoint:
        """Vertex mean; adequate for small polygons."""
        n = len(self.ring)
        return GeoPoint(sum(v.lat for v in self.ring) / n, sum(v.lng for v in self.ring) / n)


@dataclass(frozen=True)
class LandUsageElement:
    id: str
    shape: Polygon
    tags: FrozenSet[Tag] = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "tags", frozenset(self.tags))


def haversine_distance(a: GeoPoint, b: GeoPoint) -> float:
    """Great-circle distance in metres."""
    return haversine(a.lat, a.lng, b.lat, b.lng)


def haversine(lat1: float, lng1: float, lat2: float, lng2: float) -> float:
    p1 = math.radians(lat1)
    p2 = math.radians(lat2)
    dp = p2 - p1
    dl = math.radians(lng2 - lng1)
    h = math.sin(dp / 2) ** 2 + math.cos(p1) * math.cos(p2) * math.sin(dl / 2) ** 2
    return 2 * EARTH_RADIUS * math.asin(math.sqrt(min(1.0, h)))


def haversine_array(lat1, lng1, lat2, lng2):
    """Vectorised :func:`haversine`; broadcasts its arguments."""
    p1 = np.radians(lat1)
    p2 = np.radians(lat2)
    dp = p2 - p1
    dl = np.radians(np.asarray(lng2) - np.asarray(lng1))
    h = np.sin(dp / 2) ** 2 + np.cos(p1) * np.cos(p2) * np.sin(dl / 2) ** 2
    return 2 * EARTH_RADIUS * np.arcsin(np.sqrt(np.minimum(1.0, h)))


def project(points: Iterable[GeoPoint], origin: GeoPoint):
    """Equirectangular projection to metres around ``origin``."""
    kx = EARTH_RADIUS * math.cos(math.radians(origin.lat)) * math.pi / 180.0
    ky = EARTH_RADIUS * math.pi / 180.0
    return [((v.lng - origin.lng) * kx, (v.lat - origin.lat) * ky) for v in points]


def _segment_distance(ax, ay, bx, by) -> float:
    """Distance from the origin to segment a-b."""
    dx = bx - ax
    dy = by - ay
    L2 = dx * dx + dy * dy
    if L2 == 0.0:
        return math.hypot(ax, ay)
    s = -(ax * dx + ay * dy) / L2
    if s < 0.0:
        s = 0.0
    elif s > 1.0:
        s = 1.0
    return math.hypot(ax + s * dx, ay + s * dy)


def _origin_inside(xy) -> bool:
    """Even-odd ray cast of the origin against a projected ring."""
    inside = False
    n = len(xy)
    j = n - 1
    for i in range(n):
        xi, yi = xy[i]
        xj, yj = xy[j]
        if (yi > 0.0) != (yj > 0.0):
            x_cross = xi + (0.0 - yi) * (xj - xi) / (yj - yi)
            if x_cross > 0.0:
                inside = not inside
        j = i
    return inside


def point_in_polygon(p: GeoPoint, poly: Polygon) -> bool:
    """Ray-casting membership test; boundary points count as inside."""
    xy = project(poly.ring, p)
    if _origin_inside(xy):
        return True
    return _min_edge_distance(xy) == 0.0


def _min_edge_distance(xy) -> float:
    best = math.inf
    n = len(xy)
    for i in range(n):
        ax, ay = xy[i - 1]
        bx, by = xy[i]
        d = _segment_distance(ax, ay, bx, by)
        if d < best:
            best = d
    return best


def point_polygon_distance(p: GeoPoint, poly: Polygon) -> float:
    """0 inside or on the boundary, otherwise distance to the nearest edge (m)."""
    xy = project(poly.ring, p)
    if _origin_inside(xy):
        return 0.0
    return _min_edge_distance(xy)


def polygon_diameter(poly: Polygon) -> float:
    """Largest haversine distance between any two vertices."""
    ring = poly.ring
    best = 0.0
    for i in range(len(ring)):
        for j in range(i + 1, len(ring)):
            d = haversine_distance(ring[i], ring[j])
            if d > best:
                best = d
    return best


def shoelace(xy) -> float:
    s = 0.0
    n = len(xy)
    for i in range(n):
        x1, y1 = xy[i - 1]
        x2, y2 = xy[i]
        s += x1 * y2 - x2 * y1
    return abs(s) / 2.0


def polygon_area(poly: Polygon) -> float:
    """Planar area in m^2, projected at the vertex centroid."""
    return shoelace(project(poly.ring, poly.centroid()))


def convex_hull_area(points: Sequence[GeoPoint]) -> float:
    """Area of the convex hull of ``points`` (0 for fewer than 3 non-collinear points)."""
    if len(points) < 3:
        return 0.0
    origin = GeoPoint(
        sum(p.lat for p in points) / len(points), sum(p.lng for p in points) / len(points)
    )
    xy = sorted(set(project(points, origin)))
    if len(xy) < 3:
        return 0.0

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    # Andrew's monotone chain
    lower, upper = [], []
    for q in xy:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], q) <= 0:
            lower.pop()
        lower.append(q)
    for q in reversed(xy):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], q) <= 0:
            upper.pop()
        upper.append(q)
    hull = lower[:-1] + upper[:-1]
    if len(hull) < 3:
        return 0.0
    return shoelace(hull)


def offset(p: GeoPoint, east: float, north: float) -> GeoPoint:
    """Move ``p`` by metres east/north in the local tangent plane."""
    lat = p.lat + math.degrees(north / EARTH_RADIUS)
    lng = p.lng + math.degrees(east / (EARTH_RADIUS * math.cos(math.radians(p.lat))))
    return GeoPoint(lat, lng)
