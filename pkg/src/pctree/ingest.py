"""Loading trajectories and land-usage polygons, and spatial lookup of elements."""

from __future__ import annotations

import csv
import json
import logging
import math
from collections import defaultdict
from pathlib import Path
from typing import Dict, Iterable, List, Set, Tuple

from .geo import (
    EARTH_RADIUS,
    GeoPoint,
    InvalidGeometry,
    LandUsageElement,
    Polygon,
    Trajectory,
    TrajectoryPoint,
    point_polygon_distance,
    polygon_area,
    polygon_diameter,
)

log = logging.getLogger(__name__)

TRAJECTORY_HEADER = ["t", "lat", "lng", "acc"]


class ParseError(ValueError):
    def __init__(self, path, line, msg):
        super().__init__(f"{path}:{line}: {msg}")
        self.path = path
        self.line = line


def load_trajectory(path) -> Trajectory:
    """Read a ``t,lat,lng,acc`` CSV file.

    Rows are sorted by time if needed; ``Trajectory.unsorted_rows`` records how
    many rows arrived out of order.
    """
    path = Path(path)
    rows = []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != TRAJECTORY_HEADER:
            raise ParseError(path, 1, f"expected header {','.join(TRAJECTORY_HEADER)}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4:
                raise ParseError(path, lineno, f"expected 4 fields, got {len(row)}")
            try:
                t = int(row[0])
                lat, lng, acc = float(row[1]), float(row[2]), float(row[3])
            except ValueError as exc:
                raise ParseError(path, lineno, str(exc)) from None
            try:
                rows.append(TrajectoryPoint(t, GeoPoint(lat, lng), acc))
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None

    unsorted = sum(1 for a, b in zip(rows, rows[1:]) if b.t < a.t)
    if unsorted:
        log.warning("%s: %d rows out of time order, sorting", path, unsorted)
        rows.sort(key=lambda p: p.t)
    return Trajectory(tuple(rows), unsorted_rows=unsorted)


def save_trajectory(traj: Iterable[TrajectoryPoint], path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRAJECTORY_HEADER)
        for p in traj:
            w.writerow([int(p.t), repr(p.pos.lat), repr(p.pos.lng), repr(p.acc)])


class LandUsageStore:
    """Elements keyed by id, with a uniform grid over their bounding boxes.

    The grid is laid out in degrees; a cell spans ``cell_size`` metres north-south
    and roughly ``cell_size`` metres east-west at the reference latitude. Any
    layout is correct as long as queries expand their search box far enough,
    which :meth:`query` guarantees.
    """

    def __init__(self, elements: Iterable[LandUsageElement], cell_size: float = 200.0,
                 skipped: int = 0):
        self.elements: Dict[str, LandUsageElement] = {}
        for e in elements:
            if e.id in self.elements:
                raise ValueError(f"duplicate element id {e.id!r}")
            self.elements[e.id] = e
        self.skipped = skipped
        self.cell_size = float(cell_size)
        self.diameter: Dict[str, float] = {k: polygon_diameter(e.shape) for k, e in self.elements.items()}
        self._area: Dict[str, float] = {}

        if self.elements:
            lats = [v.lat for e in self.elements.values() for v in e.shape.ring]
            ref_lat = (min(lats) + max(lats)) / 2.0
        else:
            ref_lat = 0.0
        self._dlat = math.degrees(self.cell_size / EARTH_RADIUS)
        self._dlng = math.degrees(self.cell_size / (EARTH_RADIUS * max(math.cos(math.radians(ref_lat)), 1e-6)))
        self.grid: Dict[Tuple[int, int], List[str]] = defaultdict(list)
        for eid in sorted(self.elements):
            r0, c0, r1, c1 = self._cells(*self.elements[eid].shape.bbox())
            for r in range(r0, r1 + 1):
                for c in range(c0, c1 + 1):
                    self.grid[(r, c)].append(eid)
        self.grid = dict(self.grid)

    def __len__(self):
        return len(self.elements)

    def __contains__(self, eid):
        return eid in self.elements

    def __getitem__(self, eid) -> LandUsageElement:
        return self.elements[eid]

    def area(self, eid) -> float:
        if eid not in self._area:
            self._area[eid] = polygon_area(self.elements[eid].shape)
        return self._area[eid]

    def _cells(self, min_lat, min_lng, max_lat, max_lng):
        return (math.floor(min_lat / self._dlat), math.floor(min_lng / self._dlng),
                math.floor(max_lat / self._dlat), math.floor(max_lng / self._dlng))

    def query(self, center: GeoPoint, radius: float, maxdiameter: float) -> Set[str]:
        """Ids of elements no wider than ``maxdiameter`` within ``radius`` of ``center``."""
        # Distances are measured in a tangent plane at `center`, so every point
        # within `radius` lies inside this box. The slack absorbs rounding.
        slack = 1.0 + 1e-9
        dlat = math.degrees(radius / EARTH_RADIUS) * slack
        coslat = math.cos(math.radians(center.lat))
        dlng = math.degrees(radius / (EARTH_RADIUS * max(coslat, 1e-12))) * slack
        r0, c0, r1, c1 = self._cells(center.lat - dlat, center.lng - dlng,
                                     center.lat + dlat, center.lng + dlng)
        seen = set()
        out = set()
        for r in range(r0, r1 + 1):
            for c in range(c0, c1 + 1):
                for eid in self.grid.get((r, c), ()):
                    if eid in seen:
                        continue
                    seen.add(eid)
                    if self.diameter[eid] > maxdiameter:
                        continue
                    if point_polygon_distance(center, self.elements[eid].shape) <= radius:
                        out.add(eid)
        return out

    def to_geojson(self) -> dict:
        feats = []
        for eid in sorted(self.elements):
            e = self.elements[eid]
            ring = [[v.lng, v.lat] for v in e.shape.ring]
            ring.append(ring[0])
            feats.append({
                "type": "Feature",
                "id": eid,
                "geometry": {"type": "Polygon", "coordinates": [ring]},
                "properties": dict(sorted(e.tags)),
            })
        return {"type": "FeatureCollection", "features": feats}


def query_elements(store: LandUsageStore, center: GeoPoint, radius: float,
                   maxdiameter: float) -> Set[str]:
    if not radius > 0 or not maxdiameter > 0:
        raise ValueError("radius and maxdiameter must be positive")
    return store.query(center, radius, maxdiameter)


def load_landusage(path, cell_size: float = 200.0) -> LandUsageStore:
    """Read a GeoJSON FeatureCollection of polygons.

    Only the outer ring of each polygon is kept. Features without Polygon
    geometry are skipped and counted in ``store.skipped``. Property values
    are stringified into tags.
    """
    with Path(path).open(encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("type") != "FeatureCollection":
        raise ValueError(f"{path}: not a GeoJSON FeatureCollection")
    elements = []
    skipped = 0
    for i, feat in enumerate(doc.get("features", [])):
        geom = feat.get("geometry") or {}
        if geom.get("type") != "Polygon" or not geom.get("coordinates"):
            skipped += 1
            continue
        try:
            shape = Polygon.from_lnglat(geom["coordinates"][0])
        except (InvalidGeometry, ValueError, TypeError, IndexError):
            skipped += 1
            continue
        eid = feat.get("id")
        eid = str(i) if eid is None else str(eid)
        props = feat.get("properties") or {}
        tags = frozenset((str(k), str(v)) for k, v in props.items() if v is not None)
        elements.append(LandUsageElement(eid, shape, tags))
    if skipped:
        log.warning("%s: skipped %d non-polygon features", path, skipped)
    return LandUsageStore(elements, cell_size=cell_size, skipped=skipped)


def save_landusage(store: LandUsageStore, path) -> None:
    text = json.dumps(store.to_geojson(), sort_keys=True, separators=(",", ":"))
    Path(path).write_text(text + "\n", encoding="utf-8")

