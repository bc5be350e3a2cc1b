"""Classical location extraction: threshold visit detection plus DBSCAN."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, List, Optional, Sequence

import numpy as np

from .geo import GeoPoint, TrajectoryPoint, convex_hull_area, haversine_array


@dataclass(frozen=True)
class Visit:
    start: float
    end: float
    centroid: GeoPoint
    radius: float

    @property
    def duration(self) -> float:
        return self.end - self.start


@dataclass(frozen=True)
class ThresholdConfig:
    max_dist: float = 50.0
    min_dur: float = 600.0
    t_max: Optional[float] = 3600.0  # None disables the gap check

    def __post_init__(self):
        if not self.max_dist > 0 or not self.min_dur > 0:
            raise ValueError("max_dist and min_dur must be positive")
        if self.t_max is not None and not self.t_max > 0:
            raise ValueError("t_max must be positive or None")


@dataclass(frozen=True)
class DBSCANConfig:
    eps: float = 15.0
    minpts: int = 0

    def __post_init__(self):
        if not self.eps > 0 or self.minpts < 0:
            raise ValueError("eps must be positive and minpts non-negative")


@dataclass(frozen=True)
class Location:
    id: int
    visits: tuple
    centroid: GeoPoint
    area: float


# Pluggable extractor signature; only thresholding ships with the package.
VisitExtractor = Callable[[Sequence[TrajectoryPoint], object], List[Visit]]


def extract_visits_threshold(traj: Sequence[TrajectoryPoint], cfg: ThresholdConfig) -> List[Visit]:
    """Greedy stay detection.

    A window grows while every member stays within ``max_dist`` of the
    window's running centroid and no gap exceeds ``t_max``. When a point
    breaks either rule the window is emitted (if it lasted longer than
    ``min_dur``) and a new window starts at that point.
    """
    pts = list(traj)
    if not pts:
        return []
    t = np.fromiter((p.t for p in pts), float, len(pts))
    lat = np.fromiter((p.pos.lat for p in pts), float, len(pts))
    lng = np.fromiter((p.pos.lng for p in pts), float, len(pts))
    visits = []

    def emit(a, b, clat, clng):
        # window is pts[a:b]
        if b - a >= 1 and t[b - 1] - t[a] > cfg.min_dur:
            r = float(np.max(haversine_array(lat[a:b], lng[a:b], clat, clng)))
            visits.append(Visit(float(t[a]), float(t[b - 1]), GeoPoint(clat, clng), r))

    start = 0
    sum_lat, sum_lng = lat[0], lng[0]
    for i in range(1, len(pts)):
        k = i - start + 1
        nlat = (sum_lat + lat[i]) / k
        nlng = (sum_lng + lng[i]) / k
        gap_ok = cfg.t_max is None or t[i] - t[i - 1] <= cfg.t_max
        ok = gap_ok and float(np.max(haversine_array(lat[start:i + 1], lng[start:i + 1], nlat, nlng))) <= cfg.max_dist
        if ok:
            sum_lat += lat[i]
            sum_lng += lng[i]
            continue
        n = i - start
        emit(start, i, sum_lat / n, sum_lng / n)
        start = i
        sum_lat, sum_lng = lat[i], lng[i]
    n = len(pts) - start
    emit(start, len(pts), sum_lat / n, sum_lng / n)
    return visits


def dbscan_labels(lat, lng, eps: float, minpts: int) -> np.ndarray:
    """DBSCAN over points with the haversine metric.

    A point is core when its eps-neighbourhood (itself included) holds at
    least ``minpts`` points, so ``minpts <= 1`` makes every point core and
    clusters become connected components of the eps-graph. Noise gets -1.
    Cluster ids are numbered in order of their first member.
    """
    lat = np.asarray(lat, float)
    lng = np.asarray(lng, float)
    n = len(lat)
    labels = np.full(n, -1, dtype=int)
    if n == 0:
        return labels
    dist = haversine_array(lat[:, None], lng[:, None], lat[None, :], lng[None, :])
    neigh = [np.flatnonzero(row <= eps) for row in dist]
    core = np.array([len(nb) >= minpts for nb in neigh])
    cluster = 0
    for i in range(n):
        if labels[i] != -1 or not core[i]:
            continue
        labels[i] = cluster
        stack = [i]
        while stack:
            j = stack.pop()
            for k in neigh[j]:
                if labels[k] == -1:
                    labels[k] = cluster
                    if core[k]:
                        stack.append(k)
        cluster += 1
    return labels


def cluster_visits_dbscan(visits: Sequence[Visit], cfg: DBSCANConfig = DBSCANConfig()) -> List[Location]:
    """Group visits into locations. Noise visits (only possible with
    ``minpts > 1``) each become a singleton location so every visit is placed.
    """
    visits = list(visits)
    labels = dbscan_labels([v.centroid.lat for v in visits], [v.centroid.lng for v in visits],
                           cfg.eps, cfg.minpts)
    next_id = int(labels.max()) + 1 if len(labels) else 0
    for i in range(len(labels)):
        if labels[i] == -1:
            labels[i] = next_id
            next_id += 1
    # renumber by first appearance
    order = {}
    for lab in labels:
        order.setdefault(int(lab), len(order))
    groups = [[] for _ in order]
    for v, lab in zip(visits, labels):
        groups[order[int(lab)]].append(v)
    out = []
    for lid, members in enumerate(groups):
        cents = [v.centroid for v in members]
        c = GeoPoint(sum(p.lat for p in cents) / len(cents), sum(p.lng for p in cents) / len(cents))
        out.append(Location(lid, tuple(members), c, convex_hull_area(cents)))
    return out


def location_sequence(locations: Iterable[Location]):
    """Visits relabelled by location, as ``(start, end, location_id)`` sorted by time."""
    seq = [(v.start, v.end, str(loc.id)) for loc in locations for v in loc.visits]
    seq.sort()
    return seq


def location_stats(locations: Sequence[Location]) -> dict:
    locations = list(locations)
    visits = [v for loc in locations for v in loc.visits]
    return {
        "interactions": len(visits),
        "elements": len(locations),
        "total_time": float(sum(v.duration for v in visits)),
        "mean_area": float(sum(loc.area for loc in locations) / len(locations)) if locations else 0.0,
    }


def save_locations(locations: Iterable[Location], path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["location_id", "visit_start", "visit_end", "lat", "lng"])
        for loc in locations:
            for v in loc.visits:
                w.writerow([loc.id, _num(v.start), _num(v.end), repr(v.centroid.lat), repr(v.centroid.lng)])


def _num(x):
    return int(x) if float(x).is_integer() else repr(float(x))
