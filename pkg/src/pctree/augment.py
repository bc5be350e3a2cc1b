"""Attach the most likely land-usage elements to each trajectory point.

Each point first collects every element (no wider than ``maxradius``) that
lies partially or wholly inside its accuracy circle. A second pass scores
those candidates over a buffer of points within ``delta`` seconds of the
point and keeps the ``n`` best.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, FrozenSet, List, Sequence, Tuple

from .geo import GeoPoint, TrajectoryPoint, point_polygon_distance
from .ingest import LandUsageStore, ParseError, query_elements


@dataclass(frozen=True)
class AugmentConfig:
    n: int = 1
    maxradius: float = 50.0
    delta: float = 300.0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if not self.maxradius > 0:
            raise ValueError("maxradius must be positive")
        if not self.delta > 0:
            raise ValueError("delta must be positive")


@dataclass(frozen=True)
class AugmentedPoint:
    point: TrajectoryPoint
    elements: Tuple[str, ...]

    @property
    def t(self):
        return self.point.t


# (point, raw candidate ids) pairs; the unit the scoring works on
Candidate = Tuple[TrajectoryPoint, FrozenSet[str]]


def candidate_elements(point: TrajectoryPoint, store: LandUsageStore, maxradius: float) -> FrozenSet[str]:
    return frozenset(query_elements(store, point.pos, point.acc, maxradius))


def score_element(e: str, buffer: Sequence[Candidate], p_c: TrajectoryPoint, delta: float) -> float:
    """Weighted support for ``e`` over the buffer around ``p_c``.

    Each buffer point that lists ``e`` contributes ``(1/acc) * (1 - |dt|/delta)``;
    the sum is multiplied by the number of such points.
    """
    total = 0.0
    count = 0
    for p, cands in buffer:
        if e in cands:
            count += 1
            total += (1.0 / p.acc) * (1.0 - abs(p.t - p_c.t) / delta)
    return total * count


def filter_point(p_c: TrajectoryPoint, own: FrozenSet[str], buffer: Sequence[Candidate],
                 config: AugmentConfig, store: LandUsageStore) -> Tuple[str, ...]:
    """Top ``config.n`` of the point's own candidates by buffer score.

    Ties go to the element nearer the point, then to the smaller id.
    """
    if not own:
        return ()
    ranked = []
    for e in own:
        s = score_element(e, buffer, p_c, config.delta)
        ranked.append((-s, e))
    ranked.sort()
    # distances are only needed where scores collide
    scores = [r[0] for r in ranked]
    if len(set(scores)) != len(scores):
        ranked = sorted(
            (s, point_polygon_distance(p_c.pos, store[e].shape), e) for s, e in ranked
        )
        return tuple(r[2] for r in ranked[: config.n])
    return tuple(r[1] for r in ranked[: config.n])


def augment_trajectory(traj: Sequence[TrajectoryPoint], store: LandUsageStore,
                       config: AugmentConfig) -> List[AugmentedPoint]:
    """One :class:`AugmentedPoint` per input point, in input order.

    The buffer is a two-pointer window over the time-sorted candidate stream,
    so the cost is linear in the trajectory length for bounded sampling rates.
    """
    points = list(traj)
    cands: List[FrozenSet[str]] = []
    cache: Dict[tuple, FrozenSet[str]] = {}
    for p in points:
        key = (p.pos.lat, p.pos.lng, p.acc)
        c = cache.get(key)
        if c is None:
            c = candidate_elements(p, store, config.maxradius)
            cache[key] = c
        cands.append(c)

    out = []
    delta = config.delta
    lo = hi = 0
    n = len(points)
    for i, p in enumerate(points):
        while points[lo].t < p.t - delta:
            lo += 1
        if hi < i:
            hi = i
        while hi + 1 < n and points[hi + 1].t <= p.t + delta:
            hi += 1
        if not cands[i]:
            out.append(AugmentedPoint(p, ()))
            continue
        buffer = [(points[k], cands[k]) for k in range(lo, hi + 1)]
        out.append(AugmentedPoint(p, filter_point(p, cands[i], buffer, config, store)))
    return out


AUGMENTED_HEADER = ["t", "lat", "lng", "acc", "elements"]


def save_augmented(aug: Sequence[AugmentedPoint], path) -> None:
    """CSV with the trajectory columns plus ``;``-joined element ids."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(AUGMENTED_HEADER)
        for a in aug:
            p = a.point
            w.writerow([int(p.t), repr(p.pos.lat), repr(p.pos.lng), repr(p.acc), ";".join(a.elements)])


def load_augmented(path) -> List[AugmentedPoint]:
    path = Path(path)
    out = []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        if next(reader, None) != AUGMENTED_HEADER:
            raise ParseError(path, 1, f"expected header {','.join(AUGMENTED_HEADER)}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 5:
                raise ParseError(path, lineno, f"expected 5 fields, got {len(row)}")
            try:
                p = TrajectoryPoint(int(row[0]), GeoPoint(float(row[1]), float(row[2])), float(row[3]))
            except ValueError as exc:
                raise ParseError(path, lineno, str(exc)) from None
            out.append(AugmentedPoint(p, tuple(e for e in row[4].split(";") if e)))
    return out
