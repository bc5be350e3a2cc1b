"""Small builders shared by several test modules."""

import random

from pctree.geo import GeoPoint, LandUsageElement, Polygon, TrajectoryPoint, offset
from pctree.ingest import LandUsageStore

BASE = GeoPoint(52.38, -1.56)


def rect(center, w, h):
    return Polygon(tuple(offset(center, sx * w / 2, sy * h / 2) for sx, sy in ((-1, -1), (1, -1), (1, 1), (-1, 1))))


def element(eid, east, north, w=20.0, h=20.0, tags=()):
    return LandUsageElement(eid, rect(offset(BASE, east, north), w, h), frozenset(tags))


def random_store(seed, count=120, extent=1500.0, big=0.2, cell_size=200.0):
    """Random rectangles, some larger than typical maxradius values; they may overlap."""
    rnd = random.Random(seed)
    els = []
    for k in range(count):
        side = rnd.uniform(150, 400) if rnd.random() < big else rnd.uniform(5, 60)
        els.append(element(f"e{k:03d}", rnd.uniform(-extent, extent), rnd.uniform(-extent, extent),
                           side, rnd.uniform(5, 60)))
    return LandUsageStore(els, cell_size=cell_size)


def point(t, east, north, acc=10.0):
    return TrajectoryPoint(t, offset(BASE, east, north), acc)
