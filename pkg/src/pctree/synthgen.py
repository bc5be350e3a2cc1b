"""Deterministic synthetic worlds and agents with known ground truth.

All randomness comes from numpy's Philox4x64-10 counter-based generator,
seeded with the integer seed carried by ``WorldSpec`` or passed to
``gen_trajectory``. Rectangular buildings are scattered over a square
area; an agent follows a weekly routine, waiting at each stop until it has
to leave for the next one and then moving in a straight line at its travel
speed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .geo import (EARTH_RADIUS, GeoPoint, LandUsageElement, Polygon, Trajectory, TrajectoryPoint,
                  haversine_distance, offset)
from .ingest import LandUsageStore
from .summarise import Interaction

DAY = 86400
# Monday 2014-01-06 00:00 UTC
DEFAULT_START = 1388966400

DEFAULT_TAGS = (
    ("building", "residential"), ("building", "commercial"), ("building", "office"),
    ("building", "retail"), ("building", "university"), ("amenity", "cafe"),
    ("amenity", "restaurant"), ("amenity", "library"), ("leisure", "sports_centre"),
    ("leisure", "park"), ("shop", "supermarket"), ("shop", "clothes"),
)


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed))


@dataclass(frozen=True)
class WorldSpec:
    n_buildings: int = 8
    size_range: Tuple[float, float] = (20.0, 34.0)  # rectangle side lengths, metres
    area_km2: float = 1.0
    min_gap: float = 120.0  # clear space between buildings, metres
    tags: Tuple[Tuple[str, str], ...] = DEFAULT_TAGS
    tags_per_building: Tuple[int, int] = (1, 2)
    origin: Tuple[float, float] = (52.3793, -1.5615)  # lat, lng of the area's south-west corner
    seed: int = 0
    max_tries: int = 10_000


@dataclass(frozen=True)
class Building:
    id: str
    centroid: GeoPoint
    width: float
    height: float
    tags: frozenset

    @property
    def diameter(self) -> float:
        return math.hypot(self.width, self.height)


@dataclass
class World:
    spec: WorldSpec
    buildings: List[Building]
    store: LandUsageStore

    def building(self, bid: str) -> Building:
        return self._by_id[bid]

    def __post_init__(self):
        self._by_id = {b.id: b for b in self.buildings}


def gen_world(spec: WorldSpec) -> World:
    """Place ``spec.n_buildings`` non-overlapping tagged rectangles."""
    rng = make_rng(spec.seed)
    side = math.sqrt(spec.area_km2) * 1000.0
    lo, hi = spec.size_range
    origin = GeoPoint(*spec.origin)
    width = len(str(max(spec.n_buildings - 1, 1)))
    placed: List[Tuple[float, float, float]] = []  # x, y, half-diagonal
    buildings = []
    for k in range(spec.n_buildings):
        for _ in range(spec.max_tries):
            w, h = rng.uniform(lo, hi, size=2)
            x, y = rng.uniform(0, side, size=2)
            r = math.hypot(w, h) / 2
            if all(math.hypot(x - px, y - py) >= r + pr + spec.min_gap for px, py, pr in placed):
                break
        else:
            raise RuntimeError(f"could not place building {k} without overlap after {spec.max_tries} tries")
        placed.append((x, y, r))
        ntags = int(rng.integers(spec.tags_per_building[0], spec.tags_per_building[1] + 1))
        picks = rng.choice(len(spec.tags), size=min(ntags, len(spec.tags)), replace=False)
        tags = frozenset(spec.tags[i] for i in sorted(picks))
        c = offset(origin, float(x), float(y))
        buildings.append(Building(f"b{k:0{width}d}", c, float(w), float(h), tags))

    elements = []
    for b in buildings:
        ring = tuple(offset(b.centroid, sx * b.width / 2, sy * b.height / 2)
                     for sx, sy in ((-1, -1), (1, -1), (1, 1), (-1, 1)))
        elements.append(LandUsageElement(b.id, Polygon(ring), b.tags))
    return World(spec, buildings, LandUsageStore(elements))


@dataclass(frozen=True)
class RoutineEntry:
    weekday: int  # day within the routine cycle, 0 = the first Monday
    building: str
    arrival: float  # seconds after local midnight
    duration: float  # minimum time spent before moving on
    jitter: float = 0.0  # std-dev of the arrival time, seconds


@dataclass(frozen=True)
class AgentSchedule:
    routine: Tuple[RoutineEntry, ...]
    travel_speed: float = 5.0  # m/s
    noise_sigma: float = 0.0  # per-axis GPS noise, metres
    acc_range: Tuple[float, float] = (40.0, 60.0)
    period: float = 60.0
    gap_prob: float = 0.0  # chance per sample that a data gap starts
    gap_range: Tuple[float, float] = (600.0, 3600.0)
    cycle_days: int = 7  # routine repeats after this many days


@dataclass
class Stay:
    building: str
    start: float
    end: float
    min_duration: float = 0.0


def plan_stays(world: World, schedule: AgentSchedule, days: int, rng, start: int = DEFAULT_START) -> List[Stay]:
    """Jittered, clamped stays for ``days`` consecutive days.

    A stay lasts until the agent must leave for the next stop, and at least
    its scheduled duration; arrivals that would come too early are pushed back.
    """
    by_day: Dict[int, List[RoutineEntry]] = {}
    for e in schedule.routine:
        by_day.setdefault(e.weekday % schedule.cycle_days, []).append(e)
    for v in by_day.values():
        v.sort(key=lambda e: e.arrival)

    planned = []  # (building, arrival, min duration)
    for d in range(days):
        for e in by_day.get(d % schedule.cycle_days, []):
            a = start + d * DAY + e.arrival + (rng.normal(0.0, e.jitter) if e.jitter > 0 else 0.0)
            planned.append((e.building, a, e.duration))

    stays: List[Stay] = []
    for bid, a, dur in planned:
        if stays:
            prev = stays[-1]
            if prev.building == bid:
                continue
            travel = haversine_distance(world.building(prev.building).centroid,
                                        world.building(bid).centroid) / schedule.travel_speed
            a = max(a, prev.start + prev.min_duration + travel)
            prev.end = float(round(a - travel))
        a = float(round(a))
        stays.append(Stay(bid, a, a + round(dur), dur))
    return stays


def gen_trajectory(world: World, schedule: AgentSchedule, days: int, seed: int,
                   start: int = DEFAULT_START) -> Tuple[Trajectory, List[Interaction]]:
    """Sampled trajectory plus the ground-truth stays as interactions."""
    rng = make_rng(seed)
    if days <= 0:
        return Trajectory(()), []
    stays = plan_stays(world, schedule, days, rng, start)
    if not stays:
        return Trajectory(()), []
    truth = [Interaction(s.start, s.end, s.building) for s in stays]

    # piecewise-linear path: stays are constant segments, travel between them
    knots_t = []
    knots_xy = []
    origin = GeoPoint(*world.spec.origin)
    kx = math.cos(math.radians(origin.lat))

    def local(p: GeoPoint):
        # metres east/north of the origin
        return ((p.lng - origin.lng) * math.radians(1) * EARTH_RADIUS * kx,
                (p.lat - origin.lat) * math.radians(1) * EARTH_RADIUS)

    for s in stays:
        xy = local(world.building(s.building).centroid)
        knots_t += [s.start, s.end]
        knots_xy += [xy, xy]
    knots_t = np.array(knots_t)
    knots_xy = np.array(knots_xy)

    period = schedule.period
    first = math.ceil((stays[0].start - start) / period) * period + start
    t = np.arange(first, stays[-1].end + 1e-9, period)
    if schedule.gap_prob > 0 and len(t):
        keep = np.ones(len(t), dtype=bool)
        starts = rng.random(len(t)) < schedule.gap_prob
        lengths = rng.uniform(*schedule.gap_range, size=len(t))
        i = 0
        while i < len(t):
            if starts[i]:
                stop = t[i] + lengths[i]
                j = i
                while j < len(t) and t[j] < stop:
                    keep[j] = False
                    j += 1
                i = j
            else:
                i += 1
        t = t[keep]
    x = np.interp(t, knots_t, knots_xy[:, 0])
    y = np.interp(t, knots_t, knots_xy[:, 1])
    if schedule.noise_sigma > 0:
        x = x + rng.normal(0.0, schedule.noise_sigma, len(t))
        y = y + rng.normal(0.0, schedule.noise_sigma, len(t))
    acc = np.round(rng.uniform(*schedule.acc_range, size=len(t)), 1)

    lat = origin.lat + np.degrees(y / EARTH_RADIUS)
    lng = origin.lng + np.degrees(x / (EARTH_RADIUS * kx))
    points = tuple(
        TrajectoryPoint(int(ti), GeoPoint(float(la), float(ln)), float(a))
        for ti, la, ln, a in zip(t, lat, lng, acc)
    )
    return Trajectory(points), truth


def weekly_routine(world: World, jitter: float = 600.0) -> Tuple[RoutineEntry, ...]:
    """A plausible routine over the first eight buildings of ``world``.

    Weekdays: home, cafe, work, lunch, work, then gym or shop, home.
    Weekends: home, park or friend, market, home.
    """
    ids = [b.id for b in world.buildings]
    if len(ids) < 8:
        raise ValueError("routine needs at least 8 buildings")
    home, work, cafe, lunch, gym, shop, park, friend = ids[:8]
    H = 3600
    out = []
    for d in range(5):
        out += [
            RoutineEntry(d, cafe, 8 * H, 20 * 60, jitter),
            RoutineEntry(d, work, 8.75 * H, 3 * H, jitter),
            RoutineEntry(d, lunch, 12.5 * H, 40 * 60, jitter / 2),
            RoutineEntry(d, work, 13.5 * H, 3 * H, jitter / 2),
            RoutineEntry(d, gym if d % 2 == 0 else shop, 18 * H, 50 * 60, jitter),
            RoutineEntry(d, home, 19.5 * H, 10 * H, jitter),
        ]
    out += [
        RoutineEntry(5, park, 10 * H, 2 * H, jitter),
        RoutineEntry(5, shop, 13 * H, H, jitter),
        RoutineEntry(5, friend, 19 * H, 3 * H, jitter),
        RoutineEntry(5, home, 23.5 * H, 8 * H, jitter / 2),
        RoutineEntry(6, park, 11 * H, 2 * H, jitter),
        RoutineEntry(6, friend, 15 * H, 2 * H, jitter),
        RoutineEntry(6, home, 18.5 * H, 12 * H, jitter),
    ]
    return tuple(out)


def busy_routine(world: World, rng_seed: int = 0, stops_per_day: int = 6,
                 jitter: float = 600.0, cycle_days: int = 7) -> Tuple[RoutineEntry, ...]:
    """A denser routine touching many buildings, for scale testing.

    Each day of the cycle gets ``stops_per_day`` stops between 07:00 and
    22:00 drawn (deterministically) from the whole world, then home for the
    night. Pair with ``AgentSchedule(cycle_days=...)``.
    """
    rng = make_rng(rng_seed)
    ids = [b.id for b in world.buildings]
    home = ids[0]
    out = []
    span = 15 * 3600
    for d in range(cycle_days):
        picks = rng.choice(len(ids) - 1, size=stops_per_day, replace=False) + 1
        slot = span / stops_per_day
        for k, p in enumerate(picks):
            out.append(RoutineEntry(d, ids[int(p)], 7 * 3600 + k * slot, slot * 0.6, jitter))
        out.append(RoutineEntry(d, home, 22.5 * 3600, 8 * 3600, jitter))
    return tuple(out)
