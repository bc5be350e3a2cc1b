"""Collapse augmented trajectories into element interactions."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, List, Sequence

from .augment import AugmentedPoint


@dataclass(frozen=True)
class SummariseConfig:
    t_max: float = 3600.0
    d_min: float = 600.0

    def __post_init__(self):
        if not self.t_max > 0 or not self.d_min > 0:
            raise ValueError("t_max and d_min must be positive")


@dataclass(frozen=True, order=True)
class Interaction:
    start: float
    end: float
    element: str

    @property
    def duration(self) -> float:
        return self.end - self.start


def summarise(aug: Sequence[AugmentedPoint], config: SummariseConfig) -> List[Interaction]:
    """Interactions lasting strictly longer than ``d_min``, sorted by start time.

    An interaction ends when its element leaves the point's element set, or
    when consecutive points are more than ``t_max`` apart (in which case every
    ongoing interaction ends and the current elements start afresh).
    Interactions still open after the last point end at its timestamp.
    """
    if not aug:
        return []
    stored: List[Interaction] = []
    ongoing: Dict[str, float] = {}
    prev = aug[0].t
    d_min = config.d_min

    def close(elements, at):
        for e in sorted(elements):
            if at - ongoing[e] > d_min:
                stored.append(Interaction(ongoing[e], at, e))
            del ongoing[e]

    for ap in aug:
        current = set(ap.elements)
        if ap.t - prev > config.t_max:
            to_end = set(ongoing)
            to_start = current
        else:
            to_end = set(ongoing) - current
            to_start = current - set(ongoing)
        close(to_end, prev)
        for e in to_start:
            ongoing[e] = ap.t
        prev = ap.t
    close(set(ongoing), prev)
    stored.sort()
    return stored


def interaction_stats(interactions: Iterable[Interaction], area) -> dict:
    """Counts behind the dataset-summary figures.

    ``area`` maps an element id to its area in m^2 (a dict or a callable).
    """
    interactions = list(interactions)
    get_area = area if callable(area) else area.__getitem__
    elements = sorted({i.element for i in interactions})
    return {
        "interactions": len(interactions),
        "elements": len(elements),
        "total_time": float(sum(i.duration for i in interactions)),
        "mean_area": float(sum(get_area(e) for e in elements) / len(elements)) if elements else 0.0,
    }


def save_interactions(interactions: Iterable[Interaction], path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["element_id", "start", "end"])
        for i in interactions:
            w.writerow([i.element, _num(i.start), _num(i.end)])


def load_interactions(path) -> List[Interaction]:
    out = []
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != ["element_id", "start", "end"]:
            raise ValueError(f"{path}: expected header element_id,start,end")
        for row in reader:
            out.append(Interaction(float(row["start"]), float(row["end"]), row["element_id"]))
    out.sort()
    return out


def _num(x: float):
    return int(x) if float(x).is_integer() else repr(float(x))
