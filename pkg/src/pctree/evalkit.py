"""Instances, chronological splits and prediction scoring."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .ctree import ContextTree
from .summarise import Interaction

LABEL_SEP = "+"


@dataclass(frozen=True)
class Instance:
    day_of_year: int
    day_of_week: int  # Monday = 1
    start_hour: int
    start_minute: int
    duration: float
    current_id: str
    label: str  # next id, or a canonical "+"-joined set for multi-element data
    start: float = 0.0  # epoch seconds, kept for ordering

    @property
    def label_set(self) -> Tuple[str, ...]:
        return tuple(self.label.split(LABEL_SEP))


def canonical_label(ids: Iterable[str]) -> str:
    ids = sorted(set(ids))
    if not ids:
        raise ValueError("empty class label")
    return LABEL_SEP.join(ids)


def _calendar(start: float, tz_offset: float):
    dt = datetime.fromtimestamp(start + tz_offset, tz=timezone.utc)
    tt = dt.timetuple()
    return tt.tm_yday, dt.isoweekday(), dt.hour, dt.minute


def _qualifying(interactions: Iterable[Interaction], d_min: float) -> List[Interaction]:
    return sorted(i for i in interactions if i.duration > d_min)


def gen_instances(interactions: Iterable[Interaction], d_min: float = 0.0,
                  tz_offset: float = 0.0) -> List[Instance]:
    """One instance per interaction longer than ``d_min``, labelled with the next one's id.

    The last qualifying interaction has no successor and yields nothing.
    """
    its = _qualifying(interactions, d_min)
    out = []
    for cur, nxt in zip(its, its[1:]):
        doy, dow, hh, mm = _calendar(cur.start, tz_offset)
        out.append(Instance(doy, dow, hh, mm, cur.duration, cur.element, nxt.element, cur.start))
    return out


def gen_multi_instances(interactions: Iterable[Interaction], d_min: float = 0.0,
                        tz_offset: float = 0.0) -> List[Instance]:
    """Like :func:`gen_instances`, but the label is the next interaction's
    element together with every element whose interaction overlaps it.
    """
    its = _qualifying(interactions, d_min)
    out = []
    for k in range(len(its) - 1):
        cur, nxt = its[k], its[k + 1]
        members = {nxt.element}
        for other in its:
            if other.start > nxt.end:
                break
            if other.start < nxt.end and other.end > nxt.start:
                members.add(other.element)
        doy, dow, hh, mm = _calendar(cur.start, tz_offset)
        out.append(Instance(doy, dow, hh, mm, cur.duration, cur.element, canonical_label(members), cur.start))
    return out


def split_chronological(instances: Sequence[Instance], train_fraction: float = 0.8):
    """Prefix/suffix split in time order."""
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train fraction must lie strictly between 0 and 1")
    items = sorted(instances, key=lambda i: i.start)
    k = int(round(len(items) * train_fraction))
    train, test = items[:k], items[k:]
    if not train or not test:
        raise ValueError(f"split of {len(items)} instances at {train_fraction} leaves a side empty")
    return train, test


class FeatureEncoder:
    """Standardised numeric features plus a one-hot current id.

    Ids not seen at fit time encode as all zeros.
    """

    NUMERIC = ("day_of_year", "day_of_week", "start_hour", "start_minute", "duration")

    def __init__(self, mean=None, std=None, vocab: Sequence[str] = ()):
        self.mean = None if mean is None else np.asarray(mean, float)
        self.std = None if std is None else np.asarray(std, float)
        self.vocab = list(vocab)
        self._index = {v: i for i, v in enumerate(self.vocab)}

    def fit(self, instances: Sequence[Instance]) -> "FeatureEncoder":
        raw = self._numeric(instances)
        self.mean = raw.mean(axis=0) if len(raw) else np.zeros(len(self.NUMERIC))
        std = raw.std(axis=0) if len(raw) else np.ones(len(self.NUMERIC))
        self.std = np.where(std > 0, std, 1.0)
        self.vocab = sorted({i.current_id for i in instances})
        self._index = {v: i for i, v in enumerate(self.vocab)}
        return self

    def _numeric(self, instances) -> np.ndarray:
        return np.array([[getattr(i, f) for f in self.NUMERIC] for i in instances], dtype=float).reshape(-1, len(self.NUMERIC))

    @property
    def dim(self) -> int:
        return len(self.NUMERIC) + len(self.vocab)

    def transform(self, instances: Sequence[Instance]) -> np.ndarray:
        num = (self._numeric(instances) - self.mean) / self.std
        hot = np.zeros((len(instances), len(self.vocab)))
        for r, inst in enumerate(instances):
            c = self._index.get(inst.current_id)
            if c is not None:
                hot[r, c] = 1.0
        return np.hstack([num, hot])

    def to_dict(self) -> dict:
        return {"mean": [float(v) for v in self.mean], "std": [float(v) for v in self.std], "vocab": self.vocab}

    @classmethod
    def from_dict(cls, d) -> "FeatureEncoder":
        return cls(d["mean"], d["std"], d["vocab"])


# --------------------------------------------------------------------------
# scoring


class SingleOutcome(enum.Enum):
    ELEMENT_CORRECT = "element_correct"
    CONTEXT_CORRECT = "context_correct"
    INCORRECT = "incorrect"


class MultiOutcome(enum.Enum):
    FULLY_ELEMENT_CORRECT = "fully_element_correct"
    FULLY_CONTEXT_CORRECT = "fully_context_correct"
    PARTIAL_ELEMENT_CORRECT = "partial_element_correct"
    PARTIAL_CONTEXT_CORRECT = "partial_context_correct"
    INCORRECT = "incorrect"


def _check(tree: ContextTree, nid):
    if not tree.known(nid):
        raise KeyError(f"unknown tree node {nid!r}")


def score_single(predicted: str, actual: str, tree: ContextTree) -> SingleOutcome:
    """Element correct on an exact match, context correct when ``predicted``
    is a strict ancestor of ``actual``, otherwise incorrect.

    ``actual`` may be a leaf that pruning removed; its ancestry is resolved
    through the collapsed context that absorbed it.
    """
    _check(tree, predicted)
    _check(tree, actual)
    if predicted == actual:
        return SingleOutcome.ELEMENT_CORRECT
    if tree.is_ancestor(predicted, actual):
        return SingleOutcome.CONTEXT_CORRECT
    return SingleOutcome.INCORRECT


def score_multi(predicted: Iterable[str], actual: Iterable[str], tree: ContextTree) -> MultiOutcome:
    """First matching test wins: exact set; full cover by self-or-ancestor with
    no stray predictions; any exact overlap; any ancestor overlap; incorrect."""
    P = set(predicted)
    A = set(actual)
    for n in P | A:
        _check(tree, n)
    if P == A:
        return MultiOutcome.FULLY_ELEMENT_CORRECT
    anc = {a: set(tree.ancestors(a)) for a in A}
    covered = all(a in P or anc[a] & P for a in A)
    relevant = all(any(p == a or p in anc[a] for a in A) for p in P)
    if covered and relevant:
        return MultiOutcome.FULLY_CONTEXT_CORRECT
    if P & A:
        return MultiOutcome.PARTIAL_ELEMENT_CORRECT
    if P & set().union(*anc.values()):
        return MultiOutcome.PARTIAL_CONTEXT_CORRECT
    return MultiOutcome.INCORRECT


def breakdown(outcomes: Sequence[enum.Enum], kind) -> Dict[str, float]:
    """Percentage of each outcome category (all categories present, summing to 100)."""
    n = len(outcomes)
    counts = {o.value: 0 for o in kind}
    for o in outcomes:
        counts[o.value] += 1
    return {k: (100.0 * v / n if n else 0.0) for k, v in counts.items()}


def flat_accuracy(predicted: Sequence[Optional[str]], instances: Sequence[Instance]) -> float:
    """Percentage of exact label matches."""
    if not instances:
        return 0.0
    hits = sum(p == i.label for p, i in zip(predicted, instances))
    return 100.0 * hits / len(instances)
