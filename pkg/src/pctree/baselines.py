"""Flat next-location predictors used as comparison points."""

from __future__ import annotations

from collections import Counter, defaultdict
from typing import Dict, List, Optional, Sequence

import numpy as np

from .classifier import LinearMarginModel, derive_seed
from .evalkit import FeatureEncoder, Instance
from .pct import ClassifierParams


class OneVsRest:
    """One :class:`LinearMarginModel` per class; predicts the most confident class.

    Ties go to the lexicographically smallest class id. Per-class seeds are
    derived from the class id exactly as the tree derives leaf seeds.
    """

    def __init__(self, encoder: FeatureEncoder, models: Dict[str, LinearMarginModel]):
        self.encoder = encoder
        self.models = models
        self.classes = sorted(models)

    @classmethod
    def train(cls, instances: Sequence[Instance], params: ClassifierParams = ClassifierParams()) -> "OneVsRest":
        if not instances:
            raise ValueError("no training instances")
        encoder = FeatureEncoder().fit(instances)
        X = encoder.transform(instances)
        labels = [i.label for i in instances]
        models = {}
        for c in sorted(set(labels)):
            y = np.array([1.0 if lab == c else -1.0 for lab in labels])
            models[c] = LinearMarginModel(params.reg, params.epochs, params.eta0,
                                          derive_seed(params.seed, c)).fit(X, y)
        return cls(encoder, models)

    def confidences(self, instances: Sequence[Instance]) -> np.ndarray:
        X = self.encoder.transform(instances)
        out = np.empty((len(instances), len(self.classes)))
        for j, c in enumerate(self.classes):
            out[:, j] = self.models[c].confidence(X)
        return out

    def predict(self, instances: Sequence[Instance]) -> List[str]:
        C = self.confidences(instances)
        # argmax returns the first maximum; classes are sorted
        return [self.classes[int(j)] for j in np.argmax(C, axis=1)]


def train_ovr(instances: Sequence[Instance], params: ClassifierParams = ClassifierParams()) -> OneVsRest:
    return OneVsRest.train(instances, params)


class MarkovModel:
    """First-order (fully observed) Markov chain over visited ids.

    Transition probabilities use additive smoothing ``alpha``; prediction
    is the most probable next state, ties to the smallest id. States with
    no recorded departures fall back to the most common destination overall.
    """

    def __init__(self, alpha: float = 1.0):
        if alpha < 0:
            raise ValueError("alpha must be non-negative")
        self.alpha = alpha
        self.counts: Dict[str, Counter] = defaultdict(Counter)
        self.states: List[str] = []
        self.mode: Optional[str] = None

    def fit(self, sequences: Sequence[Sequence[str]]) -> "MarkovModel":
        states = set()
        dest = Counter()
        for seq in sequences:
            states.update(seq)
            for a, b in zip(seq, seq[1:]):
                self.counts[a][b] += 1
                dest[b] += 1
        if not dest:
            raise ValueError("no transitions to learn from")
        self.states = sorted(states)
        self.mode = min(dest, key=lambda s: (-dest[s], s))
        return self

    def prob(self, a: str, b: str) -> float:
        row = self.counts.get(a, Counter())
        k = len(self.states)
        denom = sum(row.values()) + self.alpha * k
        if denom == 0:
            return 1.0 / k
        return (row[b] + self.alpha) / denom

    def transition_matrix(self) -> np.ndarray:
        return np.array([[self.prob(a, b) for b in self.states] for a in self.states])

    def predict_next(self, state: str) -> str:
        row = self.counts.get(state)
        if not row:
            return self.mode
        # smoothing adds the same mass to every state, so raw counts decide
        return min(row, key=lambda s: (-row[s], s))


def train_markov(sequences: Sequence[Sequence[str]], alpha: float = 1.0) -> MarkovModel:
    return MarkovModel(alpha).fit(sequences)


def instance_sequence(instances: Sequence[Instance]) -> List[str]:
    """The visited-id sequence implied by consecutive instances."""
    if not instances:
        return []
    return [i.current_id for i in instances] + [instances[-1].label]


def markov_ceiling(sequence: Sequence[str]) -> float:
    """Best accuracy (%) any first-order predictor can reach on ``sequence`` in-sample."""
    counts: Dict[str, Counter] = defaultdict(Counter)
    for a, b in zip(sequence, sequence[1:]):
        counts[a][b] += 1
    total = sum(sum(c.values()) for c in counts.values())
    if total == 0:
        return 0.0
    return 100.0 * sum(max(c.values()) for c in counts.values()) / total
