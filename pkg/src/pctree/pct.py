"""Predictive Context Tree: a binary classifier on every non-root node,
traversed top-down to predict elements or contexts.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Set

import numpy as np

from .classifier import LinearMarginModel, derive_seed
from .ctree import ContextTree, leaf_id
from .evalkit import FeatureEncoder, Instance


class Label(enum.Enum):
    POSITIVE = 1
    NEGATIVE = -1
    IGNORE = 0


class Mode(enum.Enum):
    SINGLE_ELEMENT = "single_element"
    SINGLE_CONTEXT = "single_context"
    MULTI_ELEMENT = "multi_element"
    MULTI_CONTEXT = "multi_context"


@dataclass(frozen=True)
class PredictConfig:
    mode: Mode = Mode.SINGLE_ELEMENT
    t_s: float = 0.6

    def __post_init__(self):
        if not 0.0 <= self.t_s <= 1.0:
            raise ValueError("T_s must lie in [0, 1]")


@dataclass(frozen=True)
class ClassifierParams:
    reg: float = 1e-3
    epochs: int = 20
    eta0: float = 0.1
    seed: int = 0


def assign_training_label(tree: ContextTree, c: str, v: str) -> Label:
    """How node ``v``'s classifier treats an instance whose class is node ``c``.

    Positive when ``c`` is ``v`` or lies below it; negative when ``c`` is a
    sibling of ``v``, lies below a sibling, or is an ancestor of ``v``;
    ignored otherwise.
    """
    if v == tree.root:
        raise ValueError("the root node has no classifier")
    if c == v or tree.is_ancestor(v, c):
        return Label.POSITIVE
    parent = tree.parent(v)
    for s in tree.children(parent):
        if s != v and (c == s or tree.is_ancestor(s, c)):
            return Label.NEGATIVE
    if tree.is_ancestor(c, v):
        return Label.NEGATIVE
    return Label.IGNORE


def assign_set_label(tree: ContextTree, classes: Iterable[str], v: str) -> Label:
    """Set-valued class: positive if any member is, else negative if any member is."""
    labels = {assign_training_label(tree, c, v) for c in classes}
    if Label.POSITIVE in labels:
        return Label.POSITIVE
    if Label.NEGATIVE in labels:
        return Label.NEGATIVE
    return Label.IGNORE


def _model_key(tree: ContextTree, nid: str) -> str:
    # leaves key on their element so a flat one-vs-rest model with the same
    # seed reproduces the per-leaf classifiers of a depth-1 tree
    node = tree[nid]
    return node.element if node.is_leaf else nid


class PCT:
    def __init__(self, tree: ContextTree, encoder: FeatureEncoder, models: Dict[str, LinearMarginModel]):
        self.tree = tree
        self.encoder = encoder
        self.models = models
        self._order = [n for n in tree.walk() if n != tree.root]
        self._col = {n: i for i, n in enumerate(self._order)}
        self._sorted_children = {n: sorted(tree.children(n)) for n in tree.walk()}

    # -- training ---------------------------------------------------------

    @classmethod
    def train(cls, tree: ContextTree, instances: Sequence[Instance],
              params: ClassifierParams = ClassifierParams()) -> "PCT":
        if not instances:
            raise ValueError("no training instances")
        encoder = FeatureEncoder().fit(instances)
        X = encoder.transform(instances)
        classes = [frozenset(class_nodes(tree, inst)) for inst in instances]
        models = {}
        for nid in tree.walk():
            if nid == tree.root:
                continue
            rows, ys = [], []
            labels = {cs: assign_set_label(tree, cs, nid) for cs in set(classes)}
            for r, cs in enumerate(classes):
                lab = labels[cs]
                if lab is not Label.IGNORE:
                    rows.append(r)
                    ys.append(lab.value)
            m = LinearMarginModel(params.reg, params.epochs, params.eta0,
                                  derive_seed(params.seed, _model_key(tree, nid)))
            models[nid] = m.fit(X[rows] if rows else np.zeros((0, encoder.dim)), ys)
        return cls(tree, encoder, models)

    # -- confidences ------------------------------------------------------

    def confidences(self, instances: Sequence[Instance]) -> np.ndarray:
        """Matrix of classifier confidences, one column per non-root node (see :attr:`columns`)."""
        X = self.encoder.transform(instances)
        out = np.empty((len(instances), len(self._order)))
        for j, nid in enumerate(self._order):
            out[:, j] = self.models[nid].confidence(X)
        return out

    @property
    def columns(self) -> List[str]:
        return list(self._order)

    def _row(self, row):
        col = self._col
        return lambda nid: row[col[nid]]

    def _best(self, nid, conf):
        # sorted children + max() keeps the first maximum: smallest id wins ties
        return max(self._sorted_children[nid], key=conf)

    # -- traversal policies ----------------------------------------------

    def _single_element(self, conf) -> str:
        nid = self.tree.root
        while self._sorted_children[nid]:
            nid = self._best(nid, conf)
        return nid

    def _single_context(self, conf, t_s) -> str:
        nid = self.tree.root
        while self._sorted_children[nid]:
            best = self._best(nid, conf)
            if conf(best) < t_s:
                break
            nid = best
        return nid

    def _multi_element(self, conf, t_s) -> Set[str]:
        out = set()
        frontier = [self.tree.root]
        while frontier:
            nid = frontier.pop()
            kids = self._sorted_children[nid]
            if not kids:
                out.add(nid)
                continue
            chosen = [k for k in kids if conf(k) > t_s]
            frontier.extend(chosen or [self._best(nid, conf)])
        return out

    def _multi_context(self, conf, t_s) -> Set[str]:
        out = set()
        frontier = [self.tree.root]
        while frontier:
            nid = frontier.pop()
            chosen = [k for k in self._sorted_children[nid] if conf(k) > t_s]
            if chosen:
                frontier.extend(chosen)
            else:
                out.add(nid)
        return out

    def predict(self, instances: Sequence[Instance], config: PredictConfig = PredictConfig()) -> list:
        """Predictions for each instance: a node id for single modes, a set of ids otherwise."""
        C = self.confidences(instances)
        out = []
        for row in C:
            conf = self._row(row)
            if config.mode is Mode.SINGLE_ELEMENT:
                out.append(self._single_element(conf))
            elif config.mode is Mode.SINGLE_CONTEXT:
                out.append(self._single_context(conf, config.t_s))
            elif config.mode is Mode.MULTI_ELEMENT:
                out.append(self._multi_element(conf, config.t_s))
            else:
                out.append(self._multi_context(conf, config.t_s))
        return out

    def predict_single_element(self, instance: Instance) -> str:
        return self.predict([instance], PredictConfig(Mode.SINGLE_ELEMENT))[0]

    def predict_single_context(self, instance: Instance, t_s: float) -> str:
        return self.predict([instance], PredictConfig(Mode.SINGLE_CONTEXT, t_s))[0]

    def predict_multi_element(self, instance: Instance, t_s: float) -> Set[str]:
        return self.predict([instance], PredictConfig(Mode.MULTI_ELEMENT, t_s))[0]

    def predict_multi_context(self, instance: Instance, t_s: float) -> Set[str]:
        return self.predict([instance], PredictConfig(Mode.MULTI_CONTEXT, t_s))[0]

    # -- serialisation ----------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "tree": self.tree.to_dict(),
            "encoder": self.encoder.to_dict(),
            "models": {nid: self.models[nid].to_dict() for nid in self._order},
        }

    @classmethod
    def from_dict(cls, d) -> "PCT":
        return cls(ContextTree.from_dict(d["tree"]), FeatureEncoder.from_dict(d["encoder"]),
                   {k: LinearMarginModel.from_dict(v) for k, v in d["models"].items()})

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "PCT":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def class_nodes(tree: ContextTree, inst: Instance) -> Set[str]:
    """Live tree nodes standing for the instance's class.

    Labels are element ids; a label that is not an element but names a tree
    node (e.g. a context) is taken as that node.
    """
    out = set()
    elements = tree.elements()
    for e in inst.label_set:
        if e in elements:
            out.add(tree.element_node(e))
        elif e in tree:
            out.add(e)
        else:
            raise KeyError(f"class {e!r} is not in the tree")
    return out


def actual_nodes(tree: ContextTree, inst: Instance) -> Set[str]:
    """Original leaf ids of the class element(s), whether or not pruning removed them."""
    return {leaf_id(e) for e in inst.label_set}
