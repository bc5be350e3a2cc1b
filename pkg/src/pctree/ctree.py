"""Context trees: hierarchical clustering of elements by usage and tags.

Leaves are elements; every internal node is a context grouping the
elements below it. Elements are merged bottom-up with average linkage
under a hybrid similarity that blends tag overlap (weight ``lam``) with
similarity of interaction features (weight ``1 - lam``).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence

import numpy as np

from .summarise import Interaction

WEEK = 7 * 86400.0
LEAF_PREFIX = "e:"


def leaf_id(element: str) -> str:
    return LEAF_PREFIX + element


# --------------------------------------------------------------------------
# similarity


def semantic_similarity(tags_a: Iterable, tags_b: Iterable) -> float:
    """Jaccard index of two tag sets (0 when both are empty)."""
    a, b = set(tags_a), set(tags_b)
    union = a | b
    if not union:
        return 0.0
    return len(a & b) / len(union)


FEATURE_NAMES = ("start_hour", "duration", "per_week", "weekday_frac", "time_share")


def element_features(interactions: Sequence[Interaction], elements: Iterable[str],
                     tz_offset: float = 0.0) -> Dict[str, np.ndarray]:
    """Per-element usage features, in the order of :data:`FEATURE_NAMES`.

    The start hour is a circular mean so visits either side of midnight
    average sensibly. Rates are per week of the whole dataset's span
    (never less than one week). Elements without interactions get zeros.
    """
    by_el: Dict[str, List[Interaction]] = {}
    for it in interactions:
        by_el.setdefault(it.element, []).append(it)
    if interactions:
        span = max(i.end for i in interactions) - min(i.start for i in interactions)
    else:
        span = 0.0
    weeks = max(span / WEEK, 1.0)
    total = sum(i.duration for i in interactions)

    out = {}
    for e in elements:
        its = by_el.get(e, [])
        if not its:
            out[e] = np.zeros(len(FEATURE_NAMES))
            continue
        sin = cos = 0.0
        weekday = 0
        for it in its:
            dt = datetime.fromtimestamp(it.start + tz_offset, tz=timezone.utc)
            hour = dt.hour + dt.minute / 60.0 + dt.second / 3600.0
            ang = 2 * math.pi * hour / 24.0
            sin += math.sin(ang)
            cos += math.cos(ang)
            weekday += dt.weekday() < 5
        mean_hour = (math.degrees(math.atan2(sin, cos)) / 15.0) % 24.0
        dur = sum(i.duration for i in its)
        out[e] = np.array([
            mean_hour,
            dur / len(its),
            len(its) / weeks,
            weekday / len(its),
            dur / total if total > 0 else 0.0,
        ])
    return out


@dataclass(frozen=True)
class FeatureScale:
    lo: np.ndarray
    hi: np.ndarray

    @classmethod
    def fit(cls, vectors: Iterable[np.ndarray]) -> "FeatureScale":
        m = np.array(list(vectors), dtype=float)
        if m.size == 0:
            return cls(np.zeros(len(FEATURE_NAMES)), np.zeros(len(FEATURE_NAMES)))
        return cls(m.min(axis=0), m.max(axis=0))


def feature_similarity(fa: np.ndarray, fb: np.ndarray, scale: FeatureScale) -> float:
    """``1 - ||(fa - fb) / range|| / sqrt(dim)``; zero-range dimensions are ignored."""
    rng = scale.hi - scale.lo
    diff = np.where(rng > 0, (np.asarray(fa) - np.asarray(fb)) / np.where(rng > 0, rng, 1.0), 0.0)
    d = math.sqrt(float(np.sum(diff * diff)) / len(diff))
    return 1.0 - min(d, 1.0)


def hcd(sem: float, feat: float, lam: float) -> float:
    """Hybrid similarity: ``lam`` weights tags, ``1 - lam`` weights usage."""
    if not 0.0 <= lam <= 1.0:
        raise ValueError("lambda must lie in [0, 1]")
    return lam * sem + (1.0 - lam) * feat


def similarity_matrix(ids: Sequence[str], tags: Mapping[str, FrozenSet], feats: Mapping[str, np.ndarray],
                      lam: float) -> np.ndarray:
    scale = FeatureScale.fit(feats[e] for e in ids)
    k = len(ids)
    S = np.zeros((k, k))
    for i in range(k):
        for j in range(i + 1, k):
            s = hcd(semantic_similarity(tags[ids[i]], tags[ids[j]]),
                    feature_similarity(feats[ids[i]], feats[ids[j]], scale), lam)
            S[i, j] = S[j, i] = s
    return S


# --------------------------------------------------------------------------
# tree


class EmptyTree(ValueError):
    pass


@dataclass
class TreeNode:
    id: str
    element: Optional[str]  # None for context nodes
    children: List[str] = field(default_factory=list)
    parent: Optional[str] = None
    size: int = 1  # node count of this subtree before any pruning
    covers: FrozenSet[str] = frozenset()  # elements at or below this node

    @property
    def is_leaf(self) -> bool:
        return self.element is not None


class ContextTree:
    """Immutable-by-convention tree of :class:`TreeNode`.

    ``removed`` maps ids of nodes cut away by pruning to the terminal node
    that absorbed them, so ancestry questions about pruned leaves still work.
    """

    def __init__(self, nodes: Mapping[str, TreeNode], root: str, removed: Optional[Mapping[str, str]] = None):
        self.nodes: Dict[str, TreeNode] = dict(nodes)
        self.root = root
        self.removed: Dict[str, str] = dict(removed or {})
        self._element_node: Dict[str, str] = {}
        for nid in self.walk():
            node = self.nodes[nid]
            if not node.children:
                for e in node.covers:
                    self._element_node[e] = nid

    def __contains__(self, nid):
        return nid in self.nodes

    def __len__(self):
        return len(self.nodes)

    def __getitem__(self, nid) -> TreeNode:
        return self.nodes[nid]

    def __eq__(self, other):
        if not isinstance(other, ContextTree):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    def walk(self, start: Optional[str] = None):
        """Pre-order node ids, children in stored order."""
        stack = [self.root if start is None else start]
        while stack:
            nid = stack.pop()
            yield nid
            stack.extend(reversed(self.nodes[nid].children))

    def children(self, nid) -> List[str]:
        return self.nodes[nid].children

    def parent(self, nid) -> Optional[str]:
        return self.nodes[nid].parent

    def terminals(self) -> List[str]:
        """Nodes without children: leaves plus collapsed contexts."""
        return [n for n in self.walk() if not self.nodes[n].children]

    def leaves(self) -> List[str]:
        return [n for n in self.walk() if self.nodes[n].is_leaf]

    def elements(self) -> FrozenSet[str]:
        return self.nodes[self.root].covers

    def known(self, nid) -> bool:
        return nid in self.nodes or nid in self.removed

    def element_node(self, element: str) -> str:
        """The live node standing for ``element`` (its leaf, or the collapsed context holding it)."""
        return self._element_node[element]

    def ancestors(self, nid) -> List[str]:
        """Strict ancestors, nearest first. Works for pruned-away ids too."""
        if nid in self.removed:
            host = self.removed[nid]
            return [host] + self.ancestors(host)
        if nid not in self.nodes:
            raise KeyError(nid)
        out = []
        p = self.nodes[nid].parent
        while p is not None:
            out.append(p)
            p = self.nodes[p].parent
        return out

    def is_ancestor(self, a, b) -> bool:
        """True when ``a`` is a strict ancestor of ``b``."""
        return a in self.ancestors(b)

    def in_subtree(self, nid, root) -> bool:
        return nid == root or self.is_ancestor(root, nid)

    def depth(self) -> int:
        best = 0
        for n in self.walk():
            d = len(self.ancestors(n))
            best = max(best, d)
        return best

    # serialisation ------------------------------------------------------

    def to_dict(self) -> dict:
        nodes = []
        for nid in self.walk():
            n = self.nodes[nid]
            nodes.append({
                "id": n.id,
                "kind": "leaf" if n.is_leaf else "context",
                "element": n.element,
                "children": list(n.children),
                "size": n.size,
                "covers": sorted(n.covers),
            })
        return {"root": self.root, "nodes": nodes, "removed": dict(sorted(self.removed.items()))}

    @classmethod
    def from_dict(cls, doc: dict) -> "ContextTree":
        nodes = {}
        for d in doc["nodes"]:
            nodes[d["id"]] = TreeNode(d["id"], d["element"], list(d["children"]), None,
                                      int(d["size"]), frozenset(d["covers"]))
        for n in nodes.values():
            for c in n.children:
                nodes[c].parent = n.id
        return cls(nodes, doc["root"], doc.get("removed", {}))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "ContextTree":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def tree_from_nested(spec, name: str = "root") -> ContextTree:
    """Build a tree from nested lists, e.g. ``[["a", "b"], "c"]``.

    Strings are element leaves; lists are contexts named ``name``, ``name.0``,
    ``name.1`` and so on. Handy for tests and hand-made hierarchies.
    """
    nodes: Dict[str, TreeNode] = {}

    def rec(s, nid, parent):
        if isinstance(s, str):
            lid = leaf_id(s)
            nodes[lid] = TreeNode(lid, s, [], parent, 1, frozenset([s]))
            return lid
        node = TreeNode(nid, None, [], parent)
        nodes[nid] = node
        for i, child in enumerate(s):
            node.children.append(rec(child, f"{nid}.{i}", nid))
        node.size = 1 + sum(nodes[c].size for c in node.children)
        node.covers = frozenset().union(*(nodes[c].covers for c in node.children))
        return nid

    rec(spec, name, None)
    return ContextTree(nodes, name)


def build_tree(tags: Mapping[str, FrozenSet], interactions: Sequence[Interaction], lam: float = 0.5,
               tz_offset: float = 0.0) -> ContextTree:
    """Average-linkage agglomerative clustering of the elements in ``tags``.

    Each step merges the most similar pair of clusters (ties: the
    lexicographically smallest pair of node ids) into a new context node.
    The final merge is the root; a single element gets a root above it.
    """
    ids = sorted(tags)
    if not ids:
        raise EmptyTree("cannot build a context tree without elements")
    feats = element_features(interactions, ids, tz_offset)
    S = similarity_matrix(ids, tags, feats, lam)

    nodes: Dict[str, TreeNode] = {}
    for e in ids:
        nodes[leaf_id(e)] = TreeNode(leaf_id(e), e, [], None, 1, frozenset([e]))
    k = len(ids)
    width = len(str(max(k - 1, 1)))
    if k == 1:
        root = TreeNode("c" + "0" * width, None, [leaf_id(ids[0])], None, 2, frozenset(ids))
        nodes[leaf_id(ids[0])].parent = root.id
        nodes[root.id] = root
        return ContextTree(nodes, root.id)

    slot_id = [leaf_id(e) for e in ids]
    slot_n = [1] * k
    active = np.ones(k, dtype=bool)
    M = S.copy()
    np.fill_diagonal(M, -np.inf)
    step = 0
    while active.sum() > 1:
        masked = np.where(active[:, None] & active[None, :], M, -np.inf)
        best = masked.max()
        ii, jj = np.nonzero(masked == best)
        pairs = [tuple(sorted((slot_id[i], slot_id[j]))) + (i, j) for i, j in zip(ii, jj) if i < j]
        a_id, b_id, i, j = min(pairs)
        nid = f"c{step:0{width}d}"
        step += 1
        na, nb = slot_n[i], slot_n[j]
        node = TreeNode(nid, None, [a_id, b_id], None,
                        1 + nodes[a_id].size + nodes[b_id].size,
                        nodes[a_id].covers | nodes[b_id].covers)
        nodes[a_id].parent = nid
        nodes[b_id].parent = nid
        nodes[nid] = node
        row = (na * M[i] + nb * M[j]) / (na + nb)
        M[i, :] = row
        M[:, i] = row
        M[i, i] = -np.inf
        active[j] = False
        slot_id[i] = nid
        slot_n[i] = na + nb
    return ContextTree(nodes, slot_id[int(np.flatnonzero(active)[0])])


# --------------------------------------------------------------------------
# pruning


@dataclass(frozen=True)
class PruneConfig:
    theta: float = 0.0
    xi: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.theta <= 1.0:
            raise ValueError("theta must lie in [0, 1]")
        if self.xi < 0:
            raise ValueError("xi must be non-negative")


def node_benefit(tree: ContextTree, nid: str, time_by_element: Mapping[str, float], total: float) -> float:
    if total <= 0:
        return 0.0
    return sum(time_by_element.get(e, 0.0) for e in tree[nid].covers) / total


def node_cost(tree: ContextTree, nid: str, xi: float) -> float:
    return xi * tree[nid].size / tree[tree.root].size


def prune(tree: ContextTree, cfg: PruneConfig, interactions: Sequence[Interaction]) -> ContextTree:
    """Collapse context nodes whose benefit minus cost falls below ``theta``.

    Benefit is the node's share of total interaction time; cost is ``xi``
    times its share of the (unpruned) node count. A collapsed node keeps its
    place but loses its descendants. The root is never collapsed. Node sizes
    are measured on the original tree, so pruning twice changes nothing.
    """
    time_by_element: Dict[str, float] = {}
    for it in interactions:
        time_by_element[it.element] = time_by_element.get(it.element, 0.0) + it.duration
    total = sum(time_by_element.values())

    nodes = {nid: TreeNode(n.id, n.element, list(n.children), n.parent, n.size, n.covers)
             for nid, n in tree.nodes.items()}
    removed = dict(tree.removed)

    def collapse(nid):
        for d in list(tree.walk(nid))[1:]:
            removed[d] = nid
            nodes.pop(d, None)
        # anything earlier pruning folded into a descendant now folds into nid
        for k, v in removed.items():
            if v not in nodes:
                removed[k] = nid
        nodes[nid].children = []

    stack = list(tree.children(tree.root))
    while stack:
        nid = stack.pop()
        node = tree[nid]
        if node.is_leaf or not node.children:
            continue
        score = node_benefit(tree, nid, time_by_element, total) - node_cost(tree, nid, cfg.xi)
        if score < cfg.theta:
            collapse(nid)
        else:
            stack.extend(node.children)
    return ContextTree(nodes, tree.root, removed)
