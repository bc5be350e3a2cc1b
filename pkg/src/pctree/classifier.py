"""Linear max-margin binary classifier trained by stochastic subgradient descent."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

MARGIN_CLIP = 30.0


def derive_seed(seed: int, key: str) -> int:
    """Stable per-key seed (independent of PYTHONHASHSEED)."""
    h = hashlib.sha256(f"{seed}:{key}".encode()).digest()
    return int.from_bytes(h[:8], "little")


@dataclass
class LinearMarginModel:
    """L2-regularised hinge-loss model; ``confidence`` squashes the margin.

    Training visits the samples in a fresh seeded permutation every epoch
    with step size ``eta0 / (1 + eta0 * reg * t)``. The bias is not
    regularised. When the training labels are all one class the model is a
    constant (1.0 for all-positive, 0.0 for all-negative or no data).
    """

    reg: float = 1e-3
    epochs: int = 20
    eta0: float = 0.1
    seed: int = 0
    w: Optional[np.ndarray] = field(default=None, repr=False)
    b: float = 0.0
    constant: Optional[float] = None

    def fit(self, X, y) -> "LinearMarginModel":
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        self.w = np.zeros(X.shape[1] if X.ndim == 2 else 0)
        self.b = 0.0
        if len(y) == 0 or np.all(y < 0):
            self.constant = 0.0
            return self
        if np.all(y > 0):
            self.constant = 1.0
            return self
        self.constant = None

        rng = np.random.Generator(np.random.Philox(self.seed))
        # rows are mostly one-hot, so keep only their non-zeros, and hold the
        # weights as scale * v so the per-step shrinkage is O(1)
        sparse = [[(int(k), float(row[k])) for k in np.flatnonzero(row)] for row in X]
        order = [rng.permutation(len(y)).tolist() for _ in range(self.epochs)]
        ys = y.tolist()
        v = [0.0] * X.shape[1]
        scale = 1.0
        b = 0.0
        t = 0
        eta0, reg = self.eta0, self.reg
        for perm in order:
            for i in perm:
                eta = eta0 / (1.0 + eta0 * reg * t)
                t += 1
                row = sparse[i]
                yi = ys[i]
                scale *= 1.0 - eta * reg
                dot = 0.0
                for k, x in row:
                    dot += v[k] * x
                if yi * (scale * dot + b) < 1.0:
                    step = eta * yi / scale
                    for k, x in row:
                        v[k] += step * x
                    b += eta * yi
                if scale < 1e-6:
                    v = [vk * scale for vk in v]
                    scale = 1.0
        self.w = np.array(v) * scale
        self.b = float(b)
        return self

    def margin(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return X @ self.w + self.b

    def confidence(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.constant is not None:
            return np.full(X.shape[0], self.constant)
        # clipping keeps confidences strictly inside (0, 1) in float64
        return 1.0 / (1.0 + np.exp(-np.clip(self.margin(X), -MARGIN_CLIP, MARGIN_CLIP)))

    def to_dict(self) -> dict:
        return {
            "reg": self.reg, "epochs": self.epochs, "eta0": self.eta0, "seed": self.seed,
            "w": [float(v) for v in self.w] if self.w is not None else None,
            "b": self.b, "constant": self.constant,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LinearMarginModel":
        m = cls(d["reg"], d["epochs"], d["eta0"], d["seed"])
        m.w = None if d["w"] is None else np.array(d["w"], dtype=float)
        m.b = d["b"]
        m.constant = d["constant"]
        return m
