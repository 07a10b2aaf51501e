"""Concatenation vectorizer with token + positional embeddings."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Collection

import numpy as np
from scipy.spatial.distance import pdist

from .errors import ValidationError
from .text import Document


@dataclass(frozen=True)
class TokenEmbeddingTable:
    """Row ``j`` of ``vectors`` is the embedding of token ``j``."""

    vectors: np.ndarray
    kind: str = "random-dense"

    def __post_init__(self):
        vec = np.array(self.vectors, dtype=float)
        if vec.ndim != 2 or not np.all(np.isfinite(vec)):
            raise ValidationError("embedding table must be a finite 2-D array")
        vec.setflags(write=False)
        object.__setattr__(self, "vectors", vec)

    @classmethod
    def one_hot(cls, D: int) -> "TokenEmbeddingTable":
        return cls(np.eye(D), kind="one-hot")

    @classmethod
    def random_dense(cls, D: int, d_e: int, seed) -> "TokenEmbeddingTable":
        rng = np.random.default_rng(seed)
        return cls(rng.standard_normal((D, d_e)), kind="random-dense")

    @property
    def D(self) -> int:
        return self.vectors.shape[0]

    @property
    def d_e(self) -> int:
        return self.vectors.shape[1]

    def __call__(self, j: int) -> np.ndarray:
        return self.vectors[j]

    def max_pairwise_distance(self) -> float:
        if self.D < 2:
            raise ValidationError("max over token pairs needs D >= 2")
        return float(pdist(self.vectors).max())


@dataclass(frozen=True)
class PositionalEmbedding:
    """Deterministic position code; positions are 0-based."""

    kind: str
    d_p: int
    T_max: int

    def __post_init__(self):
        if self.kind not in ("one-hot", "sinusoidal", "none"):
            raise ValidationError(f"unknown positional embedding {self.kind!r}")
        if self.kind == "one-hot" and self.d_p != self.T_max:
            raise ValidationError("one-hot positional embedding needs d_p == T_max")
        if self.kind == "none" and self.d_p != 0:
            raise ValidationError("positional kind 'none' has d_p == 0")

    @classmethod
    def one_hot(cls, T_max: int) -> "PositionalEmbedding":
        return cls("one-hot", T_max, T_max)

    @classmethod
    def sinusoidal(cls, d_p: int, T_max: int) -> "PositionalEmbedding":
        return cls("sinusoidal", d_p, T_max)

    @classmethod
    def none(cls, T_max: int) -> "PositionalEmbedding":
        return cls("none", 0, T_max)

    def __call__(self, t: int) -> np.ndarray:
        if not 0 <= t < self.T_max:
            raise ValidationError(f"position {t} outside [0, {self.T_max})")
        if self.kind == "one-hot":
            out = np.zeros(self.d_p)
            out[t] = 1.0
            return out
        if self.kind == "none":
            return np.zeros(0)
        # interleaved sin/cos, base 10000
        i = np.arange(self.d_p)
        angle = t / 10000.0 ** (2 * (i // 2) / self.d_p)
        return np.where(i % 2 == 0, np.sin(angle), np.cos(angle))


@dataclass(frozen=True)
class ConcatConfig:
    table: TokenEmbeddingTable
    positional: PositionalEmbedding
    combine: str = "concatenate"

    def __post_init__(self):
        if self.combine not in ("concatenate", "add"):
            raise ValidationError(f"unknown combine mode {self.combine!r}")
        if self.combine == "add" and self.table.d_e != self.positional.d_p:
            raise ValidationError("combine='add' needs d_e == d_p")

    @property
    def T_max(self) -> int:
        return self.positional.T_max

    @property
    def d(self) -> int:
        if self.combine == "add":
            return self.table.d_e
        return self.table.d_e + self.positional.d_p


def embed_token(cfg: ConcatConfig, j: int, t: int) -> np.ndarray:
    u_e = cfg.table(j)
    u_p = cfg.positional(t)
    if cfg.combine == "add":
        return u_e + u_p
    return np.concatenate([u_e, u_p])


def vectorize(cfg: ConcatConfig, x: Document) -> np.ndarray:
    """Blocks of ``embed_token``; zero-padded below ``T_max``, truncated above."""
    out = np.zeros(cfg.d * cfg.T_max)
    for t in range(min(x.T, cfg.T_max)):
        out[t * cfg.d:(t + 1) * cfg.d] = embed_token(cfg, int(x[t]), t)
    return out


def concat_bound(cfg: ConcatConfig, S: int | Collection[int]) -> float:
    """max_{j != k} ||u_e(j) - u_e(k)|| * sqrt(min(|S|, T_max))."""
    s = S if isinstance(S, (int, np.integer)) else len(S)
    return cfg.table.max_pairwise_distance() * math.sqrt(min(int(s), cfg.T_max))
