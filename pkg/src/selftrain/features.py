"""Tokenization and hashed n-gram features for the built-in linear model.

The hashing trick keeps the feature space fixed while the weakly-labelled
corpus grows across self-training generations, so no re-indexing is ever
needed. Vectors are L2-normalized, which stabilizes SGD under a constant
learning rate.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .hashing import keyed_hash64
from .corpus import Document

_TOKEN_SPLIT_RE = re.compile(r"[^0-9a-z]+")

TokenSequence = list[str]


def tokenize(text: str) -> TokenSequence:
    """Lowercase tokens split on any non-alphanumeric character."""
    return [t for t in _TOKEN_SPLIT_RE.split(text.lower()) if t]


@dataclass(frozen=True)
class FeatureSpace:
    """Hashed n-gram space; immutable for the lifetime of a model."""

    dimension: int = 1 << 18
    ngram_orders: tuple[int, ...] = (1, 2)
    hash_seed: int = 0

    def __post_init__(self) -> None:
        if self.dimension < (1 << 10) or self.dimension & (self.dimension - 1):
            raise ValueError("dimension must be a power of two >= 2**10")
        if not self.ngram_orders or any(n < 1 for n in self.ngram_orders):
            raise ValueError("ngram orders must be positive")

    def index_of(self, ngram: str) -> int:
        return keyed_hash64(self.hash_seed, ngram) % self.dimension

    def to_dict(self) -> dict:
        return {"dimension": self.dimension, "ngram_orders": list(self.ngram_orders),
                "hash_seed": self.hash_seed}

    @classmethod
    def from_dict(cls, obj: dict) -> "FeatureSpace":
        return cls(dimension=int(obj["dimension"]),
                   ngram_orders=tuple(int(n) for n in obj["ngram_orders"]),
                   hash_seed=int(obj["hash_seed"]))


@dataclass(frozen=True)
class FeatureVector:
    """Sparse unit vector; ``norm`` records the pre-normalization L2 norm."""

    indices: np.ndarray
    values: np.ndarray
    norm: float

    @classmethod
    def from_weights(cls, weights: dict[int, float]) -> "FeatureVector":
        if not weights:
            return cls(np.empty(0, dtype=np.int64), np.empty(0, dtype=np.float64), 0.0)
        idx = np.array(sorted(weights), dtype=np.int64)
        val = np.array([weights[i] for i in idx], dtype=np.float64)
        norm = float(np.sqrt(np.sum(val * val)))
        return cls(idx, val / norm, norm)

    def as_dict(self) -> dict[int, float]:
        return {int(i): float(v) for i, v in zip(self.indices, self.values)}


def iter_ngrams(tokens: Sequence[str], orders: Iterable[int]) -> Iterable[str]:
    for n in orders:
        for i in range(len(tokens) - n + 1):
            yield " ".join(tokens[i : i + n])


def featurize(tokens: Sequence[str], space: FeatureSpace) -> FeatureVector:
    """Hash each n-gram into the space with accumulation, then L2-normalize.

    Deterministic for a fixed hash seed, identical across processes. The
    empty sequence maps to the zero vector (norm 0).
    """
    accum: dict[int, float] = {}
    for ngram in iter_ngrams(tokens, space.ngram_orders):
        idx = space.index_of(ngram)
        accum[idx] = accum.get(idx, 0.0) + 1.0
    return FeatureVector.from_weights(accum)


def featurize_text(text: str, space: FeatureSpace) -> FeatureVector:
    return featurize(tokenize(text), space)


def stack_features(vectors: Sequence[FeatureVector], dimension: int):
    """Stack sparse vectors into a scipy CSR matrix of shape (n, dimension)."""
    from scipy.sparse import csr_matrix

    indptr = np.zeros(len(vectors) + 1, dtype=np.int64)
    for i, v in enumerate(vectors):
        indptr[i + 1] = indptr[i] + len(v.indices)
    if indptr[-1] == 0:
        return csr_matrix((len(vectors), dimension), dtype=np.float64)
    indices = np.concatenate([v.indices for v in vectors if len(v.indices)])
    data = np.concatenate([v.values for v in vectors if len(v.values)])
    return csr_matrix((data, indices, indptr), shape=(len(vectors), dimension))


@dataclass(frozen=True)
class Vocabulary:
    tokens: frozenset[str]

    @property
    def size(self) -> int:
        return len(self.tokens)

    def union(self, other: "Vocabulary") -> "Vocabulary":
        return Vocabulary(self.tokens | other.tokens)


def build_vocabulary(docs: Sequence[Document | str]) -> Vocabulary:
    """Union of tokens over all documents."""
    tokens: set[str] = set()
    for doc in docs:
        text = doc.text if isinstance(doc, Document) else doc
        tokens.update(tokenize(text))
    return Vocabulary(frozenset(tokens))
