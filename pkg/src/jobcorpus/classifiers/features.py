"""Feature dictionary and sparse TF-IDF vectors for the classifiers.

The dictionary keeps tokens whose total corpus occurrence count reaches the
cutoff, ordered by descending count then lexicographically, so a given
corpus and cutoff always produce the same column layout.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from ..errors import ConfigError
from ..tfidf import TfidfModel


@dataclass(frozen=True)
class Dictionary:
    tokens: tuple[str, ...]
    min_count: int

    def __post_init__(self):
        object.__setattr__(self, "index", {t: i for i, t in enumerate(self.tokens)})

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self.index


def build_dictionary(docs: Iterable, min_count: int = 1) -> Dictionary:
    """Tokens occurring at least min_count times across the collection."""
    if min_count < 1:
        raise ConfigError(f"min_count must be >= 1, got {min_count}")
    counts: Counter[str] = Counter()
    for doc in docs:
        counts.update(getattr(doc, "tokens", doc))
    ordered = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    tokens = tuple(t for t, c in ordered if c >= min_count)
    return Dictionary(tokens=tokens, min_count=min_count)


class FeatureVector:
    """Sparse column -> value map with sorted int64 columns."""

    __slots__ = ("cols", "vals")

    def __init__(self, cols, vals):
        self.cols = np.asarray(cols, dtype=np.int64)
        self.vals = np.asarray(vals, dtype=np.float64)
        if self.cols.ndim != 1 or self.cols.shape != self.vals.shape:
            raise ValueError("cols and vals must be matching 1-d arrays")
        if len(self.cols) > 1 and not np.all(np.diff(self.cols) > 0):
            order = np.argsort(self.cols)
            self.cols = self.cols[order]
            self.vals = self.vals[order]
            if not np.all(np.diff(self.cols) > 0):
                raise ValueError("columns must be unique")

    @staticmethod
    def from_dict(mapping: Mapping[int, float]) -> "FeatureVector":
        cols = sorted(mapping)
        return FeatureVector(cols, [mapping[c] for c in cols])

    def to_dict(self) -> dict[int, float]:
        return {int(c): float(v) for c, v in zip(self.cols, self.vals)}

    @property
    def nnz(self) -> int:
        return len(self.cols)

    def get(self, col: int) -> float:
        idx = np.searchsorted(self.cols, col)
        if idx < len(self.cols) and self.cols[idx] == col:
            return float(self.vals[idx])
        return 0.0

    def dense(self, dim: int) -> np.ndarray:
        out = np.zeros(dim, dtype=np.float64)
        out[self.cols] = self.vals
        return out

    def sq_norm(self) -> float:
        return float(self.vals @ self.vals)

    def dot(self, other: "FeatureVector") -> float:
        if not len(self.cols) or not len(other.cols):
            return 0.0
        common, ia, ib = np.intersect1d(
            self.cols, other.cols, assume_unique=True, return_indices=True
        )
        if not len(common):
            return 0.0
        return float(self.vals[ia] @ other.vals[ib])

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, FeatureVector)
            and np.array_equal(self.cols, other.cols)
            and np.array_equal(self.vals, other.vals)
        )

    def __repr__(self) -> str:
        return f"FeatureVector({self.to_dict()!r})"


def vectorize(doc, dictionary: Dictionary, model: TfidfModel) -> FeatureVector:
    """TF-IDF vector restricted to dictionary columns; may be empty."""
    counts = Counter(getattr(doc, "tokens", doc))
    pairs = [
        (dictionary.index[t], c * model.idf(t)) for t, c in counts.items() if t in dictionary
    ]
    pairs.sort()
    return FeatureVector([c for c, _ in pairs], [v for _, v in pairs])


def design_matrix(vectors: Sequence[FeatureVector], dim: int) -> np.ndarray:
    """Dense (n, dim) matrix from sparse rows."""
    X = np.zeros((len(vectors), dim), dtype=np.float64)
    for i, fv in enumerate(vectors):
        if fv.nnz:
            X[i, fv.cols] = fv.vals
    return X
