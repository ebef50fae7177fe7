"""Raw-count TF-IDF weighting shared by the similarity and classifier paths.

idf(w) = ln((1 + n_docs) / (1 + df(w))) + 1, so unseen tokens still get a
finite positive weight and every stored weight is strictly positive.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .errors import DomainError


@dataclass(frozen=True)
class TfidfModel:
    n_docs: int
    df: Mapping[str, int]

    def idf(self, token: str) -> float:
        return math.log((1 + self.n_docs) / (1 + self.df.get(token, 0))) + 1.0


@dataclass(frozen=True)
class WeightedDoc:
    """Sparse token -> weight map; weights are finite and strictly positive."""

    doc_id: str
    weights: Mapping[str, float]

    def __post_init__(self):
        for token, value in self.weights.items():
            if not (math.isfinite(value) and value > 0.0):
                raise DomainError(f"weight for {token!r} must be finite and > 0, got {value}")


def _tokens_of(item) -> Sequence[str]:
    tokens = getattr(item, "tokens", item)
    return tokens


def fit_tfidf(docs: Iterable) -> TfidfModel:
    """Document frequencies over a collection of Documents or token sequences."""
    df: Counter[str] = Counter()
    n_docs = 0
    for item in docs:
        n_docs += 1
        df.update(set(_tokens_of(item)))
    if n_docs == 0:
        raise DomainError("cannot fit tf-idf on an empty collection")
    return TfidfModel(n_docs=n_docs, df=dict(df))


def weigh_tokens(doc_id: str, tokens: Sequence[str], model: TfidfModel) -> WeightedDoc:
    if not tokens:
        raise DomainError(f"document {doc_id!r} has no tokens to weigh")
    counts = Counter(tokens)
    weights = {token: count * model.idf(token) for token, count in counts.items()}
    return WeightedDoc(doc_id=doc_id, weights=weights)


def weigh(doc, model: TfidfModel) -> WeightedDoc:
    return weigh_tokens(doc.id, list(doc.tokens), model)
