"""Word-embedding table in the word2vec text format.

The first line is "<count> <dim>"; every following line is a token and dim
whitespace-separated floats.  Zero vectors and repeated tokens are skipped at
load (first occurrence wins) and counted in the load stats rather than
failing the whole file.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, LoadError


@dataclass(frozen=True)
class LoadStats:
    zero_vectors: int = 0
    duplicates: int = 0


class EmbeddingTable:
    """token -> dense float64 vector, with precomputed unit vectors."""

    def __init__(self, dim: int, vectors: dict[str, np.ndarray], stats: LoadStats = LoadStats()):
        if dim < 1:
            raise DomainError(f"embedding dimension must be >= 1, got {dim}")
        self.dim = dim
        self._vectors: dict[str, np.ndarray] = {}
        self._units: dict[str, np.ndarray] = {}
        self.stats = stats
        for token, vec in vectors.items():
            arr = np.asarray(vec, dtype=np.float64)
            if arr.shape != (dim,):
                raise DomainError(f"vector for {token!r} has shape {arr.shape}, want ({dim},)")
            norm = float(np.linalg.norm(arr))
            if norm == 0.0:
                raise DomainError(f"zero vector for token {token!r}")
            self._vectors[token] = arr
            self._units[token] = arr / norm

    def __contains__(self, token: str) -> bool:
        return token in self._vectors

    def __len__(self) -> int:
        return len(self._vectors)

    def vector(self, token: str) -> np.ndarray:
        return self._vectors[token]

    def unit(self, token: str) -> np.ndarray:
        return self._units[token]

    def tokens(self):
        return self._vectors.keys()


def load_embeddings(path) -> EmbeddingTable:
    vectors: dict[str, np.ndarray] = {}
    zero_count = 0
    dup_count = 0
    with open(path, encoding="utf-8") as fh:
        header = fh.readline()
        parts = header.split()
        if len(parts) != 2:
            raise LoadError("header must be '<count> <dim>'", path=path, line=1)
        try:
            _count, dim = int(parts[0]), int(parts[1])
        except ValueError:
            raise LoadError("header must be two integers", path=path, line=1)
        if dim < 1:
            raise LoadError(f"dimension must be >= 1, got {dim}", path=path, line=1)
        for lineno, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            fields = line.rstrip("\n").split()
            if len(fields) != dim + 1:
                raise LoadError(
                    f"expected token + {dim} values, got {len(fields)} fields",
                    path=path,
                    line=lineno,
                )
            token = fields[0]
            try:
                vec = np.array([float(x) for x in fields[1:]], dtype=np.float64)
            except ValueError:
                raise LoadError("unparsable vector component", path=path, line=lineno)
            if not np.all(np.isfinite(vec)):
                raise LoadError("non-finite vector component", path=path, line=lineno)
            if token in vectors:
                dup_count += 1
                continue
            if not np.any(vec):
                zero_count += 1
                continue
            vectors[token] = vec
    return EmbeddingTable(
        dim, vectors, stats=LoadStats(zero_vectors=zero_count, duplicates=dup_count)
    )


def cosine(a, b) -> float:
    """Cosine of two dense vectors, clamped into [-1, 1]."""
    va = np.asarray(a, dtype=np.float64)
    vb = np.asarray(b, dtype=np.float64)
    if va.shape != vb.shape:
        raise DomainError(f"length mismatch: {va.shape} vs {vb.shape}")
    na = float(np.linalg.norm(va))
    nb = float(np.linalg.norm(vb))
    if na == 0.0 or nb == 0.0:
        raise DomainError("cosine of a zero vector is undefined")
    value = float(va @ vb) / (na * nb)
    return max(-1.0, min(1.0, value))


def pair_similarity(wa: str, wb: str, table: EmbeddingTable) -> float:
    """Token-level similarity used by the weighted document comparison.

    Identical tokens always score 1, in or out of vocabulary.  Distinct
    tokens score their vector cosine when both are known and 0 otherwise.
    """
    if wa == wb:
        return 1.0
    if wa in table and wb in table:
        value = float(table.unit(wa) @ table.unit(wb))
        if not math.isfinite(value):
            raise DomainError(f"non-finite similarity for {wa!r}, {wb!r}")
        return max(-1.0, min(1.0, value))
    return 0.0
