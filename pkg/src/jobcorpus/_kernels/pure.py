"""Numpy reference implementation of the similarity kernels.

Semantics match the compiled backend: only entries strictly above the
threshold contribute, weighted by both documents' token weights.
"""

from __future__ import annotations

import numpy as np


def pair_sum(H: np.ndarray, wa: np.ndarray, wb: np.ndarray, p: float) -> float:
    """Sum of H[i,j] * wa[i] * wb[j] over entries with H[i,j] > p."""
    if H.size == 0:
        return 0.0
    masked = np.where(H > p, H, 0.0)
    return float(wa @ masked @ wb)


def segment_scores(
    H: np.ndarray,
    wa: np.ndarray,
    wcat: np.ndarray,
    offsets: np.ndarray,
    p: float,
) -> np.ndarray:
    """Per-segment pair sums: segment c covers columns offsets[c]:offsets[c+1]."""
    ncat = len(offsets) - 1
    if H.size == 0 or ncat == 0:
        return np.zeros(max(ncat, 0), dtype=np.float64)
    masked = np.where(H > p, H, 0.0)
    col = (wa @ masked) * wcat
    csum = np.concatenate(([0.0], np.cumsum(col)))
    return csum[offsets[1:]] - csum[offsets[:-1]]


def pair_count(H: np.ndarray, p: float) -> int:
    """Number of entries strictly above the threshold."""
    if H.size == 0:
        return 0
    return int(np.count_nonzero(H > p))
