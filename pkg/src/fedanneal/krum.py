"""Krum scoring, multi-client selection, and normalized score gaps.

A client's score is the sum of distances to its n - f - 2 nearest
neighbors; the m lowest-scoring clients are selected and averaged.
The normalized gap between the best rejected and worst selected score
is the routing signal used by the ensemble aggregators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class KrumScores:
    scores: np.ndarray
    neighbor_count: int

    def __post_init__(self):
        scores = np.asarray(self.scores, dtype=np.float64)
        if scores.ndim != 1 or scores.size == 0:
            raise ValueError("scores must be a non-empty vector")
        if (scores < 0).any() or not np.isfinite(scores).all():
            raise ValueError("scores must be finite and non-negative")
        if self.neighbor_count < 1:
            raise ValueError("neighbor_count must be >= 1")
        object.__setattr__(self, "scores", scores)

    @property
    def n(self) -> int:
        return self.scores.shape[0]


@dataclass(frozen=True)
class GapResult:
    """Normalized separation between rejected and selected scores.

    A zero-variance score vector has no usable gap; it is flagged
    degenerate and reported as +inf so threshold comparisons treat it
    as a maximal (non-evasive) separation.
    """

    delta: float
    degenerate: bool = False


def _neighbor_sum(dist: np.ndarray, f: int) -> KrumScores:
    n = dist.shape[0]
    if n < f + 3:
        raise ValueError("insufficient clients for Krum")
    k = n - f - 2
    scores = np.empty(n)
    for i in range(n):
        row = np.delete(dist[i], i)
        row.sort()
        scores[i] = row[:k].sum()
    return KrumScores(scores=scores, neighbor_count=k)


def krum_scores(vectors, f: int) -> KrumScores:
    """Squared-Euclidean Krum scores over raw (or projected) gradient vectors."""
    mat = np.stack([np.asarray(getattr(v, "values", v), dtype=np.float64) for v in vectors])
    n = mat.shape[0]
    sq = np.zeros((n, n))
    for i in range(n):
        diffs = mat[i + 1 :] - mat[i]
        if diffs.size:
            row = np.einsum("ij,ij->i", diffs, diffs)
            sq[i, i + 1 :] = row
            sq[i + 1 :, i] = row
    return _neighbor_sum(sq, f)


def krum_scores_from_matrix(entries: np.ndarray, f: int) -> KrumScores:
    """Krum scoring over a precomputed distance matrix, entries used as-is.

    Used for cosine-distance scoring, where the entries are not squared.
    """
    entries = np.asarray(entries, dtype=np.float64)
    return _neighbor_sum(entries, f)


def multikrum_select(scores: KrumScores, m: int) -> list[int]:
    """Indices of the m lowest scores; ties broken toward the lower index."""
    if not (1 <= m <= scores.n):
        raise ValueError("m must satisfy 1 <= m <= n")
    order = np.argsort(scores.scores, kind="stable")
    return sorted(int(i) for i in order[:m])


def krum_gap(scores: KrumScores, m: int) -> GapResult:
    """Gap = (min rejected - max selected) / population std of all scores."""
    if not (1 <= m < scores.n):
        raise ValueError("m must satisfy 1 <= m < n")
    selected = multikrum_select(scores, m)
    rejected = sorted(set(range(scores.n)) - set(selected))
    std = float(np.std(scores.scores))
    if std == 0.0:
        return GapResult(delta=math.inf, degenerate=True)
    numer = float(scores.scores[rejected].min() - scores.scores[selected].max())
    return GapResult(delta=numer / std, degenerate=False)
