"""Pairwise distance matrices: cosine, Euclidean, normalized Euclidean, dual blend."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

COSINE = "cosine"
EUCLIDEAN = "euclidean"
EUCLIDEAN_NORM = "euclidean_norm"
DUAL = "dual"

_METRICS = (COSINE, EUCLIDEAN, EUCLIDEAN_NORM, DUAL)
DEFAULT_EPSILON = 1e-8


@dataclass(frozen=True)
class BlendConfig:
    """Mixing weight for the dual distance and the cosine zero-norm guard."""

    alpha: float = 0.5
    epsilon: float = DEFAULT_EPSILON

    def __post_init__(self):
        if not (0.0 <= self.alpha <= 1.0):
            raise ValueError("alpha must lie in [0, 1]")
        if not (self.epsilon > 0):
            raise ValueError("epsilon must be positive")


@dataclass(frozen=True)
class DistanceMatrix:
    """Symmetric non-negative n x n matrix with zero diagonal, tagged by metric.

    Cosine entries lie in [0, 2]; normalized Euclidean in [0, 1]. The dual
    blend mixes the two, so its entries lie in [0, 2 - alpha]: the cosine
    component is kept unnormalized on purpose.
    """

    entries: np.ndarray
    metric: str

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=np.float64)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise ValueError("distance matrix must be square")
        if self.metric not in _METRICS:
            raise ValueError(f"unknown metric {self.metric!r}")
        if not np.isfinite(entries).all():
            raise ValueError("distance matrix has non-finite entries")
        if (entries < 0).any():
            raise ValueError("distance matrix has negative entries")
        if not np.array_equal(entries, entries.T):
            raise ValueError("distance matrix must be symmetric")
        if np.diag(entries).any():
            raise ValueError("distance matrix diagonal must be zero")
        object.__setattr__(self, "entries", entries)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def max_off_diagonal(self) -> float:
        return float(self.entries.max(initial=0.0))

    def upper_triangular_values(self) -> np.ndarray:
        iu = np.triu_indices(self.n, k=1)
        return self.entries[iu]


def _stack(vectors) -> np.ndarray:
    mat = np.stack([np.asarray(getattr(v, "values", v), dtype=np.float64) for v in vectors])
    if mat.shape[0] < 2:
        raise ValueError("need at least 2 vectors")
    return mat


def cosine_matrix(vectors, epsilon: float = DEFAULT_EPSILON) -> DistanceMatrix:
    """Directional dissimilarity: 1 - <p_i, p_j> / (|p_i||p_j| + eps).

    The epsilon guard makes zero vectors well-defined (two zero vectors
    are at distance 1). Entries are clamped to [0, 2] to kill floating
    point drift and the diagonal is forced to exactly zero.
    """
    mat = _stack(vectors)
    norms = np.linalg.norm(mat, axis=1)
    gram = mat @ mat.T
    denom = np.outer(norms, norms) + epsilon
    d = 1.0 - gram / denom
    d = (d + d.T) / 2.0
    np.clip(d, 0.0, 2.0, out=d)
    np.fill_diagonal(d, 0.0)
    return DistanceMatrix(entries=d, metric=COSINE)


def euclidean_matrix(vectors) -> DistanceMatrix:
    """Plain pairwise L2 distances, computed from explicit differences."""
    mat = _stack(vectors)
    n = mat.shape[0]
    d = np.zeros((n, n))
    for i in range(n):
        diffs = mat[i + 1 :] - mat[i]
        if diffs.size:
            row = np.linalg.norm(diffs, axis=1)
            d[i, i + 1 :] = row
            d[i + 1 :, i] = row
    return DistanceMatrix(entries=d, metric=EUCLIDEAN)


def normalize_euclidean(dist: DistanceMatrix) -> DistanceMatrix:
    """Scale a Euclidean matrix into [0, 1] by its largest entry.

    An all-identical round (max distance 0) maps to the zero matrix
    rather than raising, so unanimous rounds flow through the pipeline.
    """
    if dist.metric != EUCLIDEAN:
        raise ValueError("normalize_euclidean expects a euclidean matrix")
    peak = dist.max_off_diagonal()
    if peak == 0.0:
        entries = np.zeros_like(dist.entries)
    else:
        entries = dist.entries / peak
        np.fill_diagonal(entries, 0.0)
    return DistanceMatrix(entries=entries, metric=EUCLIDEAN_NORM)


def dual_blend(
    euclid_norm: DistanceMatrix, cosine: DistanceMatrix, alpha: float = 0.5
) -> DistanceMatrix:
    """Convex blend alpha * normalized-Euclidean + (1 - alpha) * cosine."""
    if euclid_norm.metric != EUCLIDEAN_NORM or cosine.metric != COSINE:
        raise ValueError("dual_blend expects (euclidean_norm, cosine) inputs")
    if euclid_norm.n != cosine.n:
        raise ValueError("distance matrices disagree on client count")
    if not (0.0 <= alpha <= 1.0):
        raise ValueError("alpha must lie in [0, 1]")
    entries = alpha * euclid_norm.entries + (1.0 - alpha) * cosine.entries
    np.fill_diagonal(entries, 0.0)
    return DistanceMatrix(entries=entries, metric=DUAL)
