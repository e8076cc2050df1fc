"""Importance-weighted dimensionality reduction.

Keeps the coordinates where clients disagree most: per-coordinate variance
is computed across clients and the top-k coordinates are retained. All
clients in a round share the same selected coordinate set.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import GradientVector


@dataclass(frozen=True)
class ProjectionConfig:
    """Target dimension k; clamped to the gradient dimension when k >= d."""

    k: int

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be positive")


@dataclass(frozen=True)
class ProjectedGradient:
    values: np.ndarray
    coordinate_indices: np.ndarray  # strictly increasing, shared per round


def importance_project(
    gradients: list[GradientVector], config: ProjectionConfig
) -> list[ProjectedGradient]:
    """Restrict every gradient to the k highest-variance coordinates.

    Variance is the population variance across clients; ties are broken
    toward the lower coordinate index so the selection is deterministic.
    """
    if len(gradients) < 2:
        raise ValueError("need at least 2 gradients to compute variance")
    mat = np.stack([g.values for g in gradients])
    d = mat.shape[1]
    k = min(config.k, d)
    variances = mat.var(axis=0)
    # stable sort on -variance keeps lower indices first among ties
    order = np.argsort(-variances, kind="stable")[:k]
    indices = np.sort(order)
    return [
        ProjectedGradient(values=mat[i, indices], coordinate_indices=indices)
        for i in range(mat.shape[0])
    ]


def projected_matrix(projected: list[ProjectedGradient]) -> np.ndarray:
    """Stack projected gradients into an (n, k) matrix."""
    return np.stack([p.values for p in projected])
