"""Core domain types: client gradients, honest statistics, and the global model."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def _as_finite_array(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError(f"{name} must be a non-empty 1-D vector")
    if not np.isfinite(arr).all():
        raise ValueError(f"{name} contains non-finite entries")
    return arr


@dataclass(frozen=True)
class GradientVector:
    """A flattened model update from one client.

    All entries must be finite; dimension must match the other clients
    in the same round.
    """

    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _as_finite_array(self.values, "gradient"))

    @property
    def dim(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class ClientUpdate:
    """A client's round submission plus its ground-truth honesty label.

    `is_byzantine` is evaluation metadata only: selection algorithms never
    read it, the metrics module does.
    """

    client_id: int
    gradient: GradientVector
    is_byzantine: bool = False


@dataclass(frozen=True)
class HonestStats:
    """Coordinate-wise mean and population standard deviation of the honest clients."""

    mu: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mu", _as_finite_array(self.mu, "mu"))
        sigma = _as_finite_array(self.sigma, "sigma")
        if (sigma < 0).any():
            raise ValueError("sigma must be non-negative")
        if sigma.shape != self.mu.shape:
            raise ValueError("mu and sigma must have equal length")
        object.__setattr__(self, "sigma", sigma)

    @property
    def dim(self) -> int:
        return self.mu.shape[0]


@dataclass(frozen=True)
class GlobalModel:
    """Flat global parameter vector and the server learning rate."""

    weights: np.ndarray
    eta: float = 0.01

    def __post_init__(self):
        object.__setattr__(self, "weights", _as_finite_array(self.weights, "weights"))
        if not (self.eta > 0):
            raise ValueError("eta must be positive")


def compute_honest_stats(updates: list[ClientUpdate]) -> HonestStats:
    """Coordinate-wise mean and population std over the honest updates.

    Byzantine entries in `updates` are ignored; at least two honest
    updates are required for the std to be meaningful.
    """
    honest = [u for u in updates if not u.is_byzantine]
    if len(honest) < 2:
        raise ValueError("insufficient honest population")
    mat = np.stack([u.gradient.values for u in honest])
    if not (mat.shape[1:] == honest[0].gradient.values.shape):
        raise ValueError("honest gradients must share one dimension")
    mu = mat.mean(axis=0)
    sigma = mat.std(axis=0)  # population (divide by n) convention
    return HonestStats(mu=mu, sigma=sigma)


def apply_update(model: GlobalModel, selected: list[GradientVector]) -> GlobalModel:
    """One aggregation step: W' = W + eta * mean(selected gradients)."""
    if not selected:
        raise ValueError("empty aggregate")
    d = model.weights.shape[0]
    for g in selected:
        if g.dim != d:
            raise ValueError(f"gradient dimension {g.dim} != model dimension {d}")
    mean = np.mean([g.values for g in selected], axis=0)
    return GlobalModel(weights=model.weights + model.eta * mean, eta=model.eta)
