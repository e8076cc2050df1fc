"""Synthetic honest-gradient source.

Desk-scale stand-in for local training: honest client i draws

    G_i = g*(round) + offset(group(i)) + mult_i * N(0, noise_std^2 I)

where g* follows a seeded random-walk drift. Group offsets (antipodal
pairs, so they roughly cancel in the mean) model label-skew style
non-IID structure; straggler multipliers model clients whose updates are
persistently larger than their peers. With both knobs at their defaults
the source reduces to an isotropic cluster around g*.

All draws are keyed by (seed, purpose tag, round, client), so any
gradient can be regenerated independently of call order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import GradientVector

_TAG_CENTER = 101
_TAG_DRIFT = 102
_TAG_NOISE = 103
_TAG_OFFSET = 104

_MASK = (1 << 63) - 1


@dataclass(frozen=True)
class SyntheticSourceConfig:
    d: int = 2000
    honest_center_drift: float = 0.02
    honest_noise_std: float = 0.1
    center_std: float = 0.05
    group_count: int = 0
    group_offset_std: float = 0.0
    # noise multipliers for the first len(straggler_scales) honest clients;
    # models clients whose updates run persistently larger than their peers
    straggler_scales: tuple[float, ...] = ()

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("d must be positive")
        if not (self.honest_noise_std > 0):
            raise ValueError("honest_noise_std must be positive")
        if self.honest_center_drift < 0 or self.group_offset_std < 0:
            raise ValueError("drift and offset scales must be non-negative")
        scales = tuple(float(s) for s in self.straggler_scales)
        if any(s < 1.0 for s in scales):
            raise ValueError("straggler multipliers must be >= 1")
        object.__setattr__(self, "straggler_scales", scales)


def _rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed & _MASK, *key]))


def center_path(cfg: SyntheticSourceConfig, seed: int, round_index: int) -> np.ndarray:
    """g*(t): seeded base direction plus a cumulative per-round drift."""
    g = _rng(seed, _TAG_CENTER).normal(0.0, cfg.center_std, cfg.d)
    if cfg.honest_center_drift > 0:
        for t in range(1, round_index + 1):
            g = g + cfg.honest_center_drift * _rng(seed, _TAG_DRIFT, t).normal(0.0, 1.0, cfg.d)
    return g


def client_offsets(cfg: SyntheticSourceConfig, seed: int, n_honest: int) -> np.ndarray:
    """Persistent per-client mean offsets, assigned by group in antipodal pairs."""
    offsets = np.zeros((n_honest, cfg.d))
    if cfg.group_count <= 1 or cfg.group_offset_std <= 0:
        return offsets
    pairs = math.ceil(cfg.group_count / 2)
    directions = np.stack(
        [_rng(seed, _TAG_OFFSET, p).normal(0.0, cfg.group_offset_std, cfg.d) for p in range(pairs)]
    )
    for i in range(n_honest):
        g = i % cfg.group_count
        offsets[i] = directions[g // 2] * (1.0 if g % 2 == 0 else -1.0)
    return offsets


def noise_multipliers(cfg: SyntheticSourceConfig, n_honest: int) -> np.ndarray:
    mults = np.ones(n_honest)
    scales = cfg.straggler_scales[:n_honest]
    mults[: len(scales)] = scales
    return mults


def synthetic_honest_gradients(
    cfg: SyntheticSourceConfig, n_honest: int, round_index: int, seed: int
) -> list[GradientVector]:
    """The round's honest gradients; deterministic in (cfg, n_honest, round, seed)."""
    if n_honest < 1:
        raise ValueError("need at least one honest client")
    g_star = center_path(cfg, seed, round_index)
    offsets = client_offsets(cfg, seed, n_honest)
    mults = noise_multipliers(cfg, n_honest)
    out = []
    for i in range(n_honest):
        noise = _rng(seed, _TAG_NOISE, round_index, i).normal(0.0, cfg.honest_noise_std, cfg.d)
        out.append(GradientVector(g_star + offsets[i] + mults[i] * noise))
    return out
