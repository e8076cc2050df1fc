"""Byzantine update generators.

Every attack crafts its updates from the coordinate-wise mean and
standard deviation of the honest clients of the current round (the
attacker is assumed omniscient). Stochastic attacks draw independent
randomness per Byzantine client from substreams of the spec seed, so a
fixed (spec, stats, seed) triple always produces identical output and
clients could be generated in parallel without changing results.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np

from .core import GradientVector, HonestStats


class AttackKind(str, enum.Enum):
    GAUSSIAN_NOISE = "gaussian_noise"
    SIGN_FLIP = "sign_flip"
    SCALE = "scale"
    TARGETED = "targeted"
    CLUSTERED = "clustered"
    SAME_VALUE = "same_value"
    LIE = "lie"
    BLATANT_LIE = "blatant_lie"
    ALIE = "alie"
    SPARSE_LIE = "sparse_lie"
    LABEL_FLIP = "label_flip"
    SHUFFLE = "shuffle"
    STEALTHY = "stealthy"


ATTACK_NAMES = [k.value for k in AttackKind]

# attacks that send the same crafted vector from every Byzantine client
_DETERMINISTIC = {
    AttackKind.SIGN_FLIP,
    AttackKind.CLUSTERED,
    AttackKind.SAME_VALUE,
    AttackKind.LIE,
}


@dataclass(frozen=True)
class AttackSpec:
    """Attack kind plus its knobs (defaults follow the evaluated models)."""

    kind: AttackKind
    gaussian_alpha: float = 10.0
    scale_alpha: float = 10.0
    scale_noise_std: float = 0.1
    z_max: float = 1.0  # standard lie multiplier; evaluated grid {0.5, 1.0, 1.5, 2.0}
    z_large_range: tuple[float, float] = (3.0, 8.0)
    negative_prob: float = 0.7
    alie_modify_prob: float = 0.2
    targeted_modify_prob: float = 0.1
    targeted_shift: float = 5.0
    sparse_fraction: float = 0.05
    z_ext_range: tuple[float, float] = (5.0, 15.0)
    blatant_z_range: tuple[float, float] = (1.75, 3.25)
    blatant_eta_range: tuple[float, float] = (0.1, 0.4)
    stealthy_std: float = 0.05
    same_value_shift: float = 3.0
    clustered_mult: float = 2.0
    seed: int = 0

    def __post_init__(self):
        kind = AttackKind(self.kind)
        object.__setattr__(self, "kind", kind)
        for lo, hi in (self.z_large_range, self.z_ext_range,
                       self.blatant_z_range, self.blatant_eta_range):
            if not (lo <= hi):
                raise ValueError("attack parameter ranges must be non-empty")
        for p in (self.negative_prob, self.alie_modify_prob, self.targeted_modify_prob):
            if not (0.0 <= p <= 1.0):
                raise ValueError("probabilities must lie in [0, 1]")

    def with_seed(self, seed: int) -> "AttackSpec":
        return replace(self, seed=seed)


def _client_rng(spec: AttackSpec, client: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([spec.seed & 0xFFFFFFFF, client]))


def _craft_one(
    spec: AttackSpec, stats: HonestStats, f: int,
    pool: list[GradientVector], client: int,
) -> np.ndarray:
    mu, sigma = stats.mu, stats.sigma
    d = stats.dim
    rng = _client_rng(spec, client)
    kind = spec.kind

    if kind is AttackKind.GAUSSIAN_NOISE:
        return rng.normal(0.0, spec.gaussian_alpha, d)
    if kind is AttackKind.SIGN_FLIP:
        return -mu
    if kind is AttackKind.SCALE:
        return spec.scale_alpha * mu + rng.normal(0.0, spec.scale_noise_std, d)
    if kind is AttackKind.TARGETED:
        mask = rng.random(d) < spec.targeted_modify_prob
        return mu + np.where(mask, spec.targeted_shift * sigma, 0.0)
    if kind is AttackKind.CLUSTERED:
        return mu + spec.clustered_mult * f * sigma
    if kind is AttackKind.SAME_VALUE:
        return mu + spec.same_value_shift * sigma
    if kind is AttackKind.LIE:
        return mu - spec.z_max * sigma
    if kind is AttackKind.BLATANT_LIE:
        direction = -1.0 if rng.random() < 0.5 else 1.0
        z = rng.uniform(*spec.blatant_z_range)
        eta = rng.uniform(*spec.blatant_eta_range) * float(sigma.mean())
        return mu + direction * z * sigma + rng.normal(0.0, eta, d)
    if kind is AttackKind.ALIE:
        z = rng.uniform(*spec.z_large_range)
        mask = rng.random(d) < spec.alie_modify_prob
        signs = np.where(rng.random(d) < spec.negative_prob, -1.0, 1.0)
        return mu + np.where(mask, signs * z * sigma, 0.0)
    if kind is AttackKind.SPARSE_LIE:
        count = max(1, math.floor(spec.sparse_fraction * d))
        top = np.sort(np.argsort(-sigma, kind="stable")[:count])
        z = rng.uniform(*spec.z_ext_range)
        out = mu.copy()
        out[top] = mu[top] - z * sigma[top]
        return out
    if kind is AttackKind.SHUFFLE:
        source = pool[int(rng.integers(len(pool)))].values
        return source[rng.permutation(d)]
    if kind is AttackKind.STEALTHY:
        return mu + rng.normal(0.0, spec.stealthy_std, d)
    raise AssertionError(f"unhandled attack kind {kind}")


def generate(
    spec: AttackSpec, stats: HonestStats, f: int, honest_pool: list[GradientVector]
) -> list[GradientVector]:
    """Produce the f Byzantine gradient vectors for one round."""
    if f < 1:
        raise ValueError("f must be at least 1 to generate an attack")
    if not honest_pool:
        raise ValueError("honest_pool must be non-empty")
    if spec.kind is AttackKind.LABEL_FLIP:
        raise ValueError("label flip requires trainer backend")
    if spec.kind in _DETERMINISTIC:
        vec = _craft_one(spec, stats, f, honest_pool, 0)
        return [GradientVector(vec.copy()) for _ in range(f)]
    return [
        GradientVector(_craft_one(spec, stats, f, honest_pool, c)) for c in range(f)
    ]
