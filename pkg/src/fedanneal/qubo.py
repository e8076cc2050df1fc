"""Binary quadratic models for joint client-subset selection.

The selection model minimizes

    sum_i (rowsum_i) x_i  -  2 sum_{i<j} D_ij x_i x_j  +  lambda (sum_i x_i - m)^2

over binary x. Note that for any feasible assignment (|S| = m) the data
term equals the total distance across the selected/rejected cut,
sum_{i in S, j not in S} D_ij, not the pairwise distance within S; this
algebraic identity is the module's main correctness oracle and explains
why the selector favors rejecting mutually spread, centrally located
clients. The suspicion variant adds a repulsive bonus for client pairs
whose blended distance falls below a low percentile, so that suspiciously
similar cliques are not co-selected.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .distance import DistanceMatrix

LAMBDA_SCALE = 10.0
LAMBDA_FLOOR = 1.0


@dataclass(frozen=True)
class QuboModel:
    """Upper-triangular coefficient form of a selection QUBO.

    `linear[i]` holds Q_ii and `quadratic[(i, j)]` holds Q_ij for i < j.
    The penalty weight `lam` and target cardinality `m` are recorded for
    audit; `tau_s` is set only by the suspicion builder.
    """

    n: int
    linear: np.ndarray
    quadratic: dict[tuple[int, int], float]
    lam: float
    m: int
    tau_s: float | None = None

    def __post_init__(self):
        linear = np.asarray(self.linear, dtype=np.float64)
        if linear.shape != (self.n,):
            raise ValueError("linear term length must equal n")
        for (i, j) in self.quadratic:
            if not (0 <= i < j < self.n):
                raise ValueError("quadratic keys must be strictly upper-triangular")
        if not (1 <= self.m <= self.n):
            raise ValueError("m must satisfy 1 <= m <= n")
        object.__setattr__(self, "linear", linear)

    def dense_symmetric(self) -> np.ndarray:
        """Off-diagonal couplings as a symmetric zero-diagonal matrix."""
        q = np.zeros((self.n, self.n))
        for (i, j), v in self.quadratic.items():
            q[i, j] = v
            q[j, i] = v
        return q


@dataclass(frozen=True)
class SuspicionConfig:
    """Parameters of the similarity penalty added in the evasion regime."""

    percentile_p: float = 10.0
    suspicion_weight: float = 10.0

    def __post_init__(self):
        if not (0.0 < self.percentile_p < 100.0):
            raise ValueError("percentile_p must lie in (0, 100)")
        if not (self.suspicion_weight > 0):
            raise ValueError("suspicion_weight must be positive")


def _penalty_weight(max_distance: float) -> float:
    lam = LAMBDA_SCALE * max_distance
    return lam if lam > 0.0 else LAMBDA_FLOOR


def build_selection_qubo(dist: DistanceMatrix, m: int) -> QuboModel:
    """Standard cardinality-constrained selection model.

    Q_ii = rowsum_i + lam * (1 - 2m),  Q_ij = -2 D_ij + 2 lam, with
    lam = 10 * max D (floored at 1 for a degenerate all-zero matrix so
    the cardinality constraint never vanishes).
    """
    n = dist.n
    if n < 2 or not (1 <= m <= n):
        raise ValueError("need n >= 2 and 1 <= m <= n")
    entries = dist.entries
    lam = _penalty_weight(dist.max_off_diagonal())
    rowsums = entries.sum(axis=1)
    linear = rowsums + lam * (1.0 - 2.0 * m)
    quadratic = {
        (i, j): float(-2.0 * entries[i, j] + 2.0 * lam)
        for i in range(n)
        for j in range(i + 1, n)
    }
    return QuboModel(n=n, linear=linear, quadratic=quadratic, lam=lam, m=m)


def build_suspicion_qubo(
    dual: DistanceMatrix, m: int, cfg: SuspicionConfig = SuspicionConfig()
) -> QuboModel:
    """Selection model with a repulsive term for suspiciously similar pairs.

    tau_s is the p-th percentile (linear interpolation) of the strict
    upper-triangular dual distances; pairs below it receive an extra
    w_s * (tau_s - D_ij) coupling before the cardinality terms are added.
    """
    n = dual.n
    if n < 2 or not (1 <= m <= n):
        raise ValueError("need n >= 2 and 1 <= m <= n")
    entries = dual.entries
    tau_s = float(np.percentile(dual.upper_triangular_values(), cfg.percentile_p))
    lam = _penalty_weight(dual.max_off_diagonal())
    rowsums = entries.sum(axis=1)
    linear = rowsums + lam * (1.0 - 2.0 * m)
    w = cfg.suspicion_weight
    quadratic = {}
    for i in range(n):
        for j in range(i + 1, n):
            d = entries[i, j]
            quadratic[(i, j)] = float(-2.0 * d + w * max(0.0, tau_s - d) + 2.0 * lam)
    return QuboModel(n=n, linear=linear, quadratic=quadratic, lam=lam, m=m, tau_s=tau_s)


def energy(model: QuboModel, x) -> float:
    """Evaluate sum_i Q_ii x_i + sum_{i<j} Q_ij x_i x_j for a binary vector."""
    x = np.asarray(x)
    if x.shape != (model.n,):
        raise ValueError(f"assignment length {x.shape} != n={model.n}")
    total = float(model.linear @ x)
    for (i, j), v in model.quadratic.items():
        if x[i] and x[j]:
            total += v
    return total


def repair_cardinality(x, dist: DistanceMatrix, m: int) -> list[int]:
    """Force an assignment to exactly m selected clients.

    Oversized selections drop the member with the largest distance sum to
    the rest of the selection; undersized ones add the outsider with the
    smallest distance sum to the current selection. Ties prefer the lower
    client index. Deterministic, always returns exactly m indices.
    """
    entries = dist.entries
    n = dist.n
    if not (1 <= m <= n):
        raise ValueError("m must satisfy 1 <= m <= n")
    selected = sorted(int(i) for i, v in enumerate(np.asarray(x)) if v)
    while len(selected) > m:
        sums = [entries[i, selected].sum() for i in selected]
        worst = selected[int(np.argmax(sums))]  # argmax returns first max: lower index
        selected.remove(worst)
    while len(selected) < m:
        outside = [i for i in range(n) if i not in selected]
        sums = [entries[i, selected].sum() if selected else 0.0 for i in outside]
        best = outside[int(np.argmin(sums))]
        selected.append(best)
        selected.sort()
    return selected


def dump_qubo(model: QuboModel) -> str:
    """Serialize to the text interchange format: `n m lambda` then coefficient rows."""
    lines = [f"{model.n} {model.m} {float(model.lam)!r}"]
    for i in range(model.n):
        lines.append(f"{i} {i} {float(model.linear[i])!r}")
    for (i, j) in sorted(model.quadratic):
        lines.append(f"{i} {j} {float(model.quadratic[(i, j)])!r}")
    return "\n".join(lines) + "\n"
