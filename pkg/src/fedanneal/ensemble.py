"""Ensemble aggregators: routing gate, cascaded dual-distance QUBO, and the
multi-signal pipeline (gate -> classical or suspicion QUBO + agreement vote).

The gate reads two normalized Krum score gaps: a Euclidean gap computed on
full gradients and a cosine gap computed on importance-projected gradients.
Large gaps mean per-client scoring separates the population cleanly and
classical selection is trusted; when both gaps collapse, the round is
treated as an evasion attempt and routed to the suspicion-penalized QUBO
with an agreement vote between both selections.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .anneal import AnnealConfig, simulated_anneal
from .core import GradientVector
from .distance import BlendConfig, cosine_matrix, dual_blend, euclidean_matrix, normalize_euclidean
from .krum import GapResult, KrumScores, krum_gap, krum_scores, krum_scores_from_matrix, multikrum_select
from .projection import ProjectionConfig, importance_project
from .qubo import SuspicionConfig, build_selection_qubo, build_suspicion_qubo, repair_cardinality


class Regime(enum.Enum):
    OUTLIER = "outlier"
    CLUSTERED = "clustered"
    MAGNITUDE = "magnitude"
    EVASION = "evasion"


@dataclass(frozen=True)
class RoutingConfig:
    tau_e: float = 0.2
    tau_c: float = 0.5
    cascade_tau: float = 0.2

    def __post_init__(self):
        if min(self.tau_e, self.tau_c, self.cascade_tau) <= 0:
            raise ValueError("routing thresholds must be positive")


@dataclass(frozen=True)
class VoteConfig:
    """Rank adjustments for the agreement vote.

    Membership in the QUBO selection earns the accept bonus (the vote is
    QUBO-primary in the evasion regime, where classical scoring has low
    confidence); clients rejected by both methods are penalized, and
    clients only the classical method kept carry a smaller penalty.
    """

    agreed_accept_bonus: float = 0.5
    agreed_reject_penalty: float = 0.5
    classical_only_penalty: float = 0.25

    def __post_init__(self):
        if min(self.agreed_accept_bonus, self.agreed_reject_penalty,
               self.classical_only_penalty) < 0:
            raise ValueError("vote adjustments must be non-negative")


@dataclass(frozen=True)
class SelectionResult:
    selected: list[int]
    regime: Regime | None
    method: str  # classical | qubo | cascade_qubo | vote
    gaps: tuple[float, float | None] | None = None
    agreement: dict[str, int] | None = None


def route_regime(delta_e: GapResult, delta_c: GapResult, cfg: RoutingConfig) -> Regime:
    """Total routing over the (Euclidean gap, cosine gap) plane.

    Degenerate gaps arrive as +inf and therefore exceed every threshold.
    The ladder is evaluated in order, so the uncovered strip
    (delta_e <= tau_e, tau_e < delta_c <= tau_c) falls through to EVASION.
    """
    de, dc = delta_e.delta, delta_c.delta
    if de > cfg.tau_e and dc > cfg.tau_e:
        return Regime.OUTLIER
    if de <= cfg.tau_e and dc > cfg.tau_c:
        return Regime.CLUSTERED
    if de > cfg.tau_e and dc <= cfg.tau_e:
        return Regime.MAGNITUDE
    return Regime.EVASION


def classical_selection(vectors, f: int, m: int) -> tuple[list[int], KrumScores]:
    scores = krum_scores(vectors, f)
    return multikrum_select(scores, m), scores


def cascaded_dual_qubo(
    gradients: list[GradientVector],
    projected,
    m: int,
    f: int,
    routing: RoutingConfig = RoutingConfig(),
    blend: BlendConfig = BlendConfig(),
    anneal_cfg: AnnealConfig = AnnealConfig(),
) -> SelectionResult:
    """Threshold cascade: classical when the Euclidean gap is wide, else a
    selection QUBO over the blended (normalized Euclidean + cosine) distances."""
    if m >= len(gradients):
        return SelectionResult(
            selected=list(range(len(gradients))), regime=None, method="classical"
        )
    scores_e = krum_scores(gradients, f)
    gap_e = krum_gap(scores_e, m)
    if gap_e.delta > routing.cascade_tau:
        return SelectionResult(
            selected=multikrum_select(scores_e, m),
            regime=None,
            method="classical",
            gaps=(gap_e.delta, None),
        )
    d_cos = cosine_matrix(projected, blend.epsilon)
    d_dual = dual_blend(normalize_euclidean(euclidean_matrix(projected)), d_cos, blend.alpha)
    model = build_selection_qubo(d_dual, m)
    sample = simulated_anneal(model, anneal_cfg)
    selected = repair_cardinality(sample.best_assignment, d_dual, m)
    return SelectionResult(
        selected=selected, regime=None, method="cascade_qubo", gaps=(gap_e.delta, None)
    )


def agreement_vote(
    s_classical,
    s_qubo,
    cosine_scores: KrumScores,
    m: int,
    cfg: VoteConfig = VoteConfig(),
) -> list[int]:
    """Blend both selections through a rank score over normalized cosine scores.

    r_i = norm_score_i - accept_bonus * [i in QUBO selection]
                        + reject_penalty * [i in neither selection]
                        + classical_only_penalty * [i in classical only]

    The m smallest r_i win, ties toward the lower index. With all
    adjustments at zero this reduces to picking the m lowest cosine scores.
    """
    n = cosine_scores.n
    set_c, set_q = set(s_classical), set(s_qubo)
    if len(set_c) != m or len(set_q) != m:
        raise ValueError("both input selections must have exactly m members")
    raw = cosine_scores.scores
    spread = raw.max() - raw.min()
    norm = (raw - raw.min()) / spread if spread > 0 else np.zeros(n)
    r = norm.copy()
    for i in range(n):
        if i in set_q:
            r[i] -= cfg.agreed_accept_bonus
        elif i not in set_c:
            r[i] += cfg.agreed_reject_penalty
        else:
            r[i] += cfg.classical_only_penalty
    order = np.argsort(r, kind="stable")
    return sorted(int(i) for i in order[:m])


def agreement_categories(s_classical, s_qubo, n: int) -> dict[str, int]:
    set_c, set_q = set(s_classical), set(s_qubo)
    both = len(set_c & set_q)
    return {
        "agreed_accept": both,
        "agreed_reject": n - len(set_c | set_q),
        "qubo_only": len(set_q) - both,
        "classical_only": len(set_c) - both,
    }


def multisignal_aggregate(
    gradients: list[GradientVector],
    m: int,
    f: int,
    projection_k: int,
    routing: RoutingConfig = RoutingConfig(),
    vote: VoteConfig = VoteConfig(),
    suspicion: SuspicionConfig = SuspicionConfig(),
    blend: BlendConfig = BlendConfig(),
    anneal_cfg: AnnealConfig = AnnealConfig(),
) -> SelectionResult:
    """Gate on both score gaps, then run the regime's selector.

    Non-evasion regimes trust classical selection on full gradients. The
    evasion branch runs classical selection and the suspicion QUBO on the
    blended projected distances (cardinality-repaired), then merges them
    with the agreement vote. The classical selection and the QUBO solve
    are independent and could run concurrently; the vote joins them.
    """
    n = len(gradients)
    if n < f + 3:
        raise ValueError("insufficient clients for Krum")
    if m >= n:
        # nothing is rejected, so there is no gap to gate on
        return SelectionResult(selected=list(range(n)), regime=None, method="classical")
    projected = importance_project(gradients, ProjectionConfig(k=projection_k))

    scores_e = krum_scores(gradients, f)
    gap_e = krum_gap(scores_e, m)
    d_cos = cosine_matrix(projected, blend.epsilon)
    scores_c = krum_scores_from_matrix(d_cos.entries, f)
    gap_c = krum_gap(scores_c, m)

    regime = route_regime(gap_e, gap_c, routing)
    gaps = (gap_e.delta, gap_c.delta)
    if regime is not Regime.EVASION:
        return SelectionResult(
            selected=multikrum_select(scores_e, m),
            regime=regime,
            method="classical",
            gaps=gaps,
        )

    s_classical = multikrum_select(scores_e, m)
    d_dual = dual_blend(normalize_euclidean(euclidean_matrix(projected)), d_cos, blend.alpha)
    model = build_suspicion_qubo(d_dual, m, suspicion)
    sample = simulated_anneal(model, anneal_cfg)
    s_qubo = repair_cardinality(sample.best_assignment, d_dual, m)
    selected = agreement_vote(s_classical, s_qubo, scores_c, m, vote)
    return SelectionResult(
        selected=selected,
        regime=regime,
        method="vote",
        gaps=gaps,
        agreement=agreement_categories(s_classical, s_qubo, n),
    )
