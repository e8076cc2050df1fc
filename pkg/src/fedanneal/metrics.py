"""Confusion-matrix bookkeeping with Byzantine as the positive class.

Convention: a client is "rejected" when it is flagged Byzantine (left out
of the selection) and "selected" when trusted. True positives are
rejected Byzantine clients; true negatives are selected honest clients.
"""

from __future__ import annotations

from dataclasses import dataclass

from .core import ClientUpdate


@dataclass(frozen=True)
class RoundMetrics:
    tp: int
    fp: int
    tn: int
    fn: int
    detection_accuracy: float
    f1: float
    byzantine_rejection_rate: float
    honest_retention_rate: float

    @property
    def n(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @property
    def f(self) -> int:
        return self.tp + self.fn


def _rates(tp: int, fp: int, tn: int, fn: int) -> tuple[float, float, float, float]:
    n = tp + fp + tn + fn
    f = tp + fn
    honest = tn + fp
    accuracy = (tp + tn) / n if n else 0.0
    if tp == 0 and fp == 0 and fn == 0:
        f1 = 1.0  # no positives anywhere: vacuously perfect
    else:
        f1 = 2 * tp / (2 * tp + fp + fn)
    rejection = tp / f if f > 0 else 1.0  # no Byzantine clients to miss
    retention = tn / honest if honest > 0 else 1.0
    return accuracy, f1, rejection, retention


def from_counts(tp: int, fp: int, tn: int, fn: int) -> RoundMetrics:
    if min(tp, fp, tn, fn) < 0:
        raise ValueError("confusion counts must be non-negative")
    accuracy, f1, rejection, retention = _rates(tp, fp, tn, fn)
    return RoundMetrics(tp, fp, tn, fn, accuracy, f1, rejection, retention)


def score_round(selected, updates: list[ClientUpdate]) -> RoundMetrics:
    """Confusion counts and rates for one round's selection."""
    chosen = set(int(i) for i in selected)
    ids = {u.client_id for u in updates}
    if not chosen <= ids:
        raise ValueError("selected contains unknown client ids")
    tp = fp = tn = fn = 0
    for u in updates:
        picked = u.client_id in chosen
        if u.is_byzantine:
            if picked:
                fn += 1
            else:
                tp += 1
        else:
            if picked:
                tn += 1
            else:
                fp += 1
    return from_counts(tp, fp, tn, fn)


def aggregate_metrics(rounds: list[RoundMetrics]) -> RoundMetrics:
    """Sum the counts and average the four rates across rounds."""
    if not rounds:
        raise ValueError("cannot aggregate zero rounds")
    k = len(rounds)
    return RoundMetrics(
        tp=sum(r.tp for r in rounds),
        fp=sum(r.fp for r in rounds),
        tn=sum(r.tn for r in rounds),
        fn=sum(r.fn for r in rounds),
        detection_accuracy=sum(r.detection_accuracy for r in rounds) / k,
        f1=sum(r.f1 for r in rounds) / k,
        byzantine_rejection_rate=sum(r.byzantine_rejection_rate for r in rounds) / k,
        honest_retention_rate=sum(r.honest_retention_rate for r in rounds) / k,
    )
