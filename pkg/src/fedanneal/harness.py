"""Round-based federated simulation: gradient sources, aggregation, metrics, persistence.

One experiment = one (attack, aggregator) pair run for a number of rounds.
Per round: produce honest gradients (synthetic draw or local MLP training),
compute honest statistics, craft the Byzantine updates, select clients with
the configured aggregator, apply the averaged update to the global model,
and score the selection against ground truth.

Everything random is keyed off the experiment seed, so a (config, seed)
pair reproduces identical selections, metrics, and final weights. Wall
times are recorded in the CSV for convenience but are the one
non-deterministic column.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import os
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .anneal import AnnealConfig, simulated_anneal
from .attacks import AttackKind, AttackSpec, generate
from .core import ClientUpdate, GlobalModel, GradientVector, apply_update, compute_honest_stats
from .distance import BlendConfig, cosine_matrix
from .ensemble import (
    RoutingConfig,
    SelectionResult,
    VoteConfig,
    cascaded_dual_qubo,
    multisignal_aggregate,
)
from .krum import krum_scores, multikrum_select
from .metrics import RoundMetrics, aggregate_metrics, score_round
from .projection import ProjectionConfig, importance_project
from .qubo import SuspicionConfig, build_selection_qubo, repair_cardinality
from .synthetic import SyntheticSourceConfig, synthetic_honest_gradients
from .trainer import TrainerConfig, init_params, local_train_step, param_count, read_idx_images, read_idx_labels, synthetic_blobs

AGGREGATORS = ("classical", "qubo", "cascade", "multisignal")
SOURCES = ("synthetic", "trainer")

_TAG_ATTACK = 201
_TAG_ANNEAL = 202
_TAG_MODEL = 203
_TAG_TRAIN = 204

CSV_COLUMNS = [
    "round", "attack", "aggregator", "regime", "delta_E", "delta_C",
    "tp", "fp", "tn", "fn", "detection_accuracy", "f1",
    "byz_rejection", "honest_retention", "solver_method", "wall_ms",
]


def derive_seed(*key: int) -> int:
    return int(np.random.SeedSequence(list(key)).generate_state(1, np.uint64)[0] >> 1)


@dataclass(frozen=True)
class ExperimentConfig:
    n: int = 15
    f: int = 3
    m: int | None = None  # defaults to n - f
    rounds: int = 30
    projection_k: int = 1000
    learning_rate: float = 0.01
    gradient_source: str = "synthetic"
    aggregator: str = "classical"
    seed: int = 42
    output_path: str | None = None
    attack: AttackSpec = field(default_factory=lambda: AttackSpec(kind=AttackKind.SIGN_FLIP))
    routing: RoutingConfig = field(default_factory=RoutingConfig)
    vote: VoteConfig = field(default_factory=VoteConfig)
    anneal: AnnealConfig = field(default_factory=AnnealConfig)
    suspicion: SuspicionConfig = field(default_factory=SuspicionConfig)
    blend: BlendConfig = field(default_factory=BlendConfig)
    synthetic: SyntheticSourceConfig = field(default_factory=SyntheticSourceConfig)
    trainer: TrainerConfig = field(default_factory=TrainerConfig)
    trainer_samples: int = 960
    idx_images: str | None = None
    idx_labels: str | None = None

    @property
    def selection_size(self) -> int:
        return self.m if self.m is not None else self.n - self.f

    def validate(self) -> None:
        if self.n < 2:
            raise ValueError("n must be at least 2")
        if not (0 <= self.f < self.n):
            raise ValueError("need 0 <= f < n")
        if self.n - self.f < 2:
            raise ValueError("need at least 2 honest clients")
        m = self.selection_size
        if not (1 <= m <= self.n):
            raise ValueError("m must satisfy 1 <= m <= n")
        if self.rounds < 1:
            raise ValueError("rounds must be >= 1")
        if self.aggregator not in AGGREGATORS:
            raise ValueError(f"aggregator must be one of {AGGREGATORS}")
        if self.gradient_source not in SOURCES:
            raise ValueError(f"gradient_source must be one of {SOURCES}")
        if self.projection_k < 1:
            raise ValueError("projection_k must be positive")
        if self.attack.kind is AttackKind.LABEL_FLIP and self.gradient_source != "trainer":
            raise ValueError("label flip requires trainer backend")
        if self.f > 0 and self.aggregator in ("classical", "cascade", "multisignal"):
            if self.n < self.f + 3:
                raise ValueError("insufficient clients for Krum")
        if self.gradient_source == "trainer" and self.trainer.dataset == "idx_files":
            if not (self.idx_images and self.idx_labels):
                raise ValueError("idx_files dataset needs idx_images and idx_labels paths")


@dataclass(frozen=True)
class RoundRecord:
    round_index: int
    selection: SelectionResult
    metrics: RoundMetrics
    wall_ms: float


@dataclass(frozen=True)
class ExperimentResult:
    config: ExperimentConfig
    records: list[RoundRecord]
    aggregate: RoundMetrics
    final_model: GlobalModel
    csv_path: str | None = None
    json_path: str | None = None

    def model_hash(self) -> str:
        return hashlib.sha256(self.final_model.weights.tobytes()).hexdigest()


def _select(cfg: ExperimentConfig, gradients: list[GradientVector], round_index: int) -> SelectionResult:
    m = cfg.selection_size
    anneal_cfg = replace(cfg.anneal, seed=derive_seed(cfg.seed, _TAG_ANNEAL, round_index))
    if cfg.aggregator == "classical":
        projected = importance_project(gradients, ProjectionConfig(k=cfg.projection_k))
        scores = krum_scores(projected, cfg.f)
        return SelectionResult(selected=multikrum_select(scores, m), regime=None, method="classical")
    if cfg.aggregator == "qubo":
        projected = importance_project(gradients, ProjectionConfig(k=cfg.projection_k))
        dist = cosine_matrix(projected, cfg.blend.epsilon)
        model = build_selection_qubo(dist, m)
        sample = simulated_anneal(model, anneal_cfg)
        selected = repair_cardinality(sample.best_assignment, dist, m)
        return SelectionResult(selected=selected, regime=None, method="qubo")
    if cfg.aggregator == "cascade":
        projected = importance_project(gradients, ProjectionConfig(k=cfg.projection_k))
        return cascaded_dual_qubo(
            gradients, projected, m, cfg.f, cfg.routing, cfg.blend, anneal_cfg
        )
    return multisignal_aggregate(
        gradients, m, cfg.f, cfg.projection_k,
        cfg.routing, cfg.vote, cfg.suspicion, cfg.blend, anneal_cfg,
    )


class _TrainerSource:
    """Shards a dataset across clients and trains the tiny MLP locally."""

    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        tr = cfg.trainer
        if tr.dataset == "idx_files":
            x = read_idx_images(cfg.idx_images)
            y = read_idx_labels(cfg.idx_labels)
        else:
            x, y = synthetic_blobs(cfg.trainer_samples, tr.layers[0], tr.classes, cfg.seed)
        order = np.random.default_rng(
            np.random.SeedSequence([cfg.seed & (2**63 - 1), _TAG_TRAIN])
        ).permutation(x.shape[0])
        self.shards = [
            (x[order[i :: cfg.n]], y[order[i :: cfg.n]]) for i in range(cfg.n)
        ]

    def initial_model(self) -> GlobalModel:
        rng = np.random.default_rng(
            np.random.SeedSequence([self.cfg.seed & (2**63 - 1), _TAG_MODEL])
        )
        return GlobalModel(weights=init_params(self.cfg.trainer.layers, rng),
                           eta=self.cfg.learning_rate)

    def gradients(self, model: GlobalModel, round_index: int, client: int,
                  flip_labels: bool) -> GradientVector:
        rng = np.random.default_rng(
            np.random.SeedSequence([self.cfg.seed & (2**63 - 1), _TAG_TRAIN, round_index, client])
        )
        return local_train_step(model, self.cfg.trainer, self.shards[client],
                                flip_labels=flip_labels, rng=rng)


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    """Execute every round and optionally persist the CSV/JSON artifacts."""
    cfg.validate()
    n_honest = cfg.n - cfg.f
    trainer_source = _TrainerSource(cfg) if cfg.gradient_source == "trainer" else None

    if trainer_source is not None:
        model = trainer_source.initial_model()
    else:
        model = GlobalModel(weights=np.zeros(cfg.synthetic.d), eta=cfg.learning_rate)

    records: list[RoundRecord] = []
    for t in range(cfg.rounds):
        started = time.perf_counter()
        if trainer_source is not None:
            honest_vecs = [
                trainer_source.gradients(model, t, i, flip_labels=False)
                for i in range(n_honest)
            ]
        else:
            honest_vecs = synthetic_honest_gradients(cfg.synthetic, n_honest, t, cfg.seed)
        updates = [
            ClientUpdate(client_id=i, gradient=g, is_byzantine=False)
            for i, g in enumerate(honest_vecs)
        ]

        if cfg.f > 0:
            if cfg.attack.kind is AttackKind.LABEL_FLIP:
                byz_vecs = [
                    trainer_source.gradients(model, t, n_honest + j, flip_labels=True)
                    for j in range(cfg.f)
                ]
            else:
                stats = compute_honest_stats(updates)
                spec = cfg.attack.with_seed(derive_seed(cfg.seed, _TAG_ATTACK, t))
                byz_vecs = generate(spec, stats, cfg.f, honest_vecs)
            updates += [
                ClientUpdate(client_id=n_honest + j, gradient=g, is_byzantine=True)
                for j, g in enumerate(byz_vecs)
            ]

        all_vecs = [u.gradient for u in updates]
        selection = _select(cfg, all_vecs, t)
        model = apply_update(model, [all_vecs[i] for i in selection.selected])
        metrics = score_round(selection.selected, updates)
        wall_ms = (time.perf_counter() - started) * 1000.0
        records.append(RoundRecord(t, selection, metrics, wall_ms))

    result = ExperimentResult(
        config=cfg,
        records=records,
        aggregate=aggregate_metrics([r.metrics for r in records]),
        final_model=model,
    )
    if cfg.output_path:
        csv_path, json_path = write_outputs(result, cfg.output_path)
        result = dataclasses.replace(result, csv_path=csv_path, json_path=json_path)
    return result


# ---------------------------------------------------------------------------
# persistence


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        if value != value:
            return "nan"
        if value in (float("inf"), float("-inf")):
            return "inf" if value > 0 else "-inf"
        return f"{value:.6f}"
    return str(value)


def render_csv(result: ExperimentResult) -> str:
    cfg = result.config
    lines = [",".join(CSV_COLUMNS)]
    for rec in result.records:
        sel, met = rec.selection, rec.metrics
        de = sel.gaps[0] if sel.gaps else None
        dc = sel.gaps[1] if sel.gaps else None
        row = [
            str(rec.round_index),
            cfg.attack.kind.value,
            cfg.aggregator,
            sel.regime.value if sel.regime else "",
            _fmt(de),
            _fmt(dc),
            str(met.tp), str(met.fp), str(met.tn), str(met.fn),
            _fmt(met.detection_accuracy), _fmt(met.f1),
            _fmt(met.byzantine_rejection_rate), _fmt(met.honest_retention_rate),
            sel.method,
            _fmt(rec.wall_ms),
        ]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def _jsonable(value):
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, AttackKind):
        return value.value
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if value is None or isinstance(value, (bool, int, str)):
        return value
    if isinstance(value, float):
        if value != value:
            return "nan"
        if value in (float("inf"), float("-inf")):
            return "inf" if value > 0 else "-inf"
        return value
    return value


def resolved_config(cfg: ExperimentConfig) -> dict:
    return _jsonable(dataclasses.asdict(cfg))


def render_summary(result: ExperimentResult) -> str:
    agg = result.aggregate
    decisions = []
    for rec in result.records:
        sel = rec.selection
        decisions.append({
            "round": rec.round_index,
            "regime": sel.regime.value if sel.regime else None,
            "delta_E": _jsonable(sel.gaps[0]) if sel.gaps else None,
            "delta_C": _jsonable(sel.gaps[1]) if sel.gaps else None,
            "method": sel.method,
            "selected": list(sel.selected),
            "agreement": sel.agreement,
        })
    doc = {
        "config": resolved_config(result.config),
        "aggregate": {
            "tp": agg.tp, "fp": agg.fp, "tn": agg.tn, "fn": agg.fn,
            "detection_accuracy": agg.detection_accuracy,
            "f1": agg.f1,
            "byz_rejection": agg.byzantine_rejection_rate,
            "honest_retention": agg.honest_retention_rate,
        },
        "rounds": len(result.records),
        "decision_log": decisions,
        "final_model_sha256": result.model_hash(),
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, path)


def write_outputs(result: ExperimentResult, base_path: str) -> tuple[str, str]:
    """Write <base>.csv and <base>.json atomically; returns the two paths."""
    base = base_path[:-4] if base_path.endswith(".csv") else base_path
    csv_path, json_path = base + ".csv", base + ".json"
    _atomic_write(csv_path, render_csv(result))
    _atomic_write(json_path, render_summary(result))
    return csv_path, json_path
