"""Byzantine-robust federated aggregation with QUBO client selection."""

from .anneal import AnnealConfig, SampleSet, brute_force_solve, simulated_anneal
from .attacks import ATTACK_NAMES, AttackKind, AttackSpec, generate
from .core import (
    ClientUpdate,
    GlobalModel,
    GradientVector,
    HonestStats,
    apply_update,
    compute_honest_stats,
)
from .distance import (
    BlendConfig,
    DistanceMatrix,
    cosine_matrix,
    dual_blend,
    euclidean_matrix,
    normalize_euclidean,
)
from .ensemble import (
    Regime,
    RoutingConfig,
    SelectionResult,
    VoteConfig,
    agreement_vote,
    cascaded_dual_qubo,
    multisignal_aggregate,
    route_regime,
)
from .harness import ExperimentConfig, ExperimentResult, run_experiment
from .krum import GapResult, KrumScores, krum_gap, krum_scores, multikrum_select
from .metrics import RoundMetrics, aggregate_metrics, score_round
from .projection import ProjectionConfig, ProjectedGradient, importance_project
from .qubo import (
    QuboModel,
    SuspicionConfig,
    build_selection_qubo,
    build_suspicion_qubo,
    dump_qubo,
    energy,
    repair_cardinality,
)
from .synthetic import SyntheticSourceConfig, synthetic_honest_gradients
from .trainer import TrainerConfig, local_train_step

__version__ = "0.1.0"
