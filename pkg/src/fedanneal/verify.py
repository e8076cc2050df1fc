"""Self-check suites: the cut identity and annealer-vs-exact soundness.

These run seeded, synthetic pipeline instances (distance matrices built
the same way the aggregators build them) and compare the annealer against
exhaustive enumeration. They back the `verify` CLI verb and the
acceptance tests.
"""

from __future__ import annotations

import numpy as np

from .anneal import AnnealConfig, BRUTE_FORCE_LIMIT, brute_force_solve, simulated_anneal
from .distance import BlendConfig, DistanceMatrix, EUCLIDEAN, cosine_matrix, dual_blend, euclidean_matrix, normalize_euclidean
from .qubo import SuspicionConfig, build_selection_qubo, build_suspicion_qubo, energy, repair_cardinality

CUT_TOLERANCE = 1e-9


def random_distance_matrix(rng: np.random.Generator, n: int) -> DistanceMatrix:
    """Random symmetric non-negative matrix with zero diagonal (euclidean tag)."""
    raw = rng.random((n, n)) * rng.uniform(0.5, 4.0)
    d = np.triu(raw, k=1)
    d = d + d.T
    return DistanceMatrix(entries=d, metric=EUCLIDEAN)


def pipeline_distance(rng: np.random.Generator, n: int) -> DistanceMatrix:
    """Distance matrix shaped like a real round: honest cluster plus outliers."""
    dim = int(rng.integers(6, 16))
    center = rng.normal(0.0, 1.0, dim)
    points = center + rng.normal(0.0, 0.3, (n, dim))
    n_out = int(rng.integers(1, max(2, n // 4) + 1))
    points[-n_out:] += rng.normal(0.0, 3.0, (n_out, dim))
    if rng.random() < 0.5:
        return cosine_matrix(points)
    cos = cosine_matrix(points)
    return dual_blend(normalize_euclidean(euclidean_matrix(points)), cos, 0.5)


def _all_assignments(n: int) -> np.ndarray:
    ks = np.arange(1 << n, dtype=np.uint32)
    shifts = np.arange(n - 1, -1, -1, dtype=np.uint32)
    return ((ks[:, None] >> shifts[None, :]) & 1).astype(np.float64)


def cut_identity_suite(matrices: int = 200, seed: int = 7) -> dict:
    """Check that the selection model's data term equals the selected/rejected cut.

    For every feasible assignment (|S| = m), subtracting the constraint
    contribution from the model energy must leave exactly
    sum_{i in S, j not in S} D_ij.
    """
    rng = np.random.default_rng(seed)
    worst = 0.0
    failures = 0
    for _ in range(matrices):
        n = int(rng.integers(4, 13))
        m = int(rng.integers(1, n))
        dist = random_distance_matrix(rng, n)
        model = build_selection_qubo(dist, m)
        qu = np.zeros((n, n))
        for (i, j), v in model.quadratic.items():
            qu[i, j] = v
        x = _all_assignments(n)
        feasible = x[x.sum(axis=1) == m]
        energies = feasible @ model.linear + ((feasible @ qu) * feasible).sum(axis=1)
        objective = energies + model.lam * m * m  # drop the constant constraint term
        cuts = np.einsum("ri,ij,rj->r", feasible, dist.entries, 1.0 - feasible)
        err = np.abs(objective - cuts).max(initial=0.0)
        worst = max(worst, float(err))
        if err > CUT_TOLERANCE:
            failures += 1
    return {"matrices": matrices, "failures": failures, "max_error": worst,
            "ok": failures == 0}


def solver_suite(
    instances: int = 100,
    reads: int = 1000,
    seed: int = 11,
    n_max: int = 15,
    fixed_n: int | None = None,
    sweeps: int = 1000,
) -> dict:
    """Anneal seeded pipeline QUBOs against exhaustive enumeration.

    Checks, per instance: the annealer never goes below the exact optimum,
    the exact optimum is cardinality-feasible, and the repaired selection
    has exactly m members. Counts how often the annealer hits the optimum.
    """
    top = fixed_n if fixed_n is not None else n_max
    if top > BRUTE_FORCE_LIMIT:
        raise ValueError("instance too large for exact solve")
    rng = np.random.default_rng(seed)
    sa_never_below = exact_matches = repaired_ok = feasible_optima = 0
    for idx in range(instances):
        n = fixed_n if fixed_n is not None else int(rng.integers(6, n_max + 1))
        dist = pipeline_distance(rng, n)
        f = max(1, n // 5)
        m = n - f
        if idx % 2 == 0:
            model = build_selection_qubo(dist, m)
        else:
            model = build_suspicion_qubo(dist, m, SuspicionConfig())
        exact_x, exact_e = brute_force_solve(model)
        if int(exact_x.sum()) == m:
            feasible_optima += 1
        cfg = AnnealConfig(reads=reads, sweeps_per_read=sweeps,
                           seed=int(rng.integers(0, 2**62)))
        sample = simulated_anneal(model, cfg)
        if sample.best_energy >= exact_e - CUT_TOLERANCE:
            sa_never_below += 1
        if sample.best_energy <= exact_e + CUT_TOLERANCE:
            exact_matches += 1
        if len(repair_cardinality(sample.best_assignment, dist, m)) == m:
            repaired_ok += 1
    return {
        "instances": instances,
        "sa_never_below": sa_never_below,
        "exact_matches": exact_matches,
        "repaired_ok": repaired_ok,
        "feasible_optima": feasible_optima,
        "ok": (
            sa_never_below == instances
            and repaired_ok == instances
            and feasible_optima == instances
            and exact_matches >= int(0.95 * instances)
        ),
    }
