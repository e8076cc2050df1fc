import numpy as np
import pytest

from fedanneal.anneal import (
    AnnealConfig,
    anneal_reads,
    brute_force_solve,
    simulated_anneal,
)
from fedanneal.distance import DistanceMatrix, EUCLIDEAN
from fedanneal.qubo import QuboModel, build_selection_qubo, energy
from fedanneal.verify import pipeline_distance

FAST = AnnealConfig(reads=64, sweeps_per_read=200, seed=99)


@pytest.fixture
def worked_model():
    entries = np.array([[0.0, 1.0, 2.0], [1.0, 0.0, 3.0], [2.0, 3.0, 0.0]])
    return build_selection_qubo(DistanceMatrix(entries=entries, metric=EUCLIDEAN), 2)


def test_single_variable_model():
    model = QuboModel(n=1, linear=np.array([-5.0]), quadratic={}, lam=1.0, m=1)
    out = simulated_anneal(model, AnnealConfig(reads=8, sweeps_per_read=16, seed=1))
    assert out.best_assignment.tolist() == [1]
    assert out.best_energy == -5.0


def test_worked_example_optimum(worked_model):
    out = simulated_anneal(worked_model, FAST)
    assert out.best_assignment.tolist() == [0, 1, 1]
    assert out.best_energy == pytest.approx(-117.0)


def test_sampleset_invariants(worked_model):
    out = simulated_anneal(worked_model, FAST)
    assert out.best_energy == min(out.all_read_energies)
    assert out.best_energy == energy(worked_model, out.best_assignment)
    assert len(out.all_read_energies) == FAST.reads


def test_deterministic_given_seed(worked_model):
    a = simulated_anneal(worked_model, FAST)
    b = simulated_anneal(worked_model, FAST)
    assert np.array_equal(a.best_assignment, b.best_assignment)
    assert np.array_equal(a.all_read_energies, b.all_read_energies)
    c = simulated_anneal(worked_model, AnnealConfig(reads=64, sweeps_per_read=200, seed=100))
    assert not np.array_equal(a.all_read_energies, c.all_read_energies)


def test_incremental_bookkeeping_matches_recompute():
    rng = np.random.default_rng(3)
    for _ in range(5):
        model = build_selection_qubo(pipeline_distance(rng, int(rng.integers(4, 10))), 3)
        states, tracked = anneal_reads(model, AnnealConfig(reads=16, sweeps_per_read=50, seed=7))
        for row, tracked_e in zip(states, tracked):
            assert abs(energy(model, row) - tracked_e) <= 1e-9


def test_brute_force_examples(worked_model):
    model = QuboModel(n=3, linear=np.zeros(3), quadratic={}, lam=1.0, m=1)
    x, e = brute_force_solve(model)
    assert x.tolist() == [0, 0, 0] and e == 0.0  # lexicographic tie-break

    x, e = brute_force_solve(worked_model)
    assert x.tolist() == [0, 1, 1]
    assert e == -117.0
    assert e == energy(worked_model, x)


def test_brute_force_guard():
    model = QuboModel(n=25, linear=np.zeros(25), quadratic={}, lam=1.0, m=1)
    with pytest.raises(ValueError, match="too large"):
        brute_force_solve(model)


def test_sa_never_beats_exact_and_usually_matches():
    rng = np.random.default_rng(13)
    exact_hits = 0
    trials = 20
    for _ in range(trials):
        n = int(rng.integers(4, 13))
        model = build_selection_qubo(pipeline_distance(rng, n), max(1, n - 2))
        _, e_exact = brute_force_solve(model)
        out = simulated_anneal(model, AnnealConfig(reads=50, sweeps_per_read=200,
                                                   seed=int(rng.integers(1 << 30))))
        assert out.best_energy >= e_exact - 1e-9
        if out.best_energy <= e_exact + 1e-9:
            exact_hits += 1
    assert exact_hits >= trials - 1
