import numpy as np
import pytest

from fedanneal.distance import DistanceMatrix, EUCLIDEAN
from fedanneal.qubo import (
    SuspicionConfig,
    build_selection_qubo,
    build_suspicion_qubo,
    dump_qubo,
    energy,
    repair_cardinality,
)
from fedanneal.verify import random_distance_matrix


@pytest.fixture
def small_dist():
    entries = np.array([[0.0, 1.0, 2.0], [1.0, 0.0, 3.0], [2.0, 3.0, 0.0]])
    return DistanceMatrix(entries=entries, metric=EUCLIDEAN)


def test_selection_coefficients_hand_computed(small_dist):
    model = build_selection_qubo(small_dist, 2)
    assert model.lam == 30.0
    assert np.allclose(model.linear, [-87.0, -86.0, -85.0])
    assert model.quadratic == {(0, 1): 58.0, (0, 2): 56.0, (1, 2): 54.0}


def test_selection_degenerate_lambda_floor():
    zero = DistanceMatrix(entries=np.zeros((3, 3)), metric=EUCLIDEAN)
    model = build_selection_qubo(zero, 1)
    assert model.lam == 1.0
    assert np.allclose(model.linear, [-1.0, -1.0, -1.0])
    assert all(v == 2.0 for v in model.quadratic.values())


def test_exhaustive_optimum_is_feasible(small_dist):
    model = build_selection_qubo(small_dist, 2)
    best = min(
        ((x0, x1, x2) for x0 in (0, 1) for x1 in (0, 1) for x2 in (0, 1)),
        key=lambda x: energy(model, np.array(x)),
    )
    assert sum(best) == 2


def test_energy_hand_values(small_dist):
    model = build_selection_qubo(small_dist, 2)
    assert energy(model, np.zeros(3)) == 0.0
    assert energy(model, np.array([1, 1, 0])) == -115.0
    assert energy(model, np.array([0, 1, 1])) == -117.0
    with pytest.raises(ValueError):
        energy(model, np.array([1, 0]))


def test_energy_monotone_under_diagonal_shift(small_dist):
    model = build_selection_qubo(small_dist, 2)
    import dataclasses

    shifted = dataclasses.replace(model, linear=model.linear + 4.25)
    for bits in range(8):
        x = np.array([(bits >> 2) & 1, (bits >> 1) & 1, bits & 1])
        assert energy(shifted, x) == pytest.approx(energy(model, x) + 4.25 * x.sum())


def test_suspicion_coefficients():
    # uniform off-diagonal distances: tau_s equals the common value, penalties vanish
    entries = np.full((4, 4), 0.6)
    np.fill_diagonal(entries, 0.0)
    dist = DistanceMatrix(entries=entries, metric="dual")
    model = build_suspicion_qubo(dist, 2, SuspicionConfig())
    assert model.tau_s == pytest.approx(0.6)
    for v in model.quadratic.values():
        assert v == pytest.approx(-2 * 0.6 + 2 * model.lam)

    # a pair at distance zero picks up the full w_s * tau_s repulsion
    entries = np.array(
        [[0.0, 0.0, 0.5, 0.5], [0.0, 0.0, 0.5, 0.5], [0.5, 0.5, 0.0, 0.4], [0.5, 0.5, 0.4, 0.0]]
    )
    dist = DistanceMatrix(entries=entries, metric="dual")
    cfg = SuspicionConfig(percentile_p=10.0, suspicion_weight=10.0)
    model = build_suspicion_qubo(dist, 2, cfg)
    tau = model.tau_s
    base = model.quadratic[(0, 1)] - 2 * model.lam
    assert base == pytest.approx(0.0 + 10.0 * tau)  # -2*0 + w_s*(tau - 0)
    # pairs at or above tau keep the plain incentive
    assert model.quadratic[(0, 2)] - 2 * model.lam == pytest.approx(-1.0)


def test_suspicion_inactive_above_threshold():
    rng = np.random.default_rng(5)
    dist = random_distance_matrix(rng, 6)
    model = build_suspicion_qubo(dist, 4, SuspicionConfig())
    tau = model.tau_s
    for (i, j), v in model.quadratic.items():
        d = dist.entries[i, j]
        if d >= tau:
            assert v == pytest.approx(-2 * d + 2 * model.lam)
        else:
            assert v == pytest.approx(-2 * d + 10.0 * (tau - d) + 2 * model.lam)


def test_repair_noop_remove_and_add(small_dist):
    assert repair_cardinality([1, 0, 1], small_dist, 2) == [0, 2]
    # remove: client 2 has the largest in-selection distance sum (5 > 4 > 3)
    assert repair_cardinality([1, 1, 1], small_dist, 2) == [0, 1]
    # add from empty: ties at zero prefer index 0, then closest to {0} is 1
    assert repair_cardinality([0, 0, 0], small_dist, 2) == [0, 1]


def test_repair_always_returns_m_and_deterministic():
    rng = np.random.default_rng(31)
    for _ in range(25):
        n = int(rng.integers(3, 12))
        dist = random_distance_matrix(rng, n)
        x = rng.integers(0, 2, n)
        m = int(rng.integers(1, n + 1))
        a = repair_cardinality(x, dist, m)
        b = repair_cardinality(x, dist, m)
        assert len(a) == m and a == b
        assert len(set(a)) == m


def test_dump_format(small_dist):
    model = build_selection_qubo(small_dist, 2)
    text = dump_qubo(model)
    lines = text.strip().split("\n")
    assert lines[0].split() == ["3", "2", "30.0"]
    assert lines[1].split()[:2] == ["0", "0"]
    assert len(lines) == 1 + 3 + 3
    # coefficients round-trip through float parsing
    assert float(lines[1].split()[2]) == model.linear[0]
