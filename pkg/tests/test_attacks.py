import numpy as np
import pytest

from fedanneal.attacks import ATTACK_NAMES, AttackKind, AttackSpec, generate
from fedanneal.core import GradientVector, HonestStats


def _stats(mu, sigma):
    return HonestStats(mu=np.asarray(mu, dtype=float), sigma=np.asarray(sigma, dtype=float))


POOL = [GradientVector(np.arange(4.0))]


def test_thirteen_kinds_registered():
    assert len(ATTACK_NAMES) == 13
    assert "alie" in ATTACK_NAMES and "label_flip" in ATTACK_NAMES


def test_sign_flip_negates_mean():
    out = generate(AttackSpec(kind="sign_flip"), _stats([1, -2, 3], [1, 1, 1]), 2,
                   [GradientVector(np.zeros(3))])
    for g in out:
        assert np.allclose(g.values, [-1, 2, -3])


def test_lie_same_value_clustered_formulas():
    out = generate(AttackSpec(kind="lie", z_max=1.0), _stats([0, 0], [1, 2]), 1,
                   [GradientVector(np.zeros(2))])
    assert np.allclose(out[0].values, [-1, -2])

    out = generate(AttackSpec(kind="same_value"), _stats([1, 1], [0.5, 0.5]), 1,
                   [GradientVector(np.zeros(2))])
    assert np.allclose(out[0].values, [2.5, 2.5])

    out = generate(AttackSpec(kind="clustered"), _stats([0, 0, 0], [1, 1, 1]), 3,
                   [GradientVector(np.zeros(3))])
    for g in out:
        assert np.allclose(g.values, [6, 6, 6])  # mu + 2 * f * sigma


def test_scale_centers_on_scaled_mean():
    mu = np.array([1.0, -1.0])
    out = generate(AttackSpec(kind="scale", seed=5), _stats(mu, [0.1, 0.1]), 200,
                   [GradientVector(np.zeros(2))])
    stacked = np.stack([g.values for g in out])
    assert np.allclose(stacked.mean(axis=0), 10 * mu, atol=0.05)
    assert np.std(stacked[:, 0]) == pytest.approx(0.1, rel=0.25)


def test_alie_statistics_monte_carlo():
    d = 100_000
    stats = _stats(np.zeros(d), np.ones(d))
    out = generate(AttackSpec(kind="alie", seed=71), stats, 1, [GradientVector(np.zeros(d))])
    dev = out[0].values - stats.mu
    modified = dev != 0
    frac = modified.mean()
    assert abs(frac - 0.2) <= 0.01
    neg_frac = (dev[modified] < 0).mean()
    assert abs(neg_frac - 0.7) <= 0.02
    # modified magnitudes are a per-client constant z * sigma with z in [3, 8]
    mags = np.unique(np.round(np.abs(dev[modified]), 10))
    assert len(mags) == 1 and 3.0 <= mags[0] <= 8.0


def test_sparse_lie_hits_exactly_top_sigma_coordinates():
    d = 100
    sigma = np.linspace(2.0, 1.0, d)  # strictly decreasing
    stats = _stats(np.zeros(d), sigma)
    out = generate(AttackSpec(kind="sparse_lie", seed=3), stats, 2, [GradientVector(np.zeros(d))])
    for g in out:
        modified = np.nonzero(g.values != stats.mu)[0]
        assert modified.tolist() == [0, 1, 2, 3, 4]
        assert (g.values[5:] == stats.mu[5:]).all()
        z = -g.values[0] / sigma[0]
        assert 5.0 <= z <= 15.0
        assert np.allclose(g.values[modified], -z * sigma[modified])


def test_sparse_count_floor():
    stats = _stats(np.zeros(5), np.arange(5.0, 0.0, -1.0))
    out = generate(AttackSpec(kind="sparse_lie", seed=1), stats, 1, [GradientVector(np.zeros(5))])
    assert (out[0].values != 0).sum() == 1  # max(1, floor(0.05 * 5))


def test_stealthy_deviation_std():
    d = 100_000
    stats = _stats(np.zeros(d), np.ones(d))
    out = generate(AttackSpec(kind="stealthy", seed=13), stats, 1, [GradientVector(np.zeros(d))])
    dev = out[0].values
    se = 0.05 / np.sqrt(2 * d)
    assert abs(dev.std() - 0.05) <= 3 * se


def test_targeted_modifies_about_ten_percent():
    d = 50_000
    stats = _stats(np.zeros(d), np.ones(d))
    out = generate(AttackSpec(kind="targeted", seed=2), stats, 1, [GradientVector(np.zeros(d))])
    modified = out[0].values != 0
    assert abs(modified.mean() - 0.1) < 0.01
    assert np.allclose(out[0].values[modified], 5.0)


def test_blatant_lie_shape():
    d = 20_000
    stats = _stats(np.zeros(d), np.ones(d))
    out = generate(AttackSpec(kind="blatant_lie", seed=4), stats, 6, [GradientVector(np.zeros(d))])
    for g in out:
        center = np.median(np.abs(g.values))
        # the deterministic part is +/- z * sigma with z in (1.75, 3.25)
        assert 1.5 <= center <= 3.5


def test_shuffle_permutes_a_pool_member():
    pool = [GradientVector(np.arange(8.0)), GradientVector(np.arange(8.0) * -1)]
    stats = _stats(np.zeros(8), np.ones(8))
    out = generate(AttackSpec(kind="shuffle", seed=6), stats, 3, pool)
    for g in out:
        assert sorted(g.values.tolist()) in (
            sorted(pool[0].values.tolist()), sorted(pool[1].values.tolist()))


def test_gaussian_independent_per_client():
    stats = _stats(np.zeros(10), np.ones(10))
    out = generate(AttackSpec(kind="gaussian_noise", seed=8), stats, 3,
                   [GradientVector(np.zeros(10))])
    assert not np.allclose(out[0].values, out[1].values)


def test_identical_vs_independent_contract():
    stats = _stats(np.zeros(16), np.ones(16))
    pool = [GradientVector(np.zeros(16))]
    for kind in ("sign_flip", "same_value", "clustered", "lie"):
        out = generate(AttackSpec(kind=kind, seed=9), stats, 3, pool)
        assert all(np.array_equal(out[0].values, g.values) for g in out)
    for kind in ("alie", "blatant_lie", "gaussian_noise"):
        out = generate(AttackSpec(kind=kind, seed=9), stats, 3, pool)
        assert not np.array_equal(out[0].values, out[1].values)


def test_determinism_same_seed():
    stats = _stats(np.zeros(32), np.ones(32))
    pool = [GradientVector(np.ones(32))]
    for kind in ATTACK_NAMES:
        if kind == "label_flip":
            continue
        a = generate(AttackSpec(kind=kind, seed=123), stats, 2, pool)
        b = generate(AttackSpec(kind=kind, seed=123), stats, 2, pool)
        for ga, gb in zip(a, b):
            assert np.array_equal(ga.values, gb.values)


def test_label_flip_refuses_synthetic_path():
    stats = _stats(np.zeros(4), np.ones(4))
    with pytest.raises(ValueError, match="trainer backend"):
        generate(AttackSpec(kind="label_flip"), stats, 1, POOL)


def test_unknown_kind_rejected():
    with pytest.raises(ValueError):
        AttackSpec(kind="gradient_eater")
