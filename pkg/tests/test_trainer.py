import struct

import numpy as np
import pytest

from fedanneal.core import GlobalModel
from fedanneal.trainer import (
    TrainerConfig,
    evaluate_loss,
    init_params,
    local_train_step,
    param_count,
    read_idx_images,
    read_idx_labels,
    synthetic_blobs,
)

SMALL = TrainerConfig(layers=(8, 16, 4), classes=4, batch_size=8, epochs=1)


def _model(cfg, seed=0, eta=0.05):
    rng = np.random.default_rng(seed)
    return GlobalModel(weights=init_params(cfg.layers, rng), eta=eta)


def test_param_count():
    assert param_count((784, 200, 10)) == 784 * 200 + 200 + 200 * 10 + 10


def test_zero_learning_rate_returns_zero_update():
    x, y = synthetic_blobs(64, 8, 4, seed=1)
    update = local_train_step(_model(SMALL), SMALL, (x, y), lr=0.0)
    assert not update.values.any()


def test_gradient_clipping_bounds_step_sizes():
    x, y = synthetic_blobs(64, 8, 4, seed=2)
    x = x * 50.0  # force large raw gradients
    model = _model(SMALL, eta=1.0)
    cfg = TrainerConfig(layers=(8, 16, 4), classes=4, batch_size=64, epochs=1)
    update = local_train_step(model, cfg, (x, y))
    # single batch, lr 1.0: the update is exactly one clipped gradient step
    assert np.linalg.norm(update.values) <= cfg.grad_clip_norm + 1e-9


def test_loss_decreases_on_separable_blobs():
    x, y = synthetic_blobs(256, 8, 4, seed=3)
    model = _model(SMALL, eta=0.1)
    before = evaluate_loss(model.weights, SMALL, x, y)
    w = model
    rng = np.random.default_rng(5)
    for _ in range(20):
        delta = local_train_step(w, SMALL, (x, y), rng=rng)
        w = GlobalModel(weights=w.weights + delta.values, eta=w.eta)
    after = evaluate_loss(w.weights, SMALL, x, y)
    assert after < before


def test_dimension_mismatch_rejected():
    x, y = synthetic_blobs(16, 8, 4, seed=4)
    with pytest.raises(ValueError, match="model dimension"):
        local_train_step(GlobalModel(weights=np.zeros(10), eta=0.1), SMALL, (x, y))


def test_label_flip_changes_training_signal():
    x, y = synthetic_blobs(128, 8, 4, seed=6)
    model = _model(SMALL, eta=0.05)
    honest = local_train_step(model, SMALL, (x, y), rng=np.random.default_rng(1))
    flipped = local_train_step(model, SMALL, (x, y), flip_labels=True,
                               rng=np.random.default_rng(1))
    assert not np.allclose(honest.values, flipped.values)


def test_idx_round_trip(tmp_path):
    images = (np.arange(2 * 4 * 4) % 256).astype(np.uint8)
    img_path = tmp_path / "images.idx"
    with open(img_path, "wb") as fh:
        fh.write(struct.pack(">IIII", 0x00000803, 2, 4, 4))
        fh.write(images.tobytes())
    labels = np.array([3, 7], dtype=np.uint8)
    lab_path = tmp_path / "labels.idx"
    with open(lab_path, "wb") as fh:
        fh.write(struct.pack(">II", 0x00000801, 2))
        fh.write(labels.tobytes())

    x = read_idx_images(img_path)
    assert x.shape == (2, 16)
    assert x.max() <= 1.0 and x.min() >= 0.0
    assert read_idx_labels(lab_path).tolist() == [3, 7]


def test_idx_bad_magic_rejected(tmp_path):
    path = tmp_path / "bad.idx"
    with open(path, "wb") as fh:
        fh.write(struct.pack(">IIII", 0x00000999, 1, 2, 2))
        fh.write(bytes(4))
    with pytest.raises(ValueError, match="magic"):
        read_idx_images(path)
