"""Optional tiny-MLP training backend and IDX dataset ingestion.

Provides a real (if small) gradient source for experiments: a fully
connected ReLU network trained with plain SGD, weight decay, and per-step
gradient clipping. The label-flip attack lives here because it poisons
training data rather than applying a closed-form perturbation.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .core import GlobalModel, GradientVector

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801


@dataclass(frozen=True)
class TrainerConfig:
    layers: tuple[int, ...] = (784, 200, 10)
    dataset: str = "synthetic_blobs"  # or "idx_files"
    classes: int = 10
    batch_size: int = 32
    epochs: int = 1
    weight_decay: float = 1e-4
    grad_clip_norm: float = 1.0

    def __post_init__(self):
        if len(self.layers) < 2 or any(s < 1 for s in self.layers):
            raise ValueError("layers must be at least (in, out) with positive sizes")
        if self.classes != self.layers[-1]:
            raise ValueError("last layer size must equal the class count")
        if self.dataset not in ("synthetic_blobs", "idx_files"):
            raise ValueError("dataset must be synthetic_blobs or idx_files")


def param_count(layers: tuple[int, ...]) -> int:
    return sum((fan_in + 1) * fan_out for fan_in, fan_out in zip(layers, layers[1:]))


def init_params(layers: tuple[int, ...], rng: np.random.Generator) -> np.ndarray:
    chunks = []
    for fan_in, fan_out in zip(layers, layers[1:]):
        scale = np.sqrt(2.0 / fan_in)
        chunks.append(rng.normal(0.0, scale, fan_in * fan_out))
        chunks.append(np.zeros(fan_out))
    return np.concatenate(chunks)


def _unpack(flat: np.ndarray, layers: tuple[int, ...]):
    mats, pos = [], 0
    for fan_in, fan_out in zip(layers, layers[1:]):
        w = flat[pos : pos + fan_in * fan_out].reshape(fan_in, fan_out)
        pos += fan_in * fan_out
        b = flat[pos : pos + fan_out]
        pos += fan_out
        mats.append((w, b))
    return mats


def _loss_and_grad(flat: np.ndarray, layers, x: np.ndarray, y: np.ndarray):
    """Mean softmax cross-entropy over the batch and its flat gradient."""
    params = _unpack(flat, layers)
    activations = [x]
    a = x
    for idx, (w, b) in enumerate(params):
        z = a @ w + b
        a = np.maximum(z, 0.0) if idx < len(params) - 1 else z
        activations.append(a)
    logits = activations[-1]
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    probs = exp / exp.sum(axis=1, keepdims=True)
    batch = x.shape[0]
    loss = -np.log(probs[np.arange(batch), y] + 1e-12).mean()

    grad_chunks = [None] * len(params)
    delta = probs
    delta[np.arange(batch), y] -= 1.0
    delta /= batch
    for idx in range(len(params) - 1, -1, -1):
        w, _ = params[idx]
        a_prev = activations[idx]
        gw = a_prev.T @ delta
        gb = delta.sum(axis=0)
        grad_chunks[idx] = (gw, gb)
        if idx > 0:
            delta = (delta @ w.T) * (activations[idx] > 0.0)
    flat_grad = np.concatenate([np.concatenate([gw.ravel(), gb]) for gw, gb in grad_chunks])
    return loss, flat_grad


def evaluate_loss(flat: np.ndarray, trainer: TrainerConfig, x: np.ndarray, y: np.ndarray) -> float:
    loss, _ = _loss_and_grad(flat, trainer.layers, x, y)
    return float(loss)


def local_train_step(
    model: GlobalModel,
    trainer: TrainerConfig,
    shard: tuple[np.ndarray, np.ndarray],
    flip_labels: bool = False,
    rng: np.random.Generator | None = None,
    lr: float | None = None,
) -> GradientVector:
    """Run the client's local SGD pass and return the weight delta W' - W.

    Each minibatch gradient gets weight decay added and is clipped to
    `grad_clip_norm` before the step. `flip_labels` trains on
    y' = (y + 1) mod C, which is the label-flip poisoning path.
    """
    x, y = shard
    if x.shape[0] == 0:
        raise ValueError("client shard is empty")
    expected = param_count(trainer.layers)
    if model.weights.shape[0] != expected:
        raise ValueError(
            f"model dimension {model.weights.shape[0]} != {expected} for layers {trainer.layers}"
        )
    if flip_labels:
        y = (y + 1) % trainer.classes
    rng = rng or np.random.default_rng(0)
    step = model.eta if lr is None else lr
    w = model.weights.copy()
    n = x.shape[0]
    for _ in range(trainer.epochs):
        order = rng.permutation(n)
        for start in range(0, n, trainer.batch_size):
            idx = order[start : start + trainer.batch_size]
            _, grad = _loss_and_grad(w, trainer.layers, x[idx], y[idx])
            grad += trainer.weight_decay * w
            norm = np.linalg.norm(grad)
            if norm > trainer.grad_clip_norm:
                grad *= trainer.grad_clip_norm / norm
            w -= step * grad
    return GradientVector(w - model.weights)


def synthetic_blobs(
    n_samples: int, dim: int, classes: int, seed: int, spread: float = 3.0
) -> tuple[np.ndarray, np.ndarray]:
    """Linearly separable Gaussian blobs, one center per class."""
    rng = np.random.default_rng(np.random.SeedSequence([seed & (2**63 - 1), 7]))
    centers = rng.normal(0.0, spread, (classes, dim))
    y = rng.integers(0, classes, n_samples)
    x = centers[y] + rng.normal(0.0, 1.0, (n_samples, dim))
    return x, y


def read_idx_images(path) -> np.ndarray:
    """Big-endian IDX image file -> (count, rows*cols) floats in [0, 1]."""
    with open(path, "rb") as fh:
        magic, count, rows, cols = struct.unpack(">IIII", fh.read(16))
        if magic != IDX_IMAGES_MAGIC:
            raise ValueError(f"bad IDX image magic 0x{magic:08x}")
        data = np.frombuffer(fh.read(count * rows * cols), dtype=np.uint8)
    return data.reshape(count, rows * cols).astype(np.float64) / 255.0


def read_idx_labels(path) -> np.ndarray:
    with open(path, "rb") as fh:
        magic, count = struct.unpack(">II", fh.read(8))
        if magic != IDX_LABELS_MAGIC:
            raise ValueError(f"bad IDX label magic 0x{magic:08x}")
        data = np.frombuffer(fh.read(count), dtype=np.uint8)
    return data.astype(np.int64)
