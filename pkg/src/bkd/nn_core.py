"""Dense ReLU classifier with analytic gradients and momentum SGD.

All arithmetic is float64. Forward, softmax, and the losses are pure
functions and safe to call concurrently on shared read-only parameters;
``sgd_step`` mutates one ``ModelParams`` in place and must have a single
writer.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import RejectedInputError, TrainingFaultError

PROB_CLAMP = 1e-12  # floor applied to probabilities before log

_ACTIVATIONS = ("relu",)


@dataclass(frozen=True)
class Topology:
    """Layer sizes of one classifier network."""

    input_dim: int
    hidden_dims: tuple[int, ...]
    num_classes: int
    activation: str = "relu"

    def __post_init__(self):
        object.__setattr__(self, "hidden_dims", tuple(int(d) for d in self.hidden_dims))
        if self.num_classes < 2:
            raise RejectedInputError(f"num_classes must be >= 2, got {self.num_classes}")
        if self.input_dim < 1:
            raise RejectedInputError(f"input_dim must be >= 1, got {self.input_dim}")
        if any(d < 1 for d in self.hidden_dims):
            raise RejectedInputError(f"hidden dims must be >= 1, got {self.hidden_dims}")
        if self.activation not in _ACTIVATIONS:
            raise RejectedInputError(f"unsupported activation {self.activation!r}")

    @property
    def layer_dims(self) -> tuple[int, ...]:
        return (self.input_dim, *self.hidden_dims, self.num_classes)


@dataclass
class ModelParams:
    """Weights, biases, and momentum buffers of one network."""

    topology: Topology
    weights: list[np.ndarray] = field(repr=False)
    biases: list[np.ndarray] = field(repr=False)
    vel_weights: list[np.ndarray] = field(repr=False)
    vel_biases: list[np.ndarray] = field(repr=False)
    rng_seed: int = 0

    @property
    def n_layers(self) -> int:
        return len(self.weights)


class ForwardCache(NamedTuple):
    """Per-layer inputs and hidden pre-activations saved for backward."""

    inputs: list[np.ndarray]
    preacts: list[np.ndarray]


class Gradients(NamedTuple):
    weights: list[np.ndarray]
    biases: list[np.ndarray]


def init_params(topology: Topology, seed: int) -> ModelParams:
    """Initialize weights uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)], biases zero."""
    rng = np.random.default_rng(seed)
    dims = topology.layer_dims
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        scale = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-scale, scale, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return ModelParams(
        topology=topology,
        weights=weights,
        biases=biases,
        vel_weights=[np.zeros_like(w) for w in weights],
        vel_biases=[np.zeros_like(b) for b in biases],
        rng_seed=int(seed),
    )


def _as_logits(logits, name: str = "logits") -> np.ndarray:
    arr = np.asarray(logits, dtype=np.float64)
    if arr.ndim != 2:
        raise RejectedInputError(f"{name} must be 2-D (batch x classes), got shape {arr.shape}")
    return arr


def _as_labels(labels, batch: int, num_classes: int) -> np.ndarray:
    arr = np.asarray(labels)
    if arr.ndim != 1 or arr.shape[0] != batch:
        raise RejectedInputError(f"labels must be 1-D of length {batch}, got shape {arr.shape}")
    if arr.size and (not np.issubdtype(arr.dtype, np.integer) or arr.min() < 0 or arr.max() >= num_classes):
        raise RejectedInputError(f"labels must be integers in [0, {num_classes})")
    return arr.astype(np.int64)


def forward(params: ModelParams, features) -> tuple[np.ndarray, ForwardCache]:
    """Run the network on a batch; returns logits and the cache for backward."""
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != params.topology.input_dim:
        raise RejectedInputError(
            f"features must be (batch, {params.topology.input_dim}), got shape {x.shape}"
        )
    inputs, preacts = [], []
    h = x
    last = params.n_layers - 1
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        inputs.append(h)
        z = h @ w + b
        if i < last:
            preacts.append(z)
            h = np.maximum(z, 0.0)
        else:
            h = z
    return h, ForwardCache(inputs=inputs, preacts=preacts)


def softmax(logits) -> np.ndarray:
    """Row-wise softmax with max-subtraction for numerical stability."""
    arr = _as_logits(logits)
    if not np.all(np.isfinite(arr)):
        raise RejectedInputError("logits must be finite")
    z = arr - arr.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def cross_entropy(logits, labels) -> tuple[float, np.ndarray]:
    """Mean negative log-likelihood of the given labels.

    Returns the scalar loss and its gradient with respect to the logits
    (softmax minus one-hot, divided by the batch size).
    """
    arr = _as_logits(logits)
    n = arr.shape[0]
    if n == 0:
        raise RejectedInputError("cross_entropy needs at least one sample")
    y = _as_labels(labels, n, arr.shape[1])
    probs = softmax(arr)
    rows = np.arange(n)
    loss = float(np.mean(-np.log(np.maximum(probs[rows, y], PROB_CLAMP))))
    grad = probs.copy()
    grad[rows, y] -= 1.0
    grad /= n
    return loss, grad


def backward(params: ModelParams, cache: ForwardCache, grad_logits) -> Gradients:
    """Backpropagate a logits gradient to every weight and bias."""
    g = np.asarray(grad_logits, dtype=np.float64)
    if len(cache.inputs) != params.n_layers or len(cache.preacts) != params.n_layers - 1:
        raise RejectedInputError("cache does not match the parameter layer count")
    batch = cache.inputs[0].shape[0]
    if g.shape != (batch, params.topology.num_classes):
        raise RejectedInputError(
            f"grad_logits must be ({batch}, {params.topology.num_classes}), got {g.shape}"
        )
    for i, (w, h) in enumerate(zip(params.weights, cache.inputs)):
        if h.shape != (batch, w.shape[0]):
            raise RejectedInputError(f"cached input {i} does not match weight shape {w.shape}")
    grad_w: list[np.ndarray] = [None] * params.n_layers  # type: ignore[list-item]
    grad_b: list[np.ndarray] = [None] * params.n_layers  # type: ignore[list-item]
    for i in range(params.n_layers - 1, -1, -1):
        grad_w[i] = cache.inputs[i].T @ g
        grad_b[i] = g.sum(axis=0)
        if i > 0:
            g = (g @ params.weights[i].T) * (cache.preacts[i - 1] > 0)
    return Gradients(weights=grad_w, biases=grad_b)


def sgd_step(params: ModelParams, grads: Gradients, lr: float, momentum: float,
             weight_decay: float) -> ModelParams:
    """Momentum SGD update, in place.

    buffer <- momentum * buffer + grad + weight_decay * param (weights only;
    biases are not decayed), then param <- param - lr * buffer.
    """
    if not (np.isfinite(lr) and lr > 0):
        raise RejectedInputError(f"lr must be positive and finite, got {lr}")
    if not (0.0 <= momentum < 1.0):
        raise RejectedInputError(f"momentum must be in [0, 1), got {momentum}")
    if not (np.isfinite(weight_decay) and weight_decay >= 0):
        raise RejectedInputError(f"weight_decay must be >= 0, got {weight_decay}")
    if len(grads.weights) != params.n_layers or len(grads.biases) != params.n_layers:
        raise RejectedInputError("gradient layer count does not match params")
    for gw, gb, w, b in zip(grads.weights, grads.biases, params.weights, params.biases):
        if gw.shape != w.shape or gb.shape != b.shape:
            raise RejectedInputError("gradient shapes do not match params")
        if not (np.all(np.isfinite(gw)) and np.all(np.isfinite(gb))):
            raise TrainingFaultError("non-finite gradient")
    for i in range(params.n_layers):
        params.vel_weights[i] *= momentum
        params.vel_weights[i] += grads.weights[i] + weight_decay * params.weights[i]
        params.weights[i] -= lr * params.vel_weights[i]
        params.vel_biases[i] *= momentum
        params.vel_biases[i] += grads.biases[i]
        params.biases[i] -= lr * params.vel_biases[i]
    return params


def predict_probs(params: ModelParams, features, batch_size: int = 512) -> np.ndarray:
    """Class probabilities for a full feature matrix, evaluated in batches."""
    x = np.asarray(features, dtype=np.float64)
    if x.shape[0] == 0:
        return np.zeros((0, params.topology.num_classes))
    chunks = []
    for start in range(0, x.shape[0], batch_size):
        logits, _ = forward(params, x[start:start + batch_size])
        chunks.append(softmax(logits))
    return np.concatenate(chunks, axis=0)
