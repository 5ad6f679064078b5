"""Feed-forward goal classifier built from scratch on numpy.

Dense layers with ReLU hidden activations and a softmax output, categorical
cross-entropy, inverted dropout on hidden layers, hand-written
backpropagation, and bias-corrected Adam. All math runs at double precision
so gradient checks are meaningful, and training is deterministic given its
seed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

MODEL_FORMAT = "goalrec-mlp"
MODEL_VERSION = 1


@dataclass
class MlpModel:
    """Layer parameters: weights[i] is (fan_in, fan_out), biases[i] is (fan_out,).

    Hidden layers use ReLU, the final layer softmax. ``drop_rates`` holds one
    inverted-dropout probability per hidden layer; the output layer is never
    masked.
    """

    weights: list[np.ndarray]
    biases: list[np.ndarray]
    drop_rates: list[float] = field(default_factory=list)

    def __post_init__(self):
        if not self.weights:
            raise ValueError("model needs at least one layer")
        if len(self.weights) != len(self.biases):
            raise ValueError("weights and biases must pair up")
        for w, b in zip(self.weights, self.biases):
            if w.shape[1] != b.shape[0]:
                raise ValueError("bias shape must match layer fan_out")
        for w_out, w_in in zip(self.weights, self.weights[1:]):
            if w_out.shape[1] != w_in.shape[0]:
                raise ValueError("consecutive layer dimensions must chain")
        if not self.drop_rates:
            self.drop_rates = [0.0] * (len(self.weights) - 1)
        if len(self.drop_rates) != len(self.weights) - 1:
            raise ValueError("need one drop rate per hidden layer")
        if any(not 0.0 <= p < 1.0 for p in self.drop_rates):
            raise ValueError("drop rates must be in [0, 1)")

    @property
    def layer_sizes(self) -> list[int]:
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]


def init_model(layer_sizes: Sequence[int], seed: int = 0, drop_rate: float = 0.0) -> MlpModel:
    """Glorot-uniform weights, zero biases; deterministic per seed."""
    if len(layer_sizes) < 2:
        raise ValueError("need at least an input and an output size")
    if any(s <= 0 for s in layer_sizes):
        raise ValueError("layer sizes must be positive")
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(layer_sizes, layer_sizes[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return MlpModel(weights, biases, [drop_rate] * (len(weights) - 1))


def _softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def _forward_cache(model: MlpModel, X: np.ndarray, train: bool, rng):
    """Run the network, keeping layer inputs and masks for backprop.

    Returns (inputs, relu_masks, drop_masks, probs) where inputs[i] is what
    layer i consumed (post-dropout for hidden outputs).
    """
    a = X
    inputs = [a]
    relu_masks = []
    drop_masks = []
    n_layers = len(model.weights)
    for i in range(n_layers - 1):
        z = a @ model.weights[i] + model.biases[i]
        relu_masks.append(z > 0)
        a = np.maximum(z, 0.0)
        p = model.drop_rates[i]
        if train and p > 0.0:
            if rng is None:
                raise ValueError("training-mode forward needs an rng for dropout")
            mask = (rng.random(a.shape) >= p) / (1.0 - p)
            a = a * mask
            drop_masks.append(mask)
        else:
            drop_masks.append(None)
        inputs.append(a)
    probs = _softmax(a @ model.weights[-1] + model.biases[-1])
    return inputs, relu_masks, drop_masks, probs


def forward(model: MlpModel, features: np.ndarray, train: bool = False, rng=None) -> np.ndarray:
    """Per-goal probabilities for one feature vector or a batch.

    Train mode applies inverted dropout to hidden activations (kept units are
    scaled by 1/(1-p)); inference applies no mask.
    """
    X = np.asarray(features, dtype=float)
    single = X.ndim == 1
    if single:
        X = X[None, :]
    if X.shape[1] != model.weights[0].shape[0]:
        raise ValueError(
            f"feature length {X.shape[1]} does not match input size {model.weights[0].shape[0]}"
        )
    probs = _forward_cache(model, X, train, rng)[3]
    return probs[0] if single else probs


def cross_entropy(probs: np.ndarray, labels: np.ndarray) -> float:
    """Mean categorical cross-entropy, input clamped at 1e-12."""
    probs = np.atleast_2d(probs)
    labels = np.atleast_1d(labels)
    picked = probs[np.arange(len(labels)), labels]
    return float(-np.log(np.maximum(picked, 1e-12)).mean())


def backward(
    model: MlpModel,
    features: np.ndarray,
    labels: np.ndarray,
    train: bool = False,
    rng=None,
):
    """Exact gradients of mean cross-entropy, plus the forward probabilities.

    Gradients flow through the ReLU and dropout masks of this same forward
    pass; the output-layer error is the classic softmax-minus-onehot signal.
    Returns (grad_weights, grad_biases, probs).
    """
    X = np.atleast_2d(np.asarray(features, dtype=float))
    y = np.atleast_1d(labels)
    if X.shape[1] != model.weights[0].shape[0]:
        raise ValueError("feature length does not match the input layer")
    inputs, relu_masks, drop_masks, probs = _forward_cache(model, X, train, rng)
    n = X.shape[0]
    one_hot = np.zeros_like(probs)
    one_hot[np.arange(n), y] = 1.0
    delta = (probs - one_hot) / n
    grad_w = [None] * len(model.weights)
    grad_b = [None] * len(model.biases)
    for i in range(len(model.weights) - 1, -1, -1):
        grad_w[i] = inputs[i].T @ delta
        grad_b[i] = delta.sum(axis=0)
        if i > 0:
            upstream = delta @ model.weights[i].T
            if drop_masks[i - 1] is not None:
                upstream = upstream * drop_masks[i - 1]
            delta = upstream * relu_masks[i - 1]
    return grad_w, grad_b, probs


@dataclass
class AdamState:
    """Bias-corrected Adam: first/second moment accumulators and step count."""

    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)
    t: int = 0

    @classmethod
    def for_params(cls, params: Sequence[np.ndarray], **kwargs) -> "AdamState":
        state = cls(**kwargs)
        state.m = [np.zeros_like(p) for p in params]
        state.v = [np.zeros_like(p) for p in params]
        return state


def adam_step(state: AdamState, params: Sequence[np.ndarray], grads: Sequence[np.ndarray]) -> None:
    """One in-place Adam update over a flat list of parameter arrays."""
    if len(params) != len(state.m) or len(params) != len(grads):
        raise ValueError("params, grads, and Adam accumulators must align")
    state.t += 1
    correct1 = 1.0 - state.beta1**state.t
    correct2 = 1.0 - state.beta2**state.t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        if p.shape != g.shape:
            raise ValueError("gradient shape does not match its parameter")
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * np.square(g)
        p -= state.lr * (m / correct1) / (np.sqrt(v / correct2) + state.eps)


@dataclass
class TrainConfig:
    epochs: int = 15
    batch_size: int = 32
    seed: int = 0
    drop_rate: float | None = None  # None keeps the model's own rates

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be at least 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be at least 1")


def train(
    model: MlpModel,
    features: np.ndarray,
    labels: np.ndarray,
    config: TrainConfig = TrainConfig(),
    adam: AdamState | None = None,
) -> tuple[MlpModel, list[float]]:
    """Seeded minibatch training; returns the model and per-epoch mean loss.

    Inputs are reshuffled each epoch with the seeded generator, gradients are
    averaged within a batch, and the whole run is deterministic given
    (dataset, config).
    """
    X = np.asarray(features, dtype=float)
    y = np.asarray(labels)
    if X.ndim != 2 or len(X) == 0:
        raise ValueError("need a non-empty 2D feature matrix")
    if len(X) != len(y):
        raise ValueError("features and labels must align")
    if config.drop_rate is not None:
        model.drop_rates = [config.drop_rate] * (len(model.weights) - 1)
    rng = np.random.default_rng(config.seed)
    params = model.weights + model.biases
    state = adam if adam is not None else AdamState.for_params(params)
    if not state.m:
        state.m = [np.zeros_like(p) for p in params]
        state.v = [np.zeros_like(p) for p in params]
    losses = []
    n = len(X)
    for _ in range(config.epochs):
        order = rng.permutation(n)
        epoch_loss = 0.0
        for lo in range(0, n, config.batch_size):
            batch = order[lo : lo + config.batch_size]
            grad_w, grad_b, probs = backward(model, X[batch], y[batch], train=True, rng=rng)
            epoch_loss += cross_entropy(probs, y[batch]) * len(batch)
            adam_step(state, params, grad_w + grad_b)
        losses.append(epoch_loss / n)
    return model, losses


def predict_goal(probs: np.ndarray, rng: np.random.Generator) -> int:
    """Top-1 goal; exact-probability ties resolved by a uniform draw."""
    probs = np.asarray(probs)
    best = probs.max()
    tied = np.flatnonzero(probs == best)
    if len(tied) == 1:
        return int(tied[0])
    return int(rng.choice(tied))


# ---------------------------------------------------------------------------
# Serialization: versioned JSON; python float repr round-trips bit-exactly
# ---------------------------------------------------------------------------

def save_model(model: MlpModel, path, train_seed: int | None = None, extra: dict | None = None):
    payload = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "layer_sizes": model.layer_sizes,
        "weights": [w.tolist() for w in model.weights],
        "biases": [b.tolist() for b in model.biases],
        "drop_rates": list(model.drop_rates),
        "train_seed": train_seed,
        "extra": extra or {},
    }
    with open(path, "w") as fp:
        json.dump(payload, fp)


def load_model(path) -> tuple[MlpModel, dict]:
    """Load a saved model; returns (model, metadata with train_seed/extra)."""
    with open(path) as fp:
        payload = json.load(fp)
    if payload.get("format") != MODEL_FORMAT:
        raise ValueError(f"{path} is not a saved model file")
    if payload.get("version") != MODEL_VERSION:
        raise ValueError(f"unsupported model version {payload.get('version')}")
    model = MlpModel(
        weights=[np.array(w, dtype=float) for w in payload["weights"]],
        biases=[np.array(b, dtype=float) for b in payload["biases"]],
        drop_rates=list(payload["drop_rates"]),
    )
    meta = {"train_seed": payload.get("train_seed"), "extra": payload.get("extra", {})}
    return model, meta


class MlpGoalClassifier(BaseEstimator):
    """sklearn-style wrapper around the from-scratch network.

    fit(X, y) trains a fresh model whose architecture is [n_features,
    *hidden_layer_sizes, n_classes]; predict_proba runs inference-mode
    forward passes. Fully deterministic given ``random_state``.
    """

    def __init__(
        self,
        hidden_layer_sizes: tuple[int, ...] = (200, 200, 200, 200),
        n_classes: int | None = None,
        epochs: int = 15,
        batch_size: int = 32,
        learning_rate: float = 0.001,
        beta1: float = 0.9,
        beta2: float = 0.999,
        drop_rate: float = 0.1,
        random_state: int = 0,
    ):
        self.hidden_layer_sizes = hidden_layer_sizes
        self.n_classes = n_classes
        self.epochs = epochs
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.drop_rate = drop_rate
        self.random_state = random_state

    def fit(self, X, y):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=int)
        if X.ndim != 2 or len(X) == 0:
            raise ValueError("need a non-empty 2D feature matrix")
        self.n_classes_ = self.n_classes if self.n_classes is not None else int(y.max()) + 1
        init_seed, train_seed = (
            int(s) for s in np.random.SeedSequence(self.random_state).generate_state(2)
        )
        model = init_model(
            [X.shape[1], *self.hidden_layer_sizes, self.n_classes_],
            seed=init_seed,
            drop_rate=self.drop_rate,
        )
        params = model.weights + model.biases
        adam = AdamState.for_params(
            params, lr=self.learning_rate, beta1=self.beta1, beta2=self.beta2
        )
        config = TrainConfig(epochs=self.epochs, batch_size=self.batch_size, seed=train_seed)
        self.model_, self.loss_trace_ = train(model, X, y, config, adam=adam)
        return self

    def _check_fitted(self):
        if not hasattr(self, "model_"):
            raise NotFittedError("call fit() before predicting")

    def predict_proba(self, X) -> np.ndarray:
        self._check_fitted()
        return np.atleast_2d(forward(self.model_, np.asarray(X, dtype=float)))

    def predict(self, X) -> np.ndarray:
        rng = np.random.default_rng(self.random_state)
        probs = self.predict_proba(X)
        return np.array([predict_goal(row, rng) for row in probs])
