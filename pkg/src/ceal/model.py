"""Softmax classifier with analytic gradients and mini-batch SGD.

Multinomial logistic regression by default; optionally one hidden ReLU
layer. Everything is plain numpy and deterministic given the seeds, so
training runs are reproducible bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

LOG_PROB_FLOOR = -50.0


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters for one sgd_finetune call."""

    learning_rate: float = 0.05
    epochs: int = 5
    batch_size: int = 32
    seed: int = 0

    def __post_init__(self) -> None:
        # 0 is allowed as the degenerate no-op step size
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be non-negative")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


@dataclass
class ModelParams:
    """Weights and biases, ordered input -> output.

    Each layer is a (weight, bias) pair with weight shaped (out, in).
    Hidden layers use ReLU; the final pre-activations feed the softmax.
    """

    layers: list[tuple[np.ndarray, np.ndarray]]
    class_count: int
    input_dim: int

    def __post_init__(self) -> None:
        if not self.layers:
            raise ValueError("at least one layer required")
        expected_in = self.input_dim
        for i, (w, b) in enumerate(self.layers):
            if w.ndim != 2 or b.ndim != 1 or w.shape[0] != b.shape[0]:
                raise ValueError(f"layer {i}: weight/bias shapes inconsistent")
            if w.shape[1] != expected_in:
                raise ValueError(
                    f"layer {i}: expected input size {expected_in}, got {w.shape[1]}"
                )
            expected_in = w.shape[0]
        if expected_in != self.class_count:
            raise ValueError("last layer output size must equal class_count")
        for w, b in self.layers:
            if not (np.isfinite(w).all() and np.isfinite(b).all()):
                raise ValueError("non-finite parameter entry")

    def copy(self) -> "ModelParams":
        return ModelParams(
            layers=[(w.copy(), b.copy()) for w, b in self.layers],
            class_count=self.class_count,
            input_dim=self.input_dim,
        )


def init_params(
    input_dim: int,
    class_count: int,
    hidden_size: int | None = None,
    seed: int = 0,
) -> ModelParams:
    """Fresh parameters: weights ~ uniform(-0.05, 0.05), biases zero."""
    rng = np.random.default_rng(seed)
    sizes = [input_dim] + ([hidden_size] if hidden_size else []) + [class_count]
    layers = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        w = rng.uniform(-0.05, 0.05, size=(fan_out, fan_in))
        layers.append((w, np.zeros(fan_out)))
    return ModelParams(layers=layers, class_count=class_count, input_dim=input_dim)


def _softmax(z: np.ndarray) -> np.ndarray:
    # max-subtraction keeps exp() in range for any finite logits
    shifted = z - z.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def _forward(params: ModelParams, x: np.ndarray) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Returns (layer inputs, pre-activations) for a 2-d batch."""
    acts = [x]
    pres = []
    last = len(params.layers) - 1
    for k, (w, b) in enumerate(params.layers):
        z = acts[-1] @ w.T + b
        pres.append(z)
        acts.append(z if k == last else np.maximum(z, 0.0))
    return acts, pres


def forward_logits(params: ModelParams, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    batched = x.ndim == 2
    if not batched:
        x = x[None, :]
    if x.shape[1] != params.input_dim:
        raise ValueError(
            f"feature length {x.shape[1]} != model input_dim {params.input_dim}"
        )
    _, pres = _forward(params, x)
    return pres[-1] if batched else pres[-1][0]


def forward_probs(params: ModelParams, x: np.ndarray) -> np.ndarray:
    """Class probabilities for one feature vector (or a 2-d batch of them)."""
    return _softmax(forward_logits(params, x))


def _check_batch(params: ModelParams, x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=int)
    if x.ndim != 2 or x.shape[0] == 0:
        raise ValueError("batch must be a non-empty 2-d array")
    if y.shape != (x.shape[0],):
        raise ValueError("labels must be 1-d, one per sample")
    if y.min() < 0 or y.max() >= params.class_count:
        raise ValueError(f"label out of range [0, {params.class_count})")
    return x, y


def loss(params: ModelParams, x: np.ndarray, y: np.ndarray) -> float:
    """Mean negative log-likelihood of the true labels."""
    x, y = _check_batch(params, x, y)
    probs = forward_probs(params, x)
    p_true = probs[np.arange(len(y)), y]
    with np.errstate(divide="ignore"):
        logp = np.log(p_true)
    logp = np.maximum(logp, LOG_PROB_FLOOR)
    return float(-logp.mean())


def gradient(
    params: ModelParams, x: np.ndarray, y: np.ndarray
) -> list[tuple[np.ndarray, np.ndarray]]:
    """Gradient of loss() w.r.t. every layer, via backprop.

    The output-layer residual is (softmax - one_hot) / N; hidden layers
    propagate it through the ReLU mask.
    """
    x, y = _check_batch(params, x, y)
    n = x.shape[0]
    acts, pres = _forward(params, x)
    probs = _softmax(pres[-1])
    delta = probs
    delta[np.arange(n), y] -= 1.0
    delta /= n
    grads: list[tuple[np.ndarray, np.ndarray]] = [None] * len(params.layers)  # type: ignore[list-item]
    for k in range(len(params.layers) - 1, -1, -1):
        w, _ = params.layers[k]
        grads[k] = (delta.T @ acts[k], delta.sum(axis=0))
        if k > 0:
            delta = (delta @ w) * (pres[k - 1] > 0)
    return grads


def sgd_finetune(
    params: ModelParams, x: np.ndarray, y: np.ndarray, cfg: TrainConfig
) -> ModelParams:
    """Mini-batch SGD for cfg.epochs passes; returns new parameters.

    Shuffling is driven solely by cfg.seed, so identical inputs give
    bit-identical outputs.
    """
    x, y = _check_batch(params, x, y)
    out = params.copy()
    rng = np.random.default_rng(cfg.seed)
    n = x.shape[0]
    for _ in range(cfg.epochs):
        order = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            grads = gradient(out, x[idx], y[idx])
            for (w, b), (dw, db) in zip(out.layers, grads):
                w -= cfg.learning_rate * dw
                b -= cfg.learning_rate * db
    return out


def predict(params: ModelParams, x: np.ndarray) -> int:
    """Argmax class; ties resolve to the smallest class index."""
    return int(np.argmax(forward_probs(params, x)))


def predict_batch(params: ModelParams, x: np.ndarray) -> np.ndarray:
    return np.argmax(forward_probs(params, x), axis=1)


def accuracy(params: ModelParams, x: np.ndarray, y: np.ndarray) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=int)
    if x.ndim != 2 or x.shape[0] == 0:
        raise ValueError("test set must be non-empty")
    return float((predict_batch(params, x) == y).mean())


def save_checkpoint(params: ModelParams, path: str) -> None:
    """Self-describing .npz checkpoint; round-trips bit-exactly."""
    arrays = {
        "meta": np.array([params.class_count, params.input_dim, len(params.layers)]),
    }
    for i, (w, b) in enumerate(params.layers):
        arrays[f"w{i}"] = w
        arrays[f"b{i}"] = b
    np.savez(path, **arrays)


def load_checkpoint(path: str) -> ModelParams:
    with np.load(path) as data:
        class_count, input_dim, n_layers = (int(v) for v in data["meta"])
        layers = [(data[f"w{i}"], data[f"b{i}"]) for i in range(n_layers)]
    return ModelParams(layers=layers, class_count=class_count, input_dim=input_dim)
