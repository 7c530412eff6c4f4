"""ReLU multilayer perceptron with exact reverse-mode gradients.

Weights are stored ``(fan_out, fan_in)`` so a layer computes ``W @ x + b``.
Most functions accept either one example ``x`` of shape ``(d,)`` or a batch
``(n, d)`` and answer in kind.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .datasets import Dataset
from .errors import (
    ArgumentError,
    DimensionError,
    MalformedPayloadError,
    ShapeInconsistencyError,
    WeightsMissingError,
)
from .fileio import atomic_write_text
from .numcore import RngStream, cross_entropy


@dataclass(frozen=True)
class MlpSpec:
    layer_widths: tuple[int, ...]
    id: str = "A"

    def __post_init__(self):
        widths = tuple(int(w) for w in self.layer_widths)
        if len(widths) < 2 or any(w < 1 for w in widths) or widths[-1] < 2:
            raise ArgumentError(f"invalid layer widths {list(self.layer_widths)}")
        object.__setattr__(self, "layer_widths", widths)

    @property
    def input_dim(self) -> int:
        return self.layer_widths[0]

    @property
    def num_classes(self) -> int:
        return self.layer_widths[-1]


@dataclass
class MlpParams:
    spec: MlpSpec
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    seed: int = 0

    def copy(self) -> "MlpParams":
        return MlpParams(
            self.spec, [w.copy() for w in self.weights], [b.copy() for b in self.biases], self.seed
        )

    def arrays(self) -> list[np.ndarray]:
        """Flat list ``[W0, b0, W1, b1, ...]`` (views, not copies)."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out

    def equals(self, other: "MlpParams") -> bool:
        """Bitwise equality of spec and all parameter arrays."""
        if self.spec != other.spec or len(self.weights) != len(other.weights):
            return False
        return all(
            a.shape == b.shape and a.tobytes() == b.tobytes()
            for a, b in zip(self.arrays(), other.arrays())
        )


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 30
    batch_size: int = 32
    learning_rate: float = 0.05
    seed: int = 0


@dataclass
class ForwardTrace:
    inputs: np.ndarray  # (n, d)
    pre_activations: list[np.ndarray]  # one (n, width) per layer
    activations: list[np.ndarray]  # ReLU outputs of hidden layers
    single: bool = False

    @property
    def logits(self) -> np.ndarray:
        z = self.pre_activations[-1]
        return z[0] if self.single else z


@dataclass
class EpochStats:
    epoch: int
    loss: float
    top1: float


def init_params(spec: MlpSpec, seed: int) -> MlpParams:
    """Glorot-uniform weights, zero biases, drawn layer by layer row-major."""
    rng = RngStream(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(spec.layer_widths[:-1], spec.layer_widths[1:]):
        s = math.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform_array(fan_in * fan_out, -s, s).reshape(fan_out, fan_in))
        biases.append(np.zeros(fan_out))
    return MlpParams(spec, weights, biases, int(seed))


def _as_batch(p: MlpParams, x) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    x2 = x[None, :] if single else x
    if x2.ndim != 2 or x2.shape[1] != p.spec.input_dim:
        raise DimensionError(f"input shape {x.shape} does not match input dim {p.spec.input_dim}")
    return x2, single


def forward(p: MlpParams, x) -> ForwardTrace:
    x2, single = _as_batch(p, x)
    pre, act = [], []
    h = x2
    last = len(p.weights) - 1
    for i, (w, b) in enumerate(zip(p.weights, p.biases)):
        z = h @ w.T + b
        pre.append(z)
        if i < last:
            h = np.maximum(z, 0.0)
            act.append(h)
    return ForwardTrace(x2, pre, act, single)


def logits(p: MlpParams, x) -> np.ndarray:
    return forward(p, x).logits


def predict(p: MlpParams, x) -> np.ndarray:
    """Top-1 class (lowest index on ties)."""
    return np.argmax(logits(p, x), axis=-1)


def backward(p: MlpParams, trace: ForwardTrace, grad_logits: np.ndarray):
    """Backpropagate ``grad_logits`` (``(n, C)`` or ``(C,)``) through ``trace``.

    Returns ``(weight_grads, bias_grads, input_grad)``; parameter gradients
    are summed over the batch, the input gradient stays per-example.
    """
    g = np.asarray(grad_logits, dtype=np.float64)
    if g.ndim == 1:
        g = g[None, :]
    n_layers = len(p.weights)
    w_grads: list[Optional[np.ndarray]] = [None] * n_layers
    b_grads: list[Optional[np.ndarray]] = [None] * n_layers
    for i in range(n_layers - 1, -1, -1):
        h_in = trace.inputs if i == 0 else trace.activations[i - 1]
        w_grads[i] = g.T @ h_in
        b_grads[i] = g.sum(axis=0)
        g = g @ p.weights[i]
        if i > 0:
            g = g * (trace.pre_activations[i - 1] > 0.0)
    input_grad = g[0] if trace.single else g
    return w_grads, b_grads, input_grad


@dataclass
class LossGrads:
    loss: object  # float for one example, (n,) array for a batch
    weight_grads: list[np.ndarray]
    bias_grads: list[np.ndarray]
    input_grad: np.ndarray
    logits: np.ndarray = field(repr=False, default=None)


def loss_and_grads(p: MlpParams, x, y) -> LossGrads:
    """Cross-entropy loss with gradients to parameters and to the input.

    For a batch, ``loss`` holds per-example values, parameter gradients are
    those of the mean loss and ``input_grad[i]`` is the gradient of example
    ``i``'s own loss with respect to ``x[i]``.
    """
    trace = forward(p, x)
    z = trace.pre_activations[-1]
    y_arr = np.atleast_1d(np.asarray(y, dtype=np.int64))
    losses, g = cross_entropy(z, y_arr)
    n = z.shape[0]
    wg, bg, xg = backward(p, trace, g)
    wg = [w / n for w in wg]
    bg = [b / n for b in bg]
    loss = float(losses[0]) if trace.single else losses
    return LossGrads(loss, wg, bg, xg, trace.logits)


def input_gradient(p: MlpParams, x, y) -> np.ndarray:
    """Per-example gradient of cross-entropy w.r.t. the input."""
    trace = forward(p, x)
    _, g = cross_entropy(trace.pre_activations[-1], np.atleast_1d(np.asarray(y, dtype=np.int64)))
    return backward(p, trace, g)[2]


def logit_jacobian(p: MlpParams, x) -> np.ndarray:
    """d logits / d x, shape ``(C, d)`` for one example or ``(n, C, d)``."""
    x2, single = _as_batch(p, x)
    # ReLU network: the Jacobian is the product of masked weight matrices
    trace = forward(p, x2)
    jac = np.broadcast_to(p.weights[0], (x2.shape[0],) + p.weights[0].shape)
    for i in range(1, len(p.weights)):
        mask = (trace.pre_activations[i - 1] > 0.0).astype(np.float64)
        jac = (p.weights[i][None, :, :] * mask[:, None, :]) @ jac
    return np.array(jac[0] if single else jac)


def least_likely_class(p: MlpParams, x):
    """Index of the smallest logit (lowest index on ties)."""
    return np.argmin(logits(p, x), axis=-1)


def topk_correct(z: np.ndarray, y: np.ndarray, k: int) -> np.ndarray:
    """Whether each true label ranks within the top ``k`` logits.

    Class ``j`` outranks ``y`` when ``z_j > z_y``, or on a tie when ``j < y``.
    """
    z = np.atleast_2d(z)
    y = np.atleast_1d(np.asarray(y, dtype=np.int64))
    zy = z[np.arange(z.shape[0]), y][:, None]
    cls = np.arange(z.shape[1])[None, :]
    above = (z > zy) | ((z == zy) & (cls < y[:, None]))
    return above.sum(axis=1) < k


def evaluate(p: MlpParams, data: Dataset, k: int = 5) -> tuple[float, float]:
    """``(top1, topk)`` accuracy fractions on ``data``."""
    if not 1 <= k <= p.spec.num_classes:
        raise ArgumentError(f"k must be in [1, {p.spec.num_classes}], got {k}")
    if len(data) == 0:
        return 0.0, 0.0
    z = logits(p, data.features)
    return (
        float(topk_correct(z, data.labels, 1).mean()),
        float(topk_correct(z, data.labels, k).mean()),
    )


# ------------------------------------------------------------- training

# (params, batch_x, batch_y, batch_index) -> replacement batch_x
BatchHook = Callable[[MlpParams, np.ndarray, np.ndarray, int], np.ndarray]


def train_loop(
    spec: MlpSpec,
    cfg: TrainConfig,
    data: Dataset,
    batch_hook: Optional[BatchHook] = None,
) -> tuple[MlpParams, list[EpochStats]]:
    """Minibatch SGD shared by standard and adversarial training."""
    if len(data) == 0:
        raise ArgumentError("cannot train on an empty dataset")
    if cfg.epochs < 0 or cfg.batch_size < 1 or not cfg.learning_rate > 0:
        raise ArgumentError(f"invalid train config {cfg}")
    if cfg.batch_size > len(data):
        raise ArgumentError(f"batch_size {cfg.batch_size} exceeds dataset size {len(data)}")
    if data.class_count > spec.num_classes or data.dim != spec.input_dim:
        raise DimensionError(
            f"dataset ({data.dim}-d, {data.class_count} classes) does not fit widths "
            f"{list(spec.layer_widths)}"
        )
    params = init_params(spec, cfg.seed)
    rng = RngStream(cfg.seed)
    history = []
    batch_index = 0
    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(len(data))
        for start in range(0, len(data), cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            bx, by = data.features[idx], data.labels[idx]
            if batch_hook is not None:
                bx = batch_hook(params, bx, by, batch_index)
            batch_index += 1
            lg = loss_and_grads(params, bx, by)
            for i in range(len(params.weights)):
                params.weights[i] -= cfg.learning_rate * lg.weight_grads[i]
                params.biases[i] -= cfg.learning_rate * lg.bias_grads[i]
        z = logits(params, data.features)
        losses, _ = cross_entropy(z, data.labels)
        top1 = float(topk_correct(z, data.labels, 1).mean())
        history.append(EpochStats(epoch, float(losses.mean()), top1))
    return params, history


def sgd_train(spec: MlpSpec, cfg: TrainConfig, data: Dataset):
    """Standard training. Returns ``(params, history)`` with one row per epoch."""
    return train_loop(spec, cfg, data)


# ------------------------------------------------------------ weights IO


def params_to_dict(p: MlpParams) -> dict:
    return {
        "spec": {"layer_widths": list(p.spec.layer_widths), "id": p.spec.id},
        "seed": p.seed,
        "layers": [{"w": w.tolist(), "b": b.tolist()} for w, b in zip(p.weights, p.biases)],
    }


def params_from_dict(doc) -> MlpParams:
    try:
        spec = MlpSpec(tuple(doc["spec"]["layer_widths"]), str(doc["spec"].get("id", "A")))
        layers = doc["layers"]
        seed = int(doc.get("seed", 0))
        weights = [np.array(layer["w"], dtype=np.float64) for layer in layers]
        biases = [np.array(layer["b"], dtype=np.float64) for layer in layers]
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        raise MalformedPayloadError(f"weights document is malformed: {exc}") from exc
    widths = spec.layer_widths
    if len(weights) != len(widths) - 1:
        raise ShapeInconsistencyError(
            f"{len(weights)} layers stored but widths {list(widths)} need {len(widths) - 1}"
        )
    for i, (w, b) in enumerate(zip(weights, biases)):
        if w.shape != (widths[i + 1], widths[i]) or b.shape != (widths[i + 1],):
            raise ShapeInconsistencyError(
                f"layer {i}: w{w.shape} b{b.shape}, expected w{(widths[i + 1], widths[i])} "
                f"b{(widths[i + 1],)}"
            )
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
            raise MalformedPayloadError(f"layer {i} holds non-finite values")
    return MlpParams(spec, weights, biases, seed)


def save_weights(p: MlpParams, path) -> None:
    atomic_write_text(path, json.dumps(params_to_dict(p)))


def load_weights(path) -> MlpParams:
    path = Path(path)
    if not path.is_file():
        raise WeightsMissingError(f"weights file not found: {path}")
    try:
        doc = json.loads(path.read_text())
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise MalformedPayloadError(f"{path}: not a JSON document ({exc})") from exc
    return params_from_dict(doc)
