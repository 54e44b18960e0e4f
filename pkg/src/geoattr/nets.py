"""Small feed-forward classifier with exact input gradients.

The network is a stack of affine layers with ReLU between them and a
log-softmax head. Everything is float64 and deterministic: the same seed
produces bit-identical weights, and forward/gradient evaluation is pure.

The scalar being attributed is selected by a ``ScalarTarget``: one class
index plus the output space (probability, log-probability or pre-softmax
logit). All path integrals elsewhere in the package reduce to batched
calls of :func:`batch_scalar_and_gradient`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import backend

SPACES = ("probability", "log_probability", "logit")


class InputShapeError(ValueError):
    pass


class TargetError(ValueError):
    pass


class TrainingDivergedError(RuntimeError):
    def __init__(self, epoch, loss):
        super().__init__(f"non-finite loss {loss!r} at epoch {epoch}")
        self.epoch = epoch


@dataclass(frozen=True)
class ScalarTarget:
    """Which scalar output of the classifier is being explained."""

    class_index: int
    space: str = "probability"

    def __post_init__(self):
        if self.space not in SPACES:
            raise TargetError(f"unknown output space {self.space!r}")

    def validate(self, n_classes):
        if not 0 <= self.class_index < n_classes:
            raise TargetError(
                f"class index {self.class_index} out of range for {n_classes} classes"
            )


class MlpModel:
    """ReLU MLP with a log-softmax head, immutable after construction."""

    def __init__(self, weights, biases):
        if len(weights) != len(biases) or not weights:
            raise ValueError("need matching non-empty weight/bias lists")
        self.weights = [np.ascontiguousarray(w, dtype=np.float64) for w in weights]
        self.biases = [np.ascontiguousarray(b, dtype=np.float64) for b in biases]
        for w, b in zip(self.weights, self.biases):
            if w.ndim != 2 or b.ndim != 1 or w.shape[0] != b.shape[0]:
                raise ValueError("layer shapes inconsistent")
        for prev, nxt in zip(self.weights[:-1], self.weights[1:]):
            if nxt.shape[1] != prev.shape[0]:
                raise ValueError("consecutive layer shapes do not chain")
        if self.n_classes < 2:
            raise ValueError("need at least two output classes")
        for w in self.weights:
            w.setflags(write=False)
        for b in self.biases:
            b.setflags(write=False)

    @property
    def n_inputs(self):
        return self.weights[0].shape[1]

    @property
    def n_classes(self):
        return self.weights[-1].shape[0]

    @property
    def layer_sizes(self):
        return [self.n_inputs] + [w.shape[0] for w in self.weights]

    @classmethod
    def initialize(cls, layer_sizes, seed):
        """He-initialized weights, zero biases, deterministic from seed."""
        rng = np.random.default_rng(seed)
        weights, biases = [], []
        for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
            scale = np.sqrt(2.0 / fan_in)
            weights.append(rng.normal(0.0, scale, size=(fan_out, fan_in)))
            biases.append(np.zeros(fan_out))
        return cls(weights, biases)


def _check_batch(model, x):
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if x.ndim != 2 or x.shape[1] != model.n_inputs:
        raise InputShapeError(
            f"expected inputs of dimension {model.n_inputs}, got shape {x.shape}"
        )
    return np.ascontiguousarray(x)


def _forward_batch(model, x):
    """Log-probabilities for a batch, plus pre-activations for backprop."""
    pre = []
    h = x
    last = len(model.weights) - 1
    for i, (w, b) in enumerate(zip(model.weights, model.biases)):
        a = h @ w.T + b
        pre.append(a)
        h = np.maximum(a, 0.0) if i < last else a
    logits = pre[-1]
    shift = logits - logits.max(axis=1, keepdims=True)
    logp = shift - np.log(np.exp(shift).sum(axis=1, keepdims=True))
    return logp, pre


def forward(model, x):
    """Log-softmax outputs for a single input (length c)."""
    xb = _check_batch(model, x)
    logp, _ = _forward_batch(model, xb)
    return logp[0] if np.asarray(x).ndim == 1 else logp


def batch_forward(model, x):
    logp, _ = _forward_batch(model, _check_batch(model, x))
    return logp


def predict(model, x):
    return np.argmax(batch_forward(model, x), axis=1)


def scalar_output(model, x, target):
    """f(x) for the configured class and output space."""
    target.validate(model.n_classes)
    xb = _check_batch(model, x)
    logp, pre = _forward_batch(model, xb)
    c = target.class_index
    if target.space == "log_probability":
        out = logp[:, c]
    elif target.space == "probability":
        out = np.exp(logp[:, c])
    else:
        out = pre[-1][:, c]
    return float(out[0]) if np.asarray(x).ndim == 1 else out


def batch_scalar_and_gradient(model, x, target):
    """f and df/dx for a batch of inputs; the package's hot kernel.

    Dispatches per call between the compiled extension and the vectorized
    numpy path (see geoattr.backend). ReLU uses the d/dx ReLU(0) = 0
    convention in both.
    """
    target.validate(model.n_classes)
    xb = _check_batch(model, x)
    impl = backend.select(model, xb.shape[0])
    if impl == "compiled":
        return backend.compiled_scalar_and_gradient(model, xb, target)
    return numpy_scalar_and_gradient(model, xb, target)


def numpy_scalar_and_gradient(model, x, target):
    """Pure-numpy fused forward + reverse pass (reference implementation)."""
    logp, pre = _forward_batch(model, x)
    c = target.class_index
    p = np.exp(logp)
    onehot = np.zeros_like(p)
    onehot[:, c] = 1.0
    if target.space == "log_probability":
        f = logp[:, c]
        g = onehot - p
    elif target.space == "probability":
        f = p[:, c]
        g = f[:, None] * (onehot - p)
    else:
        f = pre[-1][:, c]
        g = onehot
    for i in range(len(model.weights) - 1, -1, -1):
        g = g @ model.weights[i]
        if i > 0:
            g = g * (pre[i - 1] > 0.0)
    return f, g


def input_gradient(model, x, target):
    """Exact gradient of scalar_output w.r.t. a single input x."""
    _, g = batch_scalar_and_gradient(model, x, target)
    return g[0] if np.asarray(x).ndim == 1 else g


def batch_logits_jacobian(model, x):
    """d(logits)/dx for a batch, shape (n, c, d).

    One reverse pass per class; piecewise-linear in x, so this Jacobian is
    exact away from ReLU kinks.
    """
    xb = _check_batch(model, x)
    _, pre = _forward_batch(model, xb)
    n, c = xb.shape[0], model.n_classes
    jac = np.empty((n, c, xb.shape[1]))
    for cls in range(c):
        g = np.zeros((n, c))
        g[:, cls] = 1.0
        for i in range(len(model.weights) - 1, -1, -1):
            g = g @ model.weights[i]
            if i > 0:
                g = g * (pre[i - 1] > 0.0)
        jac[:, cls, :] = g
    return jac


def kink_margin(model, x):
    """Distance lower bound from x to the nearest ReLU kink surface.

    For each hidden unit the pre-activation a_u is locally affine, so
    |a_u(x)| / ||da_u/dx|| bounds the distance to its zero set; the margin
    is the minimum over units. Gradients are exact (and finite-difference
    stencils are trustworthy) only on balls that stay within this margin.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != model.n_inputs:
        raise InputShapeError(f"expected a single input of dimension "
                              f"{model.n_inputs}, got shape {x.shape}")
    margin = np.inf
    jac = None  # d(layer pre-activation)/dx, accumulated forward
    h = x
    for i, (w, b) in enumerate(zip(model.weights[:-1], model.biases[:-1])):
        a = w @ h + b
        jac = w.copy() if jac is None else w @ jac
        row_norms = np.linalg.norm(jac, axis=1)
        active = row_norms > 0
        if active.any():
            margin = min(margin, float((np.abs(a[active]) / row_norms[active]).min()))
        mask = a > 0
        h = np.maximum(a, 0.0)
        jac = jac * mask[:, None]
    return margin


@dataclass
class TrainReport:
    final_loss: float
    train_accuracy: float
    epochs: int
    seed: int


def train(model, points, labels, epochs, learning_rate=0.05, momentum=0.9,
          batch_size=128, seed=0):
    """Minibatch gradient descent with momentum on cross-entropy.

    Returns a new trained model plus a report; the input model is left
    untouched. Deterministic given the seed.
    """
    x = _check_batch(model, points)
    y = np.asarray(labels, dtype=np.int64)
    if x.shape[0] == 0:
        raise ValueError("empty training set")
    if y.min() < 0 or y.max() >= model.n_classes:
        raise ValueError("labels out of range")
    weights = [w.copy() for w in model.weights]
    biases = [b.copy() for b in model.biases]
    vel_w = [np.zeros_like(w) for w in weights]
    vel_b = [np.zeros_like(b) for b in biases]
    rng = np.random.default_rng(seed)
    n = x.shape[0]
    last = len(weights) - 1
    loss = float("nan")

    # overflow on a diverging run shows up as a non-finite loss below;
    # the numpy warnings on the way there are just noise
    with np.errstate(over="ignore", invalid="ignore"):
        for epoch in range(epochs):
            order = rng.permutation(n)
            epoch_loss = 0.0
            for start in range(0, n, batch_size):
                idx = order[start:start + batch_size]
                xb, yb = x[idx], y[idx]
                # forward
                acts = [xb]
                pre = []
                h = xb
                for i in range(len(weights)):
                    a = h @ weights[i].T + biases[i]
                    pre.append(a)
                    h = np.maximum(a, 0.0) if i < last else a
                    acts.append(h)
                logits = pre[-1]
                shift = logits - logits.max(axis=1, keepdims=True)
                logp = shift - np.log(np.exp(shift).sum(axis=1, keepdims=True))
                epoch_loss += -logp[np.arange(len(yb)), yb].sum()
                # backward
                g = np.exp(logp)
                g[np.arange(len(yb)), yb] -= 1.0
                g /= len(yb)
                for i in range(last, -1, -1):
                    gw = g.T @ acts[i]
                    gb = g.sum(axis=0)
                    if i > 0:
                        g = (g @ weights[i]) * (pre[i - 1] > 0.0)
                    vel_w[i] = momentum * vel_w[i] - learning_rate * gw
                    vel_b[i] = momentum * vel_b[i] - learning_rate * gb
                    weights[i] += vel_w[i]
                    biases[i] += vel_b[i]
            loss = epoch_loss / n
            if not np.isfinite(loss):
                raise TrainingDivergedError(epoch, loss)

    trained = MlpModel(weights, biases)
    acc = float(np.mean(predict(trained, x) == y))
    return trained, TrainReport(float(loss), acc, epochs, seed)


# -- serialization: hex floats keep the round trip bit-exact -----------------

FORMAT_VERSION = 1


def save_model(model, path):
    doc = {
        "format_version": FORMAT_VERSION,
        "layer_sizes": model.layer_sizes,
        "activation": "relu",
        "head": "log_softmax",
        "layers": [
            {
                "weights": [v.hex() for v in w.ravel(order="C")],
                "bias": [v.hex() for v in b],
            }
            for w, b in zip(model.weights, model.biases)
        ],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def load_model(path):
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("format_version") != FORMAT_VERSION:
        raise ValueError(f"unsupported model format {doc.get('format_version')!r}")
    sizes = doc["layer_sizes"]
    weights, biases = [], []
    for (fan_in, fan_out), layer in zip(
        zip(sizes[:-1], sizes[1:]), doc["layers"]
    ):
        w = np.array([float.fromhex(v) for v in layer["weights"]])
        weights.append(w.reshape(fan_out, fan_in))
        biases.append(np.array([float.fromhex(v) for v in layer["bias"]]))
    return MlpModel(weights, biases)
