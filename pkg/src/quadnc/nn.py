"""Dense feedforward classifier 160 -> 64 -> 32 -> 16 -> 2.

ReLU hidden layers, softmax output, mean categorical cross-entropy, trained
with Adam and early stopping on the validation loss.  Plain numpy; weights
are stored as ``(fan_in, fan_out)`` matrices so a layer is ``x @ W + b``.
"""
from __future__ import annotations

import copy
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import FormatError, InputError, ModelError, TrainingError
from .features import FeatureVector
from .sampler import derive_seed, make_rng

LAYER_DIMS = (160, 64, 32, 16, 2)
PROB_FLOOR = 1e-12
MODEL_FORMAT = "quadnc-model"
MODEL_VERSION = 1


@dataclass
class NetworkModel:
    layer_dims: tuple
    weights: list
    biases: list
    activations: tuple
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.layer_dims = tuple(int(d) for d in self.layer_dims)
        self.activations = tuple(self.activations)
        n_layers = len(self.layer_dims) - 1
        if len(self.weights) != n_layers or len(self.biases) != n_layers or len(self.activations) != n_layers:
            raise ModelError("number of weight/bias/activation entries does not match layer_dims")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            shape = (self.layer_dims[i], self.layer_dims[i + 1])
            if w.shape != shape or b.shape != (shape[1],):
                raise ModelError(f"layer {i}: expected W{shape}, b({shape[1]},), got W{w.shape}, b{b.shape}")
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise ModelError(f"layer {i} has non-finite parameters")

    def copy(self) -> "NetworkModel":
        return NetworkModel(
            self.layer_dims,
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
            self.activations,
            copy.deepcopy(self.metadata),
        )


@dataclass
class Gradient:
    weights: list
    biases: list

    def flat(self) -> np.ndarray:
        return np.concatenate([a.ravel() for pair in zip(self.weights, self.biases) for a in pair])


@dataclass
class TrainConfig:
    learning_rate: float = 1e-3
    batch_size: int = 128
    max_epochs: int = 500
    patience: int = 10
    optimizer: str = "adam"
    seed: int = 0
    validation_fraction: float = 0.2
    workers: int = 1  # >1 enables the data-parallel gradient mode (not bit-stable)

    def validate(self) -> None:
        if self.patience < 1:
            raise InputError("patience must be >= 1")
        if not 0.0 < self.validation_fraction < 1.0:
            raise InputError("validation fraction must lie in (0, 1)")
        if self.batch_size < 1 or self.max_epochs < 1:
            raise InputError("batch size and max epochs must be >= 1")
        if self.learning_rate < 0:
            raise InputError("learning rate must be >= 0")
        if self.optimizer not in ("adam", "sgd"):
            raise InputError(f"unknown optimizer {self.optimizer!r}")


def init_model(layer_dims=LAYER_DIMS, seed: int = 0) -> NetworkModel:
    """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases."""
    rng = make_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(layer_dims[:-1], layer_dims[1:]):
        lim = 1.0 / math.sqrt(fan_in)
        weights.append(rng.uniform(-lim, lim, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    acts = ("relu",) * (len(layer_dims) - 2) + ("softmax",)
    return NetworkModel(tuple(layer_dims), weights, biases, acts, {"init_seed": int(seed)})


def _as_matrix(model: NetworkModel, inputs) -> np.ndarray:
    if isinstance(inputs, FeatureVector):
        x = inputs.bins[None, :]
    elif isinstance(inputs, (list, tuple)) and inputs and isinstance(inputs[0], FeatureVector):
        x = np.stack([f.bins for f in inputs])
    else:
        x = np.asarray(inputs, dtype=np.float64)
        if x.ndim == 1:
            x = x[None, :]
    if x.ndim != 2 or x.shape[1] != model.layer_dims[0]:
        raise ModelError(f"input has shape {x.shape}, model expects {model.layer_dims[0]} features")
    return x


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def _forward_cache(model: NetworkModel, x: np.ndarray):
    acts = [x]
    pre = []
    h = x
    last = len(model.weights) - 1
    for i, (w, b) in enumerate(zip(model.weights, model.biases)):
        z = h @ w + b
        pre.append(z)
        h = z if i == last else np.maximum(z, 0.0)
        acts.append(h)
    return pre, acts


def logits(model: NetworkModel, inputs) -> np.ndarray:
    x = _as_matrix(model, inputs)
    pre, _ = _forward_cache(model, x)
    return pre[-1]


def forward(model: NetworkModel, inputs) -> np.ndarray:
    """Class probabilities ``[p_classical, p_nonclassical]``.

    A single FeatureVector (or 1-d array) gives shape ``(2,)``; a batch gives ``(N, 2)``.
    """
    single = isinstance(inputs, FeatureVector) or np.ndim(inputs) == 1 and not isinstance(inputs, (list, tuple))
    p = softmax(logits(model, inputs))
    return p[0] if single else p


def nonclassical_score(model: NetworkModel, inputs) -> np.ndarray:
    """The network output r = p(nonclassical)."""
    return forward(model, inputs)[..., 1]


def _labels(labels, n: int) -> np.ndarray:
    y = np.asarray([int(v) for v in labels], dtype=np.int64)
    if y.shape[0] != n:
        raise InputError(f"{n} inputs but {y.shape[0]} labels")
    if n == 0:
        raise InputError("need at least one example")
    return y


def loss(model: NetworkModel, inputs, labels) -> float:
    x = _as_matrix(model, inputs)
    y = _labels(labels, x.shape[0])
    p = softmax(logits(model, x))[np.arange(x.shape[0]), y]
    return float(-np.mean(np.log(np.maximum(p, PROB_FLOOR))))


def _grad_sum(model: NetworkModel, x: np.ndarray, y: np.ndarray, scale: float) -> Gradient:
    pre, acts = _forward_cache(model, x)
    p = softmax(pre[-1])
    n = x.shape[0]
    delta = p.copy()
    delta[np.arange(n), y] -= 1.0
    # the probability floor makes the loss flat where p_label < floor
    delta[p[np.arange(n), y] < PROB_FLOOR] = 0.0
    delta *= scale
    gw = [None] * len(model.weights)
    gb = [None] * len(model.weights)
    for i in range(len(model.weights) - 1, -1, -1):
        gw[i] = acts[i].T @ delta
        gb[i] = delta.sum(axis=0)
        if i:
            delta = (delta @ model.weights[i].T) * (pre[i - 1] > 0)
    return Gradient(gw, gb)


def gradient(model: NetworkModel, inputs, labels, workers: int = 1) -> Gradient:
    """Exact gradient of :func:`loss` with respect to every parameter."""
    x = _as_matrix(model, inputs)
    y = _labels(labels, x.shape[0])
    n = x.shape[0]
    if workers <= 1 or n < 2 * workers:
        return _grad_sum(model, x, y, 1.0 / n)
    chunks = np.array_split(np.arange(n), workers)
    with ThreadPoolExecutor(workers) as pool:
        parts = list(pool.map(lambda idx: _grad_sum(model, x[idx], y[idx], 1.0 / n), chunks))
    return Gradient(
        [sum(g.weights[i] for g in parts) for i in range(len(model.weights))],
        [sum(g.biases[i] for g in parts) for i in range(len(model.biases))],
    )


class _Adam:
    def __init__(self, params, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.b1, self.b2, self.eps = lr, beta1, beta2, eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, params, grads):
        self.t += 1
        c1 = 1.0 - self.b1**self.t
        c2 = 1.0 - self.b2**self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.b1
            m += (1.0 - self.b1) * g
            v *= self.b2
            v += (1.0 - self.b2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


class _SGD:
    def __init__(self, params, lr):
        self.lr = lr

    def step(self, params, grads):
        for p, g in zip(params, grads):
            p -= self.lr * g


def _dataset_arrays(dataset):
    if isinstance(dataset, tuple) and len(dataset) == 2 and isinstance(dataset[0], np.ndarray):
        x, y = dataset
        return np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.int64)
    feats, labels = zip(*dataset)
    return np.stack([f.bins for f in feats]), np.asarray([int(v) for v in labels], dtype=np.int64)


def fit(dataset, config: TrainConfig | None = None, layer_dims=LAYER_DIMS, log=None) -> NetworkModel:
    """Train a classifier and return the parameters of the best validation epoch.

    ``dataset`` is a sequence of ``(FeatureVector, label)`` pairs or an
    ``(X, y)`` tuple of arrays.  ``log``, if given, is called with one dict per
    epoch.
    """
    config = config or TrainConfig()
    config.validate()
    x, y = _dataset_arrays(dataset)
    n = x.shape[0]
    if n < 100:
        raise TrainingError(f"need at least 100 examples, got {n}")
    if len(np.unique(y)) < 2:
        raise TrainingError("dataset contains a single class")

    perm = make_rng(config.seed).permutation(n)
    n_val = max(1, int(round(n * config.validation_fraction)))
    val_idx, tr_idx = perm[:n_val], perm[n_val:]
    x_val, y_val = x[val_idx], y[val_idx]
    x_tr, y_tr = x[tr_idx], y[tr_idx]

    model = init_model(layer_dims, derive_seed(config.seed, 1))
    params = [a for pair in zip(model.weights, model.biases) for a in pair]
    opt = _Adam(params, config.learning_rate) if config.optimizer == "adam" else _SGD(params, config.learning_rate)
    shuffle_rng = make_rng(derive_seed(config.seed, 2))

    best = math.inf
    best_model = model.copy()
    best_epoch = 0
    wait = 0
    history = []
    epoch = 0
    for epoch in range(1, config.max_epochs + 1):
        order = shuffle_rng.permutation(tr_idx.shape[0])
        total = 0.0
        for start in range(0, order.shape[0], config.batch_size):
            idx = order[start : start + config.batch_size]
            xb, yb = x_tr[idx], y_tr[idx]
            g = gradient(model, xb, yb, workers=config.workers)
            opt.step(params, [a for pair in zip(g.weights, g.biases) for a in pair])
        total = loss(model, x_tr, y_tr)
        val = loss(model, x_val, y_val)
        if not (math.isfinite(val) and math.isfinite(total)):
            raise TrainingError(f"non-finite loss at epoch {epoch}")
        if val < best:
            best, best_epoch, wait = val, epoch, 0
            best_model = model.copy()
        else:
            wait += 1
        acc = float(np.mean(np.argmax(logits(model, x_val), axis=1) == y_val))
        row = {"epoch": epoch, "train_loss": total, "val_loss": val, "val_accuracy": acc, "best_val_loss": best}
        history.append(row)
        if log is not None:
            log(row)
        if wait >= config.patience:
            break

    best_model.metadata = {
        "seed": int(config.seed),
        "epochs_run": epoch,
        "best_epoch": best_epoch,
        "best_val_loss": best,
        "train_config": dict(vars(config)),
        "n_train": int(tr_idx.shape[0]),
        "n_validation": int(n_val),
        "history": history,
    }
    return best_model


def split_indices(n: int, config: TrainConfig):
    """The (train, validation) index split :func:`fit` uses for ``n`` examples."""
    perm = make_rng(config.seed).permutation(n)
    n_val = max(1, int(round(n * config.validation_fraction)))
    return perm[n_val:], perm[:n_val]


# --- model files -------------------------------------------------------------


def _num(v) -> str:
    return "%.17g" % v


def _array_json(a: np.ndarray) -> str:
    return "[" + ",".join(_num(v) for v in a.ravel().tolist()) + "]"


def dumps(model: NetworkModel) -> str:
    """JSON text with row-major parameter arrays at 17 significant digits."""
    head = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "layer_dims": list(model.layer_dims),
        "activations": list(model.activations),
        "metadata": model.metadata,
    }
    body = json.dumps(head, indent=1, sort_keys=True)[:-2]
    layers = ",\n".join(
        '  {"weights": %s,\n   "biases": %s}' % (_array_json(w), _array_json(b))
        for w, b in zip(model.weights, model.biases)
    )
    return body + ',\n "layers": [\n' + layers + "\n ]\n}\n"


def loads(text: str) -> NetworkModel:
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"model file is not valid JSON: {exc}") from None
    if not isinstance(d, dict) or d.get("format") != MODEL_FORMAT:
        raise FormatError("not a quadnc model file")
    if d.get("version") != MODEL_VERSION:
        raise FormatError(f"unsupported model file version {d.get('version')!r}; this build reads version {MODEL_VERSION}")
    try:
        dims = [int(v) for v in d["layer_dims"]]
        weights, biases = [], []
        for i, layer in enumerate(d["layers"]):
            weights.append(np.array(layer["weights"], dtype=np.float64).reshape(dims[i], dims[i + 1]))
            biases.append(np.array(layer["biases"], dtype=np.float64))
        return NetworkModel(tuple(dims), weights, biases, tuple(d["activations"]), d.get("metadata", {}))
    except (KeyError, ValueError, IndexError, TypeError, ModelError) as exc:
        raise FormatError(f"malformed model file: {exc}") from None


def save(model: NetworkModel, path) -> None:
    Path(path).write_text(dumps(model))


def load(path) -> NetworkModel:
    return loads(Path(path).read_text())
