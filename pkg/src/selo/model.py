"""Small fully connected classifier trained with Adam on softmax cross-entropy."""

from __future__ import annotations

import hashlib
import io
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import NumericError

HIDDEN = (32, 32, 16)
N_CLASSES = 2


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.001
    batch_size: int = 512
    epochs: int = 100
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    shuffle_seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0 or self.batch_size < 1 or self.epochs < 0:
            raise ValueError("learning_rate and batch_size must be positive, epochs non-negative")
        if not (0 <= self.adam_beta1 < 1 and 0 <= self.adam_beta2 < 1 and self.adam_eps > 0):
            raise ValueError("invalid Adam hyper-parameters")


@dataclass
class MlpParams:
    layer_dims: tuple
    weights: list  # weights[l] has shape (layer_dims[l], layer_dims[l + 1])
    biases: list
    seed: int = 0
    loss_trace: list = field(default_factory=list)

    @property
    def input_dim(self) -> int:
        return self.layer_dims[0]

    def copy(self) -> "MlpParams":
        return MlpParams(
            tuple(self.layer_dims),
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
            self.seed,
            list(self.loss_trace),
        )

    def arrays(self) -> list[np.ndarray]:
        return [a for pair in zip(self.weights, self.biases) for a in pair]


def init(input_dim: int, seed: int = 0, hidden=HIDDEN) -> MlpParams:
    """He-uniform weights (limit sqrt(6 / fan_in)), zero biases."""
    if input_dim < 1:
        raise ValueError(f"input_dim must be at least 1, got {input_dim}")
    dims = (int(input_dim), *hidden, N_CLASSES)
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        limit = np.sqrt(6.0 / fan_in)
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return MlpParams(dims, weights, biases, seed)


def _softmax(z):
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _check_input(p, x):
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != p.input_dim:
        raise ValueError(f"expected input width {p.input_dim}, got shape {x.shape}")
    return x


def forward(p: MlpParams, batch) -> np.ndarray:
    """Class probabilities, one row per input row."""
    h = _check_input(p, batch)
    last = len(p.weights) - 1
    for i, (w, b) in enumerate(zip(p.weights, p.biases)):
        z = h @ w + b
        h = _softmax(z) if i == last else np.maximum(z, 0.0)
    return h


def predict_proba(p: MlpParams, features) -> np.ndarray:
    """Probability that each row belongs to the positive class (+1)."""
    return forward(p, features)[:, 1]


def predict(p: MlpParams, features) -> np.ndarray:
    return np.where(predict_proba(p, features) >= 0.5, 1, -1)


def labels_to_classes(labels) -> np.ndarray:
    labels = np.asarray(labels)
    if not np.all(np.isin(labels, (1, -1))):
        raise ValueError("labels must be +1 or -1")
    return (labels > 0).astype(np.int64)


def loss_and_grads(p: MlpParams, x, classes) -> tuple[float, list, list]:
    """Mean cross-entropy and its gradients w.r.t. weights and biases."""
    x = _check_input(p, x)
    n = x.shape[0]
    acts = [x]
    h = x
    last = len(p.weights) - 1
    for i, (w, b) in enumerate(zip(p.weights, p.biases)):
        z = h @ w + b
        h = z if i == last else np.maximum(z, 0.0)
        acts.append(h)
    logits = acts[-1]
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=1))
    loss = float(np.mean(log_norm - shifted[np.arange(n), classes]))

    delta = np.exp(shifted - log_norm[:, None])
    delta[np.arange(n), classes] -= 1.0
    delta /= n
    gw = [None] * len(p.weights)
    gb = [None] * len(p.weights)
    for i in range(last, -1, -1):
        gw[i] = acts[i].T @ delta
        gb[i] = delta.sum(axis=0)
        if i:
            delta = (delta @ p.weights[i].T) * (acts[i] > 0)
    return loss, gw, gb


def _canonical_order(x, y):
    # sort rows so the caller's sample order cannot influence training
    keys = np.column_stack([y, x]).T[::-1]
    return np.lexsort(keys)


def train(p: MlpParams, features, labels, cfg: TrainConfig = TrainConfig()) -> MlpParams:
    """Mini-batch Adam on mean cross-entropy; returns the final-epoch parameters.

    ``labels`` are +1/-1.  The returned params carry the per-epoch mean
    training loss in ``loss_trace``.
    """
    x = _check_input(p, features)
    y = labels_to_classes(labels)
    if len(x) == 0:
        raise ValueError("cannot train on an empty sample set")
    if len(y) != len(x):
        raise ValueError("features and labels differ in length")
    order = _canonical_order(x, y)
    x, y = x[order], y[order]

    p = p.copy()
    p.loss_trace = []
    params = p.arrays()
    m = [np.zeros_like(a) for a in params]
    v = [np.zeros_like(a) for a in params]
    b1, b2, eps, lr = cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps, cfg.learning_rate
    rng = np.random.default_rng(cfg.shuffle_seed)
    n = len(x)
    t = 0
    for epoch in range(cfg.epochs):
        perm = rng.permutation(n)
        total = 0.0
        for start in range(0, n, cfg.batch_size):
            idx = perm[start:start + cfg.batch_size]
            loss, gw, gb = loss_and_grads(p, x[idx], y[idx])
            if not np.isfinite(loss):
                raise NumericError(f"non-finite training loss at epoch {epoch}")
            total += loss * len(idx)
            grads = [g for pair in zip(gw, gb) for g in pair]
            t += 1
            bc1 = 1.0 - b1 ** t
            bc2 = 1.0 - b2 ** t
            for a, g, mi, vi in zip(params, grads, m, v):
                mi *= b1
                mi += (1.0 - b1) * g
                vi *= b2
                vi += (1.0 - b2) * (g * g)
                a -= lr * (mi / bc1) / (np.sqrt(vi / bc2) + eps)
        p.loss_trace.append(total / n)
    return p


# -- checkpoints ------------------------------------------------------------

def config_hash(obj) -> str:
    blob = json.dumps(obj, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def save(p: MlpParams, path, train_cfg: TrainConfig | None = None) -> None:
    """Write header + parameter arrays to an ``.npz`` file (bit-exact round trip)."""
    header = {
        "layer_dims": list(p.layer_dims),
        "seed": p.seed,
        "train_config": asdict(train_cfg) if train_cfg else None,
        "config_hash": config_hash(asdict(train_cfg)) if train_cfg else None,
        "loss_trace": p.loss_trace,
    }
    arrays = {f"w{i}": w for i, w in enumerate(p.weights)}
    arrays.update({f"b{i}": b for i, b in enumerate(p.biases)})
    buf = io.BytesIO()
    np.savez(buf, header=np.frombuffer(json.dumps(header).encode(), dtype=np.uint8), **arrays)
    with open(path, "wb") as fh:
        fh.write(buf.getvalue())


def load(path) -> MlpParams:
    with np.load(path) as data:
        header = json.loads(data["header"].tobytes().decode())
        n = len(header["layer_dims"]) - 1
        weights = [data[f"w{i}"] for i in range(n)]
        biases = [data[f"b{i}"] for i in range(n)]
    for w, b, fi, fo in zip(weights, biases, header["layer_dims"][:-1], header["layer_dims"][1:]):
        if w.shape != (fi, fo) or b.shape != (fo,):
            raise ValueError("checkpoint arrays do not match the recorded layer dims")
    return MlpParams(tuple(header["layer_dims"]), weights, biases, header["seed"],
                     list(header.get("loss_trace") or []))
