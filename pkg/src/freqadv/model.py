"""Small differentiable classifiers with manual forward/backward.

Two architectures: a linear softmax classifier and a one-hidden-layer
ReLU MLP.  backward() returns exact gradients for both the parameters
and the input, which the frequency attacker needs to steer its gate.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

LINEAR, MLP = "linear", "mlp"


@dataclass
class TaskModel:
    kind: str
    input_dim: int
    n_classes: int
    params: list = field(default_factory=list)  # [W1, b1(, W2, b2)]
    hidden: int = 0

    def copy(self):
        return TaskModel(self.kind, self.input_dim, self.n_classes,
                         [p.copy() for p in self.params], self.hidden)


def init_model(kind, input_dim, n_classes, rng, hidden=64):
    """He-style scaled-normal init, seeded through rng."""
    def w(fan_out, fan_in):
        return rng.standard_normal((fan_out, fan_in)) * np.sqrt(2.0 / fan_in)

    if kind == LINEAR:
        params = [w(n_classes, input_dim), np.zeros(n_classes)]
        return TaskModel(kind, input_dim, n_classes, params)
    if kind == MLP:
        params = [w(hidden, input_dim), np.zeros(hidden),
                  w(n_classes, hidden), np.zeros(n_classes)]
        return TaskModel(kind, input_dim, n_classes, params, hidden)
    raise ValueError(f"unknown model kind: {kind}")


def _softmax(logits):
    z = logits - np.max(logits, axis=-1, keepdims=True)
    e = np.exp(z)
    return e / np.sum(e, axis=-1, keepdims=True)


def _log_softmax(logits):
    z = logits - np.max(logits, axis=-1, keepdims=True)
    return z - np.log(np.sum(np.exp(z), axis=-1, keepdims=True))


@dataclass
class Prediction:
    logits: np.ndarray
    probs: np.ndarray


@dataclass
class ForwardCache:
    x: np.ndarray
    probs: np.ndarray
    logits: np.ndarray
    hidden_pre: np.ndarray = None
    hidden_act: np.ndarray = None


def forward_batch(model, x):
    """x: (B, D) -> (Prediction over (B, K), cache for backward_batch)."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != model.input_dim:
        raise ValueError(f"input width {x.shape[-1]} != model width {model.input_dim}")
    if model.kind == LINEAR:
        logits = x @ model.params[0].T + model.params[1]
        probs = _softmax(logits)
        cache = ForwardCache(x, probs, logits)
    else:
        z1 = x @ model.params[0].T + model.params[1]
        a1 = np.maximum(z1, 0.0)
        logits = a1 @ model.params[2].T + model.params[3]
        probs = _softmax(logits)
        cache = ForwardCache(x, probs, logits, z1, a1)
    return Prediction(logits, probs), cache


def forward(model, image):
    """Single flattened image -> Prediction."""
    x = np.asarray(image, dtype=np.float64).reshape(1, -1)
    pred, _ = forward_batch(model, x)
    return Prediction(pred.logits[0], pred.probs[0])


def ce_loss(pred, label):
    logp = _log_softmax(pred.logits)
    return float(-logp[..., label])


def entropy(pred):
    logp = _log_softmax(pred.logits)
    return float(-np.sum(np.exp(logp) * logp))


def pseudo_label(pred, threshold):
    """argmax class if confident enough, else None (abstain)."""
    k = int(np.argmax(pred.probs))
    return k if pred.probs[k] >= threshold else None


def _dlogits_ce(probs, labels):
    """Per-sample gradient of -log p_y w.r.t. logits."""
    g = probs.copy()
    g[np.arange(len(labels)), labels] -= 1.0
    return g


def _dlogits_entropy(probs, logits):
    """Per-sample gradient of -sum p log p w.r.t. logits."""
    logp = _log_softmax(logits)
    h = -np.sum(probs * logp, axis=-1, keepdims=True)
    return -probs * (logp + h)


def backward_batch(model, cache, loss_kind, labels=None, sample_weight=None):
    """Mean-loss gradients over a batch.

    loss_kind: "ce" (needs labels) or "entropy".  sample_weight, if given,
    reweights each sample's contribution; weights are normalized by their
    sum (guarded to avoid division by zero when everything is masked out).

    Returns (param_grads, input_grads) where input_grads is per-sample
    (B, D) already scaled by the sample weights.
    """
    b = cache.x.shape[0]
    if loss_kind == "ce":
        dlogits = _dlogits_ce(cache.probs, np.asarray(labels))
    elif loss_kind == "entropy":
        dlogits = _dlogits_entropy(cache.probs, cache.logits)
    else:
        raise ValueError(f"unknown loss kind: {loss_kind}")

    if sample_weight is None:
        dlogits = dlogits / b
    else:
        w = np.asarray(sample_weight, dtype=np.float64)
        total = np.sum(w)
        scale = w / total if total > 0 else np.zeros_like(w)
        dlogits = dlogits * scale[:, None]

    if model.kind == LINEAR:
        gw = dlogits.T @ cache.x
        gb = np.sum(dlogits, axis=0)
        dx = dlogits @ model.params[0]
        return [gw, gb], dx
    d_a1 = dlogits @ model.params[2]
    d_z1 = d_a1 * (cache.hidden_pre > 0.0)
    gw2 = dlogits.T @ cache.hidden_act
    gb2 = np.sum(dlogits, axis=0)
    gw1 = d_z1.T @ cache.x
    gb1 = np.sum(d_z1, axis=0)
    dx = d_z1 @ model.params[0]
    return [gw1, gb1, gw2, gb2], dx


def backward(model, image, loss_kind, label=None):
    """Single-image gradients: (param grads, input gradient)."""
    x = np.asarray(image, dtype=np.float64).reshape(1, -1)
    _, cache = forward_batch(model, x)
    labels = None if label is None else [label]
    grads, dx = backward_batch(model, cache, loss_kind, labels)
    return grads, dx[0]


def batch_ce(probs, labels):
    """Mean cross-entropy from already-computed probabilities."""
    logp = np.log(np.clip(probs[np.arange(len(labels)), labels], 1e-300, None))
    return float(-np.mean(logp))


def save_model(path, model):
    dims = [model.input_dim, model.hidden, model.n_classes] if model.kind == MLP \
        else [model.input_dim, model.n_classes]
    with open(path, "wb") as f:
        f.write(("MODEL " + model.kind + " " + " ".join(map(str, dims)) + "\n").encode("ascii"))
        for p in model.params:
            f.write(p.astype("<f4").tobytes())


def load_model(path):
    with open(path, "rb") as f:
        header = f.readline().decode("ascii", errors="replace").split()
        if len(header) < 3 or header[0] != "MODEL":
            raise ValueError(f"bad MODEL header in {path}")
        kind = header[1]
        dims = [int(t) for t in header[2:]]
        if kind == LINEAR:
            d, k = dims
            shapes = [(k, d), (k,)]
            m = TaskModel(kind, d, k)
        elif kind == MLP:
            d, h, k = dims
            shapes = [(h, d), (h,), (k, h), (k,)]
            m = TaskModel(kind, d, k, hidden=h)
        else:
            raise ValueError(f"unknown model kind in checkpoint: {kind}")
        for s in shapes:
            n = int(np.prod(s))
            m.params.append(np.frombuffer(f.read(4 * n), dtype="<f4")
                            .reshape(s).astype(np.float64))
    return m
