"""Learnable per-band keep/perturb gate with Gumbel-Softmax sampling.

Each band has a pair of logits (keep, perturb).  Sampling draws Gumbel
noise, forms a temperature-softmax over the noisy pair, and takes the
argmax as the hard decision.  Gradients use the straight-through
estimator: the hard value is treated as the soft perturb-probability in
the backward pass, then the exact softmax Jacobian maps back to logits.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

KEEP, PERTURB = 0, 1


class GateStateError(RuntimeError):
    pass


@dataclass
class GateParams:
    logits: np.ndarray  # (N, 2) float64
    tau: float = 1.0

    def __post_init__(self):
        self.logits = np.asarray(self.logits, dtype=np.float64)
        if self.logits.ndim != 2 or self.logits.shape[1] != 2:
            raise ValueError(f"logits must be (N, 2), got {self.logits.shape}")
        if not np.all(np.isfinite(self.logits)):
            raise ValueError("logits must be finite")
        if self.tau <= 0:
            raise ValueError(f"temperature must be positive, got {self.tau}")

    @property
    def n_bands(self):
        return self.logits.shape[0]


def new_gate_params(n_bands, tau=1.0, perturb_bias=-2.5):
    """Fresh gate; the perturb logits start negative so the initial
    expected selection count sits inside typical budgets."""
    logits = np.zeros((n_bands, 2))
    logits[:, PERTURB] = perturb_bias
    return GateParams(logits, tau)


@dataclass
class GateSample:
    hard: np.ndarray  # (N,) float64 in {0, 1}
    soft: np.ndarray  # (N,) relaxed perturb probability
    noise: np.ndarray  # (N, 2) Gumbel draws
    relaxed: np.ndarray  # (N, 2) full softmax pair, kept for the backward pass
    tau: float


def gumbel(rng, shape):
    u = rng.random(shape)
    # clip away exact 0/1 so the transform stays finite
    u = np.clip(u, 1e-12, 1.0 - 1e-12)
    return -np.log(-np.log(u))


def _relaxed_pair(logits, noise, tau):
    u = (logits + noise) / tau
    u = u - np.max(u, axis=-1, keepdims=True)
    e = np.exp(u)
    return e / np.sum(e, axis=-1, keepdims=True)


def gate_forward(params, rng):
    """Draw one gate sample; deterministic given the rng state."""
    noise = gumbel(rng, (params.n_bands, 2))
    noisy = params.logits + noise
    y = _relaxed_pair(params.logits, noise, params.tau)
    # tie at equal noisy logits resolves toward keep
    hard = (noisy[:, PERTURB] > noisy[:, KEEP]).astype(np.float64)
    return GateSample(hard=hard, soft=y[:, PERTURB], noise=noise,
                      relaxed=y, tau=params.tau)


def gate_forward_batch(params, rng, batch):
    """Vectorized sampling: one independent GateSample per batch item."""
    noise = gumbel(rng, (batch, params.n_bands, 2))
    noisy = params.logits[None] + noise
    y = _relaxed_pair(params.logits[None], noise, params.tau)
    hard = (noisy[..., PERTURB] > noisy[..., KEEP]).astype(np.float64)
    return hard, y


def gate_loss(sample, n_bands, budget):
    """Hinge on the hard selection count: s if s > N*budget else 0."""
    if not (0.0 < budget <= 1.0):
        raise ValueError(f"budget must be in (0, 1], got {budget}")
    s = float(np.sum(sample.hard))
    return s if s > n_bands * budget else 0.0


def gate_loss_grad(hard, n_bands, budget):
    """Straight-through subgradient of gate_loss w.r.t. each gate value."""
    s = np.sum(hard, axis=-1, keepdims=True)
    return np.where(s > n_bands * budget, 1.0, 0.0) * np.ones_like(hard)


def softmax_jacobian_to_logits(relaxed, tau, upstream):
    """Map d(loss)/d(perturb prob) to d(loss)/d(logit pair).

    relaxed: (..., N, 2) softmax pairs; upstream: (..., N).
    """
    y0 = relaxed[..., KEEP]
    y1 = relaxed[..., PERTURB]
    g = upstream * y0 * y1 / tau
    return np.stack([-g, g], axis=-1)


def gate_backward(sample, upstream):
    """Gradient of a scalar loss w.r.t. the logits.

    upstream is d(loss)/d(gate value) per band.  The hard gate is treated
    as identity over the soft perturb-probability (straight-through), then
    the softmax-with-temperature Jacobian reaches the logits.
    """
    if sample.noise is None or sample.relaxed is None:
        raise GateStateError("gate sample lacks its noise record")
    upstream = np.asarray(upstream, dtype=np.float64)
    return softmax_jacobian_to_logits(sample.relaxed, sample.tau, upstream)


def save_gate(path, params):
    with open(path, "wb") as f:
        f.write(f"GATE {params.n_bands}\n".encode("ascii"))
        f.write(params.logits.astype("<f4").tobytes())


def load_gate(path, tau=1.0):
    with open(path, "rb") as f:
        header = f.readline().decode("ascii", errors="replace").split()
        if len(header) != 2 or header[0] != "GATE":
            raise ValueError(f"bad GATE header in {path}")
        n = int(header[1])
        logits = np.frombuffer(f.read(8 * n), dtype="<f4").reshape(n, 2)
    return GateParams(logits.astype(np.float64), tau)
