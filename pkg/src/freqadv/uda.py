"""Domain-adaptation training losses over optionally attacked inputs.

Modes:
  baseline  - supervised source loss only, no attacker anywhere
  faa_s     - attack source batches; target loss on clean inputs
  faa_t     - attack target batches; source loss on clean inputs
  faa_full  - attack both
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import attacker as attacker_mod
from . import model as model_mod

MODES = ("baseline", "faa_s", "faa_t", "faa_full")
UNSUP_KINDS = ("self_train", "entropy")


@dataclass
class LossConfig:
    mode: str = "baseline"
    unsup: str = "self_train"
    lam: float = 1.0
    pseudo_threshold: float = 0.9

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.unsup not in UNSUP_KINDS:
            raise ValueError(f"unknown unsupervised loss {self.unsup!r}")
        if self.lam < 0:
            raise ValueError("lambda must be >= 0")

    @property
    def attacks_source(self):
        return self.mode in ("faa_s", "faa_full")

    @property
    def attacks_target(self):
        return self.mode in ("faa_t", "faa_full")

    @property
    def uses_target(self):
        return self.mode != "baseline"


@dataclass
class LossResult:
    loss: float
    param_grads: list
    batch: object = None        # BatchAttack when the attacker ran, else None
    inputs: np.ndarray = None   # model-facing (B, C, H, W)
    n_used: int = 0
    empty: bool = False


def _flatten(images):
    return images.reshape(images.shape[0], -1)


def source_loss(images, labels, task_model, atk, pool, config, rng):
    """Mean cross-entropy on (optionally attacked) labeled source images."""
    batch = None
    inputs = np.asarray(images, dtype=np.float64)
    if config.attacks_source:
        batch = attacker_mod.attack_batch(inputs, pool, atk, rng)
        inputs = batch.image
    pred, cache = model_mod.forward_batch(task_model, _flatten(inputs))
    loss = model_mod.batch_ce(pred.probs, labels)
    grads, _ = model_mod.backward_batch(task_model, cache, "ce", labels)
    return LossResult(loss, grads, batch, inputs, n_used=len(labels))


def target_loss(images, task_model, atk, pool, config, rng, pseudo_labels=None):
    """Unsupervised loss on (optionally attacked) target images.

    self_train: cross-entropy against pseudo labels (-1 = abstain,
    excluded from the mean; all-abstain returns 0 with empty=True).
    entropy: mean prediction entropy, no labels involved.
    """
    inputs = np.asarray(images, dtype=np.float64)
    batch = None
    if config.attacks_target:
        batch = attacker_mod.attack_batch(inputs, pool, atk, rng)
        inputs = batch.image
    flat = _flatten(inputs)
    pred, cache = model_mod.forward_batch(task_model, flat)

    if config.unsup == "entropy":
        logp = np.log(np.clip(pred.probs, 1e-300, None))
        loss = float(-np.mean(np.sum(pred.probs * logp, axis=-1)))
        grads, _ = model_mod.backward_batch(task_model, cache, "entropy")
        return LossResult(loss, grads, batch, inputs, n_used=flat.shape[0])

    if pseudo_labels is None:
        # fall back to on-the-fly labels from the clean inputs
        clean_pred, _ = model_mod.forward_batch(task_model, _flatten(images))
        conf = np.max(clean_pred.probs, axis=-1)
        pseudo_labels = np.where(conf >= config.pseudo_threshold,
                                 np.argmax(clean_pred.probs, axis=-1), -1)
    pseudo_labels = np.asarray(pseudo_labels)
    accepted = pseudo_labels >= 0
    n_used = int(np.sum(accepted))
    if n_used == 0:
        zero = [np.zeros_like(p) for p in task_model.params]
        return LossResult(0.0, zero, batch, inputs, n_used=0, empty=True)
    safe_labels = np.where(accepted, pseudo_labels, 0)
    logp = np.log(np.clip(pred.probs[np.arange(len(safe_labels)), safe_labels],
                          1e-300, None))
    loss = float(-np.sum(logp * accepted) / n_used)
    grads, _ = model_mod.backward_batch(task_model, cache, "ce", safe_labels,
                                        sample_weight=accepted.astype(np.float64))
    return LossResult(loss, grads, batch, inputs, n_used=n_used)


def total_task_loss(source, target, lam):
    """Combined scalar: source + lam * target."""
    return float(source + lam * target)
