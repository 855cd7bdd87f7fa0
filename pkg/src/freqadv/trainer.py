"""Alternating defend/attack training loop.

Each iteration draws one source batch and (outside baseline mode) one
target batch.  The defend step updates the task model to minimize the
task loss with the attacker frozen; the attack step then updates the
attacker's gate logits by gradient ascent on (task loss - gate budget
hinge - mid-frequency reconstruction loss) with the task model frozen.
The defend objective deliberately excludes the gate and reconstruction
terms; those belong to the attacker only.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field

import numpy as np

from . import attacker as attacker_mod
from . import gate as gate_mod
from . import model as model_mod
from . import uda

DIVERGENCE_LIMIT = 1e3

METRICS_HEADER = ["iter", "train_loss", "src_test_loss", "tgt_test_loss",
                  "tgt_acc", "gate_count", "l_gat", "l_rec", "lr"]


@dataclass
class OptimConfig:
    lr: float
    momentum: float = 0.9
    weight_decay: float = 0.0
    poly_power: float = 0.9
    max_iter: int = 1

    def __post_init__(self):
        if self.lr <= 0:
            raise ValueError("lr must be positive")
        if not (0.0 <= self.momentum < 1.0):
            raise ValueError("momentum must be in [0, 1)")


class SgdState:
    """Per-parameter momentum buffers for one optimizer instance."""

    def __init__(self, config):
        self.config = config
        self.buffers = None

    def _init_buffers(self, params):
        self.buffers = [np.zeros_like(p) for p in params]


def poly_lr(base_lr, iteration, max_iter, power):
    return base_lr * (1.0 - iteration / max_iter) ** power


def sgd_step(params, grads, state, iteration):
    """In-place SGD update with momentum, weight decay, polynomial decay."""
    cfg = state.config
    if state.buffers is None:
        state._init_buffers(params)
    lr = poly_lr(cfg.lr, iteration, cfg.max_iter, cfg.poly_power)
    for p, g, buf in zip(params, grads, state.buffers):
        g = g + cfg.weight_decay * p
        buf *= cfg.momentum
        buf += g
        p -= lr * buf
    return params


@dataclass
class RunConfig:
    mode: str = "baseline"
    iters: int = 5000
    batch: int = 32
    lr: float = 0.05
    momentum: float = 0.9
    weight_decay: float = 1e-4
    poly_power: float = 0.9
    n_bands: int = 16
    budget: float = 0.1
    tau: float = 1.0
    rec_band: tuple = (1.0 / 6.0, 0.5)
    unsup: str = "self_train"
    lam: float = 0.5
    pseudo_threshold: float = 0.99
    seed: int = 0
    model_kind: str = "mlp"
    hidden: int = 64
    attacker_lr: float = 1e-2
    attacker_momentum: float = 0.9
    log_interval: int = 25
    eval_interval: int = 100
    pseudo_refresh: int = 0  # 0 -> one pass over the target train set
    target_warmup: int = 1000  # iters before the target loss switches on


@dataclass
class RunMetrics:
    rows: list = field(default_factory=list)

    def append(self, **kw):
        self.rows.append([kw[k] for k in METRICS_HEADER])

    def column(self, name):
        i = METRICS_HEADER.index(name)
        return np.asarray([r[i] for r in self.rows], dtype=np.float64)

    def to_csv(self, path):
        tmp = str(path) + ".tmp"
        with open(tmp, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(METRICS_HEADER)
            for row in self.rows:
                w.writerow([row[0]] + [f"{v:.10g}" for v in row[1:]])
        os.replace(tmp, path)

    @classmethod
    def from_csv(cls, path):
        m = cls()
        with open(path, newline="") as f:
            r = csv.reader(f)
            header = next(r)
            if header != METRICS_HEADER:
                raise ValueError(f"unexpected metrics header in {path}")
            for row in r:
                m.rows.append([int(row[0])] + [float(v) for v in row[1:]])
        return m


@dataclass
class TrainResult:
    model: model_mod.TaskModel
    attacker: attacker_mod.AttackerParams
    metrics: RunMetrics


def evaluate(task_model, dataset):
    """Clean-input mean loss and accuracy; no attacker at test time."""
    if len(dataset) == 0:
        raise ValueError("cannot evaluate on an empty dataset")
    flat = dataset.images.reshape(len(dataset), -1)
    pred, _ = model_mod.forward_batch(task_model, flat)
    loss = model_mod.batch_ce(pred.probs, dataset.labels)
    acc = float(np.mean(np.argmax(pred.probs, axis=-1) == dataset.labels))
    return loss, acc


def compute_pseudo_labels(task_model, images, threshold):
    flat = images.reshape(images.shape[0], -1)
    pred, _ = model_mod.forward_batch(task_model, flat)
    conf = np.max(pred.probs, axis=-1)
    return np.where(conf >= threshold, np.argmax(pred.probs, axis=-1), -1)


def _combine_grads(src_grads, tgt_grads, lam):
    if tgt_grads is None:
        return src_grads
    return [a + lam * b for a, b in zip(src_grads, tgt_grads)]


def _attack_phase_grads(batch, task_model, labels, loss_kind, atk):
    """Per-sample attacker logit gradients for one attacked batch.

    Returns (logit_grads (B, N, 2) for ascent, mean gate count,
    mean gate hinge, mean rec loss).
    """
    flat = batch.image.reshape(batch.image.shape[0], -1)
    b = flat.shape[0]
    _, cache = model_mod.forward_batch(task_model, flat)
    _, dx = model_mod.backward_batch(task_model, cache, loss_kind, labels)
    task_grads = (dx * b).reshape(batch.image.shape)  # undo the 1/B mean

    rec_losses, rec_grads = attacker_mod.rec_batch(batch.source, batch.image,
                                                   atk.rec_band)
    # ascent direction on (task - gat - rec); rec_grads is d(rec)/d(x_adv)
    input_grads = task_grads - rec_grads
    gv = attacker_mod.gate_grads_batch(input_grads, batch.raw,
                                       batch.diff_spec, batch.n_bands)
    gv -= gate_mod.gate_loss_grad(batch.hard, batch.n_bands, atk.budget)
    logit_grads = gate_mod.softmax_jacobian_to_logits(batch.relaxed,
                                                      atk.gate.tau, gv)
    counts = np.sum(batch.hard, axis=-1)
    hinges = np.where(counts > batch.n_bands * atk.budget, counts, 0.0)
    return (logit_grads, float(np.mean(counts)), float(np.mean(hinges)),
            float(np.mean(rec_losses)))


def train(config, bundle):
    """Run the full alternating loop on a generated data bundle."""
    rng = np.random.default_rng(config.seed)
    loss_cfg = uda.LossConfig(config.mode, config.unsup, config.lam,
                              config.pseudo_threshold)
    img_shape = bundle.source_train.images.shape[1:]
    input_dim = int(np.prod(img_shape))
    n_classes = int(np.max(bundle.source_train.labels)) + 1
    task_model = model_mod.init_model(config.model_kind, input_dim, n_classes,
                                      rng, config.hidden)
    atk = attacker_mod.new_attacker(config.n_bands, config.budget, config.tau,
                                    config.rec_band)
    pool = attacker_mod.ReferencePool(bundle.target_train.images)

    state_f = SgdState(OptimConfig(config.lr, config.momentum,
                                   config.weight_decay, config.poly_power,
                                   config.iters))
    # constant lr for the attacker (poly power 0), no weight decay
    state_a = SgdState(OptimConfig(config.attacker_lr,
                                   config.attacker_momentum, 0.0, 0.0,
                                   config.iters))

    n_src = len(bundle.source_train)
    n_tgt = len(bundle.target_train)
    refresh = config.pseudo_refresh or max(1, n_tgt // config.batch)
    pseudo_bank = None

    metrics = RunMetrics()
    src_eval = tgt_eval = (float("nan"), float("nan"))
    last_gate_count = last_gat = last_rec = 0.0

    for it in range(config.iters):
        if (loss_cfg.uses_target and loss_cfg.unsup == "self_train"
                and it % refresh == 0):
            pseudo_bank = compute_pseudo_labels(
                task_model, bundle.target_train.images, config.pseudo_threshold)

        src_idx = rng.integers(0, n_src, size=config.batch)
        xs = bundle.source_train.images[src_idx]
        ys = bundle.source_train.labels[src_idx]
        target_on = loss_cfg.uses_target and it >= config.target_warmup
        if loss_cfg.uses_target:
            tgt_idx = rng.integers(0, n_tgt, size=config.batch)
            xt = bundle.target_train.images[tgt_idx]
        else:
            tgt_idx = None
            xt = None

        # ---- defend: update F, attacker frozen ----
        src_res = uda.source_loss(xs, ys, task_model, atk, pool, loss_cfg, rng)
        if target_on:
            pl = pseudo_bank[tgt_idx] if pseudo_bank is not None else None
            tgt_res = uda.target_loss(xt, task_model, atk, pool, loss_cfg,
                                      rng, pseudo_labels=pl)
            train_loss = uda.total_task_loss(src_res.loss, tgt_res.loss,
                                             config.lam)
            grads = _combine_grads(src_res.param_grads, tgt_res.param_grads,
                                   config.lam)
        else:
            train_loss = src_res.loss
            grads = src_res.param_grads

        if not np.isfinite(train_loss) or train_loss > DIVERGENCE_LIMIT:
            raise RuntimeError(f"training diverged at iter {it}: "
                               f"loss={train_loss}")
        sgd_step(task_model.params, grads, state_f, it)

        # ---- attack: update the gate, F frozen ----
        if loss_cfg.mode != "baseline":
            logit_grad = np.zeros_like(atk.gate.logits)
            stats = []
            if loss_cfg.attacks_source:
                ab = attacker_mod.attack_batch(xs, pool, atk, rng)
                g, cnt, gat, rec = _attack_phase_grads(ab, task_model, ys,
                                                       "ce", atk)
                logit_grad += np.mean(g, axis=0)
                stats.append((cnt, gat, rec))
            if loss_cfg.attacks_target and target_on:
                pl = pseudo_bank[tgt_idx] if pseudo_bank is not None else None
                ab = attacker_mod.attack_batch(xt, pool, atk, rng)
                if loss_cfg.unsup == "entropy":
                    g, cnt, gat, rec = _attack_phase_grads(
                        ab, task_model, None, "entropy", atk)
                    logit_grad += config.lam * np.mean(g, axis=0)
                elif pl is not None and np.any(pl >= 0):
                    keep = pl >= 0
                    sub = attacker_mod.BatchAttack(
                        ab.image[keep], ab.raw[keep], ab.source[keep],
                        ab.hard[keep], ab.relaxed[keep],
                        ab.ref_indices[keep], ab.diff_spec[keep], ab.n_bands)
                    g, cnt, gat, rec = _attack_phase_grads(
                        sub, task_model, pl[keep], "ce", atk)
                    logit_grad += config.lam * np.mean(g, axis=0)
                else:
                    cnt = float(np.mean(np.sum(ab.hard, axis=-1)))
                    gat = rec = 0.0
                stats.append((cnt, gat, rec))
            # ascend the objective: step along -(-grad)
            sgd_step([atk.gate.logits], [-logit_grad], state_a, it)
            if stats:
                last_gate_count = float(np.mean([s[0] for s in stats]))
                last_gat = float(np.mean([s[1] for s in stats]))
                last_rec = float(np.mean([s[2] for s in stats]))

        # ---- metrics ----
        due_eval = it % config.eval_interval == 0 or it == config.iters - 1
        if due_eval:
            src_eval = evaluate(task_model, bundle.source_test)
            tgt_eval = evaluate(task_model, bundle.target_test)
        if it % config.log_interval == 0 or it == config.iters - 1:
            metrics.append(iter=it, train_loss=train_loss,
                           src_test_loss=src_eval[0],
                           tgt_test_loss=tgt_eval[0], tgt_acc=tgt_eval[1],
                           gate_count=last_gate_count, l_gat=last_gat,
                           l_rec=last_rec,
                           lr=poly_lr(config.lr, it, config.iters,
                                      config.poly_power))

    return TrainResult(task_model, atk, metrics)
