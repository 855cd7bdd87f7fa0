"""Frequency-band adversarial attacker.

The attacker swaps gated annular bands of an input's spectrum with the
matching bands of a randomly chosen reference image, then inverts back to
pixel space.  Because the swap is linear in the gate values,

    x_adv = x + sum_n g_n * delta_n,  delta_n = idft2(band_n(z_ref - z)),

the gradient of any pixel-space loss w.r.t. gate value n is the inner
product of the loss's input gradient with delta_n; it is evaluated in the
frequency domain (one forward transform plus banded reductions) instead
of materializing every delta.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import gate as gate_mod
from . import spectral
from .spectral import (DimensionError, band_index_map, bandpass, dft2, idft2,
                       IMAG_RESIDUE_TOL)


class AttackStateError(RuntimeError):
    pass


# per-image invocation counter; tests use it to assert which training modes
# actually reach the attacker
attack_call_count = 0


def reset_attack_counter():
    global attack_call_count
    attack_call_count = 0


@dataclass
class AttackerParams:
    gate: gate_mod.GateParams
    n_bands: int
    budget: float
    rec_band: tuple = (1.0 / 6.0, 0.5)

    def __post_init__(self):
        if self.n_bands < 1:
            raise ValueError(f"n_bands must be >= 1, got {self.n_bands}")
        if not (0.0 < self.budget <= 1.0):
            raise ValueError(f"budget must be in (0, 1], got {self.budget}")
        lo, hi = self.rec_band
        if not (0.0 <= lo < hi <= 1.0):
            raise ValueError(f"bad rec_band ({lo}, {hi})")
        if self.gate.n_bands != self.n_bands:
            raise ValueError("gate size does not match n_bands")


def new_attacker(n_bands, budget=0.1, tau=1.0, rec_band=(1.0 / 6.0, 0.5)):
    return AttackerParams(gate_mod.new_gate_params(n_bands, tau),
                          n_bands, budget, rec_band)


@dataclass
class ReferencePool:
    images: np.ndarray  # (M, C, H, W)

    def __post_init__(self):
        self.images = np.asarray(self.images, dtype=np.float64)
        if self.images.ndim != 4 or self.images.shape[0] == 0:
            raise AttackStateError("reference pool must be a non-empty (M, C, H, W) stack")

    def __len__(self):
        return self.images.shape[0]


@dataclass
class AdversarialSample:
    image: np.ndarray       # clamped copy, model-facing
    raw: np.ndarray         # unclamped inverse transform
    source: np.ndarray      # the attacked input x
    gate: gate_mod.GateSample
    ref_index: int
    diff_spec: np.ndarray   # (C, H, W) complex, z_ref - z
    n_bands: int

    def delta(self, n):
        """Materialize delta_n = idft2 of band n of (z_ref - z)."""
        if self.diff_spec is None:
            raise AttackStateError("sample carries no cached spectral difference")
        idx = band_index_map(self.diff_spec.shape[-1], self.n_bands)
        out = np.zeros_like(self.source)
        for c in range(self.diff_spec.shape[0]):
            band = np.where(idx == n, self.diff_spec[c], 0.0)
            out[c] = idft2(band)
        return out


def _fft2_centered(x):
    return np.fft.fftshift(np.fft.fft2(x, axes=(-2, -1)), axes=(-2, -1))


def _ifft2_centered(z):
    out = np.fft.ifft2(np.fft.ifftshift(z, axes=(-2, -1)), axes=(-2, -1))
    re_scale = max(float(np.max(np.abs(out.real))), 1.0)
    im_max = float(np.max(np.abs(out.imag)))
    if im_max > IMAG_RESIDUE_TOL * re_scale:
        raise ValueError(f"imaginary residue {im_max:.3e} exceeds tolerance")
    return out.real


def blend_batch(x, refs, hard, n_bands):
    """Swap selected bands of each image with the reference's bands.

    x, refs: (B, C, H, W); hard: (B, N) in {0, 1}.
    Returns (raw, clamped, diff_spec).
    """
    x = np.asarray(x, dtype=np.float64)
    refs = np.asarray(refs, dtype=np.float64)
    if x.shape != refs.shape:
        raise DimensionError(f"input/reference shape mismatch: {x.shape} vs {refs.shape}")
    h = x.shape[-1]
    if x.shape[-2] != h:
        raise DimensionError(f"images must be square, got {x.shape}")
    idx = band_index_map(h, n_bands)
    z = _fft2_centered(x)
    z_ref = _fft2_centered(refs)
    diff = z_ref - z
    mask = np.asarray(hard)[:, idx]              # (B, H, W)
    raw = _ifft2_centered(z + mask[:, None] * diff)
    return raw, np.clip(raw, 0.0, 1.0), diff


def attack(x, pool, params, rng):
    """Generate one adversarial sample for a single (C, H, W) image."""
    global attack_call_count
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 2:
        x = x[None]
    ref_index = int(rng.integers(0, len(pool)))
    ref = pool.images[ref_index]
    if ref.shape != x.shape:
        raise DimensionError(f"reference shape {ref.shape} != input shape {x.shape}")
    sample = gate_mod.gate_forward(params.gate, rng)
    raw, clamped, diff = blend_batch(x[None], ref[None], sample.hard[None],
                                     params.n_bands)
    attack_call_count += 1
    return AdversarialSample(image=clamped[0], raw=raw[0], source=x,
                             gate=sample, ref_index=ref_index,
                             diff_spec=diff[0], n_bands=params.n_bands)


@dataclass
class BatchAttack:
    image: np.ndarray      # clamped (B, C, H, W)
    raw: np.ndarray
    source: np.ndarray
    hard: np.ndarray       # (B, N)
    relaxed: np.ndarray    # (B, N, 2)
    ref_indices: np.ndarray
    diff_spec: np.ndarray  # (B, C, H, W) complex
    n_bands: int


def attack_batch(x, pool, params, rng):
    """Vectorized :func:`attack` over a batch: fresh reference and gate
    sample per image, all drawn from the one rng in a fixed order."""
    global attack_call_count
    x = np.asarray(x, dtype=np.float64)
    b = x.shape[0]
    ref_indices = rng.integers(0, len(pool), size=b)
    refs = pool.images[ref_indices]
    if refs.shape != x.shape:
        raise DimensionError(f"reference shape {refs.shape} != input shape {x.shape}")
    hard, relaxed = gate_mod.gate_forward_batch(params.gate, rng, b)
    raw, clamped, diff = blend_batch(x, refs, hard, params.n_bands)
    attack_call_count += b
    return BatchAttack(image=clamped, raw=raw, source=x, hard=hard,
                       relaxed=relaxed, ref_indices=ref_indices,
                       diff_spec=diff, n_bands=params.n_bands)


def rec_loss(x, x_faa, rec_band):
    """Mean absolute mid-frequency difference between x and its attack."""
    x = np.atleast_3d(np.asarray(x, dtype=np.float64))
    x_faa = np.atleast_3d(np.asarray(x_faa, dtype=np.float64))
    if x.shape != x_faa.shape:
        raise DimensionError(f"shape mismatch: {x.shape} vs {x_faa.shape}")
    lo, hi = rec_band
    total = 0.0
    for c in range(x.shape[0]):
        total += np.sum(np.abs(bandpass(x[c], lo, hi) - bandpass(x_faa[c], lo, hi)))
    return float(total / x.size)


def attack_objective(task_loss, gate_loss, rec_loss_value):
    """Attacker's objective (to be maximized): task - gate - rec."""
    vals = (task_loss, gate_loss, rec_loss_value)
    if not all(np.isfinite(v) for v in vals):
        raise FloatingPointError(f"non-finite objective inputs: {vals}")
    return float(task_loss - gate_loss - rec_loss_value)


@lru_cache(maxsize=16)
def _band_indicator(size, n_bands):
    idx = band_index_map(size, n_bands)
    ind = np.zeros((n_bands, size * size))
    ind[idx.ravel(), np.arange(size * size)] = 1.0
    ind.setflags(write=False)
    return ind


def gate_grads_batch(input_grads, raw, diff_spec, n_bands):
    """d(loss)/d(gate value) per image from pixel-space input gradients.

    input_grads, raw: (B, C, H, W); diff_spec: (B, C, H, W) complex.
    The clamp contributes a pass-through mask: gradient is zeroed wherever
    the raw value left [0, 1].
    """
    h = raw.shape[-1]
    clamp_mask = (raw >= 0.0) & (raw <= 1.0)
    g = np.asarray(input_grads) * clamp_mask
    spec = _fft2_centered(g)
    contrib = (spec * np.conj(diff_spec)).real   # (B, C, H, W)
    b, c = contrib.shape[:2]
    ind = _band_indicator(h, n_bands)
    sums = contrib.reshape(b * c, h * h) @ ind.T
    return sums.reshape(b, c, n_bands).sum(axis=1) / (h * h)


def attack_backward(sample, grad_wrt_input):
    """Gradient w.r.t. the sample's gate values for a single image."""
    if sample.diff_spec is None:
        raise AttackStateError("sample carries no cached spectral difference")
    g = np.asarray(grad_wrt_input, dtype=np.float64)
    if g.ndim == 2:
        g = g[None]
    return gate_grads_batch(g[None], sample.raw[None], sample.diff_spec[None],
                            sample.n_bands)[0]


def _bandpass_batch(x, lo, hi):
    mask = spectral.bandpass_mask(x.shape[-1], lo, hi)
    z = _fft2_centered(x)
    z *= mask
    return _ifft2_centered(z)


def rec_batch(x, clamped, rec_band):
    """Vectorized rec loss and its input gradient over a batch.

    Returns (losses (B,), grads (B, C, H, W)) where grads is
    d(rec_loss)/d(adversarial image before the clamp mask); the band-pass
    filter is an orthogonal projection, hence self-adjoint, and the clamp
    mask is applied later by gate_grads_batch.
    """
    lo, hi = rec_band
    b, c, h, w = x.shape
    m = float(c * h * w)
    u = _bandpass_batch(x, lo, hi) - _bandpass_batch(clamped, lo, hi)
    losses = np.sum(np.abs(u), axis=(1, 2, 3)) / m
    grads = -_bandpass_batch(np.sign(u), lo, hi) / m
    return losses, grads


def rec_input_grads(x, clamped, rec_band):
    """Single-batch convenience wrapper around :func:`rec_batch` grads."""
    return rec_batch(x, clamped, rec_band)[1]
