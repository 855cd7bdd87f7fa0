"""Seeded synthetic two-domain classification data.

Class semantics live in low frequencies (smoothed shape templates,
normalized radius <= 1/3); the domain gap is band-limited high-frequency
texture plus a brightness offset, so swapping high bands with a
target-domain reference genuinely moves an image across the gap.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from . import imageio
from .spectral import bandpass

SEMANTIC_BAND_HI = 1.0 / 3.0


class ConfigError(ValueError):
    pass


@dataclass
class DomainSpec:
    texture_band: tuple = (0.6, 0.8)
    texture_amplitude: float = 0.1
    texture_seed: int = 0
    brightness_offset: float = 0.0
    class_correlated: bool = False

    def __post_init__(self):
        lo, hi = self.texture_band
        if not (0.0 <= lo < hi <= 1.0):
            raise ConfigError(f"bad texture band ({lo}, {hi})")
        if lo < SEMANTIC_BAND_HI:
            raise ConfigError(
                f"texture band ({lo}, {hi}) overlaps the semantic band "
                f"(0, {SEMANTIC_BAND_HI:.4f}]")
        if self.texture_amplitude < 0:
            raise ConfigError("texture amplitude must be >= 0")


@dataclass
class Dataset:
    images: np.ndarray  # (M, C, H, W) float64 in [0, 1]
    labels: np.ndarray  # (M,) int; -1 marks unlabeled

    def __len__(self):
        return self.images.shape[0]


@dataclass
class DataBundle:
    source_train: Dataset
    source_test: Dataset
    target_train: Dataset   # labels stripped (-1); held out in target_test
    target_test: Dataset


def _shape_template(class_idx, size):
    """Binary foreground mask for one of the K shape classes."""
    c = (size - 1) / 2.0
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    r = np.hypot(yy - c, xx - c)
    thick = max(2.0, size / 9.0)
    k = class_idx % 4
    if k == 0:      # disk
        return (r <= size * 0.22).astype(np.float64)
    if k == 1:      # horizontal bar
        return ((np.abs(yy - c) <= thick) & (np.abs(xx - c) <= size * 0.32)).astype(np.float64)
    if k == 2:      # cross
        arm = size * 0.3
        h = (np.abs(yy - c) <= thick) & (np.abs(xx - c) <= arm)
        v = (np.abs(xx - c) <= thick) & (np.abs(yy - c) <= arm)
        return (h | v).astype(np.float64)
    ring = (r >= size * 0.16) & (r <= size * 0.27)  # ring
    return ring.astype(np.float64)


def _smooth_templates(n_classes, size):
    """Low-pass templates: semantic content strictly inside the low band."""
    templates = []
    for k in range(n_classes):
        raw = 0.35 + 0.4 * _shape_template(k, size)
        templates.append(bandpass(raw, 0.0, SEMANTIC_BAND_HI))
    return templates


def _unit_texture(rng, size, band):
    """Unit-RMS band-limited noise pattern."""
    tex = bandpass(rng.standard_normal((size, size)), band[0], band[1])
    rms = np.sqrt(np.mean(tex ** 2))
    return tex / rms if rms > 0 else tex


def domain_textures(spec, n_classes, size):
    """Fixed texture patterns characterizing a class_correlated domain.

    One pattern per class: the texture then predicts the label, a shortcut
    that does not transfer.  Non-correlated domains draw a fresh pattern
    per image instead (see _make_set) and get no fixed patterns here.
    """
    if not spec.class_correlated:
        return []
    rng = np.random.default_rng(spec.texture_seed)
    return [_unit_texture(rng, size, spec.texture_band) for _ in range(n_classes)]


def _make_set(seed_seq, templates, per_class, spec, size, max_shift):
    n_classes = len(templates)
    textures = domain_textures(spec, n_classes, size)
    images = np.empty((n_classes * per_class, 1, size, size))
    labels = np.empty(n_classes * per_class, dtype=np.int64)
    children = seed_seq.spawn(n_classes * per_class)
    i = 0
    for k in range(n_classes):
        for _ in range(per_class):
            rng = np.random.default_rng(children[i])
            dy, dx = rng.integers(-max_shift, max_shift + 1, size=2)
            # circular shift keeps the semantic band support exact
            img = np.roll(templates[k], (int(dy), int(dx)), axis=(0, 1))
            jitter = 0.8 + 0.4 * rng.random()
            if spec.class_correlated:
                tex = textures[k]
            else:
                tex = _unit_texture(rng, size, spec.texture_band) \
                    if spec.texture_amplitude > 0 else 0.0
            img = img + spec.texture_amplitude * jitter * tex
            img = np.clip(img + spec.brightness_offset, 0.0, 1.0)
            images[i, 0] = img
            labels[i] = k
            i += 1
    return Dataset(images, labels)


def generate(seed, per_class, n_classes, source_spec, target_spec,
             size=28, test_per_class=50, max_shift=3):
    """Build the four-way split; fully deterministic per seed."""
    root = np.random.SeedSequence(seed)
    src_tr, src_te, tgt_tr, tgt_te = root.spawn(4)
    source_train = _make_set(src_tr, _smooth_templates(n_classes, size),
                             per_class, source_spec, size, max_shift)
    source_test = _make_set(src_te, _smooth_templates(n_classes, size),
                            test_per_class, source_spec, size, max_shift)
    target_train = _make_set(tgt_tr, _smooth_templates(n_classes, size),
                             per_class, target_spec, size, max_shift)
    target_test = _make_set(tgt_te, _smooth_templates(n_classes, size),
                            test_per_class, target_spec, size, max_shift)
    target_train = Dataset(target_train.images,
                           np.full(len(target_train), -1, dtype=np.int64))
    return DataBundle(source_train, source_test, target_train, target_test)


def default_specs(amplitude=0.1, tgt_offset=0.05,
                  src_band=(0.625, 0.6875), tgt_band=(0.6875, 0.9375)):
    """Benchmark domain pair: class-correlated source texture (a shortcut
    that does not transfer), class-independent target texture.

    The source band coincides with one annulus of the default 16-band
    partition, so a single in-budget band swap can strip the shortcut."""
    source = DomainSpec(src_band, amplitude, texture_seed=101,
                        brightness_offset=0.0, class_correlated=True)
    target = DomainSpec(tgt_band, amplitude, texture_seed=202,
                        brightness_offset=tgt_offset, class_correlated=False)
    return source, target


def default_bundle(seed=0, per_class=125, n_classes=4, size=28,
                   test_per_class=50, **spec_kw):
    source, target = default_specs(**spec_kw)
    return generate(seed, per_class, n_classes, source, target,
                    size=size, test_per_class=test_per_class)


def save_dataset(directory, dataset, prefix="img"):
    os.makedirs(directory, exist_ok=True)
    lines = []
    for i in range(len(dataset)):
        name = f"{prefix}_{i:05d}.fimg"
        imageio.write_fimg(os.path.join(directory, name), dataset.images[i])
        label = dataset.labels[i]
        lines.append(f"{name} {'-' if label < 0 else int(label)}")
    with open(os.path.join(directory, "index.txt"), "w") as f:
        f.write("\n".join(lines) + "\n")


def load_dataset(directory):
    index = os.path.join(directory, "index.txt")
    if not os.path.exists(index):
        raise FileNotFoundError(f"no index.txt in {directory}")
    images, labels = [], []
    with open(index) as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            name, label = line.rsplit(" ", 1)
            images.append(imageio.read_fimg(os.path.join(directory, name)))
            labels.append(-1 if label == "-" else int(label))
    return Dataset(np.stack(images), np.asarray(labels, dtype=np.int64))


def save_bundle(directory, bundle):
    for split, ds in (("source_train", bundle.source_train),
                      ("source_test", bundle.source_test),
                      ("target_train", bundle.target_train),
                      ("target_test", bundle.target_test)):
        save_dataset(os.path.join(directory, split), ds)


def load_bundle(directory):
    return DataBundle(*(load_dataset(os.path.join(directory, s))
                        for s in ("source_train", "source_test",
                                  "target_train", "target_test")))
