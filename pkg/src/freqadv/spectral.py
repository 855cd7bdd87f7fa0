"""2-D Fourier transforms, annular band decomposition, and band-pass filtering.

Conventions used everywhere in this package:

* forward transform is unnormalized, inverse carries the 1/H^2 factor
  (numpy's default), so Parseval reads  sum|x|^2 = (1/H^2) sum|z|^2;
* spectra are stored center-shifted with the DC coefficient at index
  (H//2, H//2);
* normalized radius d_norm is Euclidean distance from the centroid
  (H/2, H/2) divided by the centroid-to-farthest-corner distance, so
  d_norm spans [0, 1] over the grid.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np


class DimensionError(ValueError):
    pass


class ParameterError(ValueError):
    pass


# residue bound for discarding the imaginary part after an inverse transform
IMAG_RESIDUE_TOL = 1e-8


def _check_square(a, name="input"):
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"{name} must be a square 2-D array, got shape {a.shape}")


def dft2(image):
    """Forward 2-D DFT of a square channel, center-shifted."""
    x = np.asarray(image, dtype=np.float64)
    _check_square(x, "image")
    return np.fft.fftshift(np.fft.fft2(x))


def idft2(spectrum, check_real=True):
    """Inverse of :func:`dft2`; returns the real part.

    The imaginary residue is asserted to be negligible relative to the real
    part.  Spectra built from real images through the band machinery here
    stay conjugate-symmetric up to rounding, so a large residue means a
    corrupted spectrum and raises instead of being silently dropped.
    """
    z = np.asarray(spectrum, dtype=np.complex128)
    _check_square(z, "spectrum")
    out = np.fft.ifft2(np.fft.ifftshift(z))
    if check_real:
        re_scale = np.max(np.abs(out.real))
        im_max = np.max(np.abs(out.imag))
        if im_max > IMAG_RESIDUE_TOL * max(re_scale, 1.0):
            raise ValueError(
                f"imaginary residue {im_max:.3e} exceeds tolerance "
                f"(real scale {re_scale:.3e})"
            )
    return out.real


@lru_cache(maxsize=32)
def radius_map(size):
    """Normalized distance of every grid index from the centroid (H/2, H/2)."""
    c = size / 2.0
    ii = np.arange(size, dtype=np.float64)
    d = np.hypot.outer(ii - c, ii - c)
    d_max = np.hypot(c, c)  # farthest grid index is the (0, 0) corner
    d = d / d_max
    d.setflags(write=False)
    return d


@lru_cache(maxsize=32)
def band_index_map(size, n_bands):
    """0-based band index per grid coefficient.

    Band n (1-based) holds d_norm in ((n-1)/N, n/N]; the DC point
    (d_norm == 0) goes to band 1 so the bands partition the grid.
    """
    if n_bands < 1:
        raise ParameterError(f"n_bands must be >= 1, got {n_bands}")
    d = radius_map(size)
    edges = np.arange(1, n_bands + 1, dtype=np.float64) / n_bands
    idx = np.searchsorted(edges, d, side="left")
    idx = np.minimum(idx, n_bands - 1)
    idx.setflags(write=False)
    return idx


def decompose(spectrum, n_bands):
    """Split a spectrum into n_bands annular bands of equal width.

    The bands partition the grid: summing them recovers the input bitwise.
    """
    z = np.asarray(spectrum, dtype=np.complex128)
    _check_square(z, "spectrum")
    idx = band_index_map(z.shape[0], n_bands)
    bands = []
    for n in range(n_bands):
        b = np.zeros_like(z)
        sel = idx == n
        b[sel] = z[sel]
        bands.append(b)
    return bands


def compose(bands):
    """Elementwise sum of bands; inverse of :func:`decompose`."""
    if len(bands) == 0:
        raise DimensionError("band list is empty")
    shape = bands[0].shape
    for b in bands:
        if b.shape != shape:
            raise DimensionError(f"band shapes differ: {b.shape} vs {shape}")
    out = np.zeros(shape, dtype=np.complex128)
    for b in bands:
        out += b
    return out


def bandpass_mask(size, lo, hi):
    """Boolean keep-mask for radii in (lo, hi]; DC is kept iff lo == 0."""
    if not (0.0 <= lo < hi <= 1.0):
        raise ParameterError(f"need 0 <= lo < hi <= 1, got lo={lo}, hi={hi}")
    d = radius_map(size)
    mask = (d > lo) & (d <= hi)
    if lo == 0.0:
        mask = mask | (d == 0.0)
    return mask


def bandpass(image, lo, hi):
    """Keep only spectral content with normalized radius in (lo, hi]."""
    x = np.asarray(image, dtype=np.float64)
    _check_square(x, "image")
    mask = bandpass_mask(x.shape[0], lo, hi)
    z = dft2(x)
    z[~mask] = 0.0
    return idft2(z)


def _interp_1d(a, new_len, axis):
    old_len = a.shape[axis]
    if new_len == old_len:
        return a
    # align-corners bilinear: endpoints map to endpoints
    pos = np.linspace(0.0, old_len - 1, new_len)
    i0 = np.floor(pos).astype(np.intp)
    i0 = np.minimum(i0, old_len - 2)
    frac = pos - i0
    lo = np.take(a, i0, axis=axis)
    hi = np.take(a, i0 + 1, axis=axis)
    shape = [1] * a.ndim
    shape[axis] = new_len
    frac = frac.reshape(shape)
    return lo * (1.0 - frac) + hi * frac


def resize_bilinear(image, new_h, new_w):
    x = np.asarray(image, dtype=np.float64)
    if x.ndim != 2:
        raise DimensionError(f"expected 2-D array, got shape {x.shape}")
    return _interp_1d(_interp_1d(x, new_h, axis=0), new_w, axis=1)


def resize_to_square(image):
    """Up-sample the short side to match the long side.

    Returns the square image and the original (h, w) for restore_size.
    """
    x = np.asarray(image, dtype=np.float64)
    h, w = x.shape
    side = max(h, w)
    return resize_bilinear(x, side, side), (h, w)


def restore_size(image, dims):
    h, w = dims
    return resize_bilinear(image, h, w)
