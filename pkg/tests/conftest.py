"""Shared numerical oracles for the test suite.

The oracles here are deliberately naive re-implementations (quadruple-loop
DFT, central finite differences) so the library code is checked against
independent arithmetic, not against itself.
"""

import numpy as np


def naive_dft2(x):
    """O(H^4) double-sum DFT, center-shifted; the oracle for dft2."""
    x = np.asarray(x, dtype=np.float64)
    h = x.shape[0]
    out = np.zeros((h, h), dtype=np.complex128)
    for u in range(h):
        for v in range(h):
            s = 0.0 + 0.0j
            for i in range(h):
                for j in range(h):
                    s += x[i, j] * np.exp(-2j * np.pi * (u * i + v * j) / h)
            out[u, v] = s
    return np.fft.fftshift(out)


def rel_err(got, want):
    got = np.asarray(got)
    want = np.asarray(want)
    scale = max(float(np.max(np.abs(want))), 1e-300)
    return float(np.max(np.abs(got - want))) / scale


def central_diff(f, x, eps=1e-5):
    """Central finite-difference gradient of scalar f at flat array x."""
    x = np.asarray(x, dtype=np.float64)
    g = np.zeros_like(x)
    flat = g.reshape(-1)
    xf = x.reshape(-1)
    for i in range(xf.size):
        orig = xf[i]
        xf[i] = orig + eps
        hi = f(x)
        xf[i] = orig - eps
        lo = f(x)
        xf[i] = orig
        flat[i] = (hi - lo) / (2.0 * eps)
    return g


def grad_rel_err(analytic, numeric):
    """Relative error between gradient arrays, scaled by the larger norm.

    The scale floor keeps near-zero gradients (e.g. a fully dead ReLU
    layer) from amplifying finite-difference rounding noise.
    """
    a = np.asarray(analytic).ravel()
    n = np.asarray(numeric).ravel()
    scale = max(float(np.max(np.abs(n))), float(np.max(np.abs(a))), 1e-6)
    return float(np.max(np.abs(a - n))) / scale
