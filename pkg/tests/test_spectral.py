"""Transforms, band decomposition, and band-pass filtering."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from freqadv import spectral
from freqadv.spectral import (DimensionError, ParameterError, bandpass,
                              band_index_map, compose, decompose, dft2, idft2,
                              radius_map, resize_bilinear, resize_to_square,
                              restore_size)

from conftest import naive_dft2, rel_err


def grating(size, u, v):
    """Real cosine grating whose spectrum is two symmetric impulses."""
    ii, jj = np.mgrid[0:size, 0:size]
    return np.cos(2.0 * np.pi * (u * ii + v * jj) / size)


class TestDft2:
    def test_constant_image_has_only_dc(self):
        c = 0.37
        z = dft2(np.full((4, 4), c))
        expected = np.zeros((4, 4), dtype=np.complex128)
        expected[2, 2] = 16.0 * c
        assert np.max(np.abs(z - expected)) < 1e-12

    def test_matches_naive_dft_oracle(self):
        rng = np.random.default_rng(7)
        for h in (2, 3, 4, 5, 8):
            x = rng.random((h, h))
            assert rel_err(dft2(x), naive_dft2(x)) <= 1e-10

    def test_round_trip(self):
        rng = np.random.default_rng(11)
        for h in (4, 8, 16, 64):
            x = rng.random((h, h))
            assert np.max(np.abs(idft2(dft2(x)) - x)) <= 1e-10

    def test_parseval(self):
        rng = np.random.default_rng(13)
        for h in (4, 16, 64):
            x = rng.random((h, h))
            z = dft2(x)
            lhs = np.sum(x ** 2)
            rhs = np.sum(np.abs(z) ** 2) / h ** 2
            assert abs(lhs - rhs) / lhs <= 1e-9

    def test_non_square_rejected(self):
        with pytest.raises(DimensionError):
            dft2(np.zeros((4, 6)))


class TestIdft2:
    def test_zero_spectrum_gives_zero_image(self):
        assert np.array_equal(idft2(np.zeros((8, 8), dtype=complex)),
                              np.zeros((8, 8)))

    def test_cosine_grating_pair(self):
        # cos grating <-> two impulses of magnitude H^2/2 at +/-(u, v)
        h, u, v = 16, 3, 5
        z = np.zeros((h, h), dtype=np.complex128)
        c = h // 2
        z[c + u, c + v] = h * h / 2.0
        z[c - u, c - v] = h * h / 2.0
        assert np.max(np.abs(idft2(z) - grating(h, u, v))) <= 1e-10

    def test_linearity(self):
        rng = np.random.default_rng(3)
        x1, x2 = rng.random((8, 8)), rng.random((8, 8))
        z1, z2 = dft2(x1), dft2(x2)
        a, b = 2.5, -0.7
        lhs = idft2(a * z1 + b * z2)
        rhs = a * idft2(z1) + b * idft2(z2)
        assert np.max(np.abs(lhs - rhs)) <= 1e-10

    def test_large_imaginary_residue_raises(self):
        z = np.zeros((8, 8), dtype=complex)
        z[1, 2] = 1.0  # single unpaired coefficient -> complex inverse
        with pytest.raises(ValueError):
            idft2(z)


class TestDecompose:
    def test_single_band_is_identity(self):
        rng = np.random.default_rng(5)
        z = dft2(rng.random((8, 8)))
        bands = decompose(z, 1)
        assert len(bands) == 1
        assert np.array_equal(bands[0], z)

    @pytest.mark.parametrize("n", [1, 4, 16, 96])
    def test_compose_decompose_bitwise(self, n):
        rng = np.random.default_rng(17)
        z = rng.random((64, 64)) + 1j * rng.random((64, 64))
        assert np.array_equal(compose(decompose(z, n)), z)

    def test_4x4_two_band_enumeration(self):
        # full enumeration against the mask rule: centroid (2, 2),
        # d_max = hypot(2, 2) = 2.828..., band 1 holds d_norm in (0, 1/2]
        # (DC included), band 2 holds (1/2, 1]
        d_max = np.hypot(2.0, 2.0)
        idx = band_index_map(4, 2)
        for i in range(4):
            for j in range(4):
                d_norm = np.hypot(i - 2.0, j - 2.0) / d_max
                want = 0 if d_norm <= 0.5 else 1
                assert idx[i, j] == want, (i, j)
        assert abs(np.hypot(0.0, 1.0) / d_max - 0.3536) < 1e-4
        assert idx[2, 3] == 0       # d_norm 0.3536 -> band 1
        assert idx[0, 0] == 1       # d_norm 1 -> band 2
        assert idx[2, 2] == 0       # DC forced into band 1

    def test_partition_exact(self):
        for h, n in ((28, 16), (9, 3), (64, 96)):
            idx = band_index_map(h, n)
            assert idx.min() >= 0 and idx.max() <= n - 1
            counts = np.bincount(idx.ravel(), minlength=n)
            assert counts.sum() == h * h

    @settings(deadline=None, max_examples=25)
    @given(h=st.integers(4, 24), n=st.integers(1, 24))
    def test_partition_property(self, h, n):
        rng = np.random.default_rng(h * 100 + n)
        z = rng.random((h, h)) + 1j * rng.random((h, h))
        assert np.array_equal(compose(decompose(z, n)), z)

    def test_bad_band_count(self):
        with pytest.raises(ParameterError):
            decompose(np.zeros((4, 4), dtype=complex), 0)


class TestCompose:
    def test_disjoint_support_union(self):
        a = np.zeros((4, 4), dtype=complex)
        b = np.zeros((4, 4), dtype=complex)
        a[0, 0] = 1.0
        b[3, 3] = 2.0j
        out = compose([a, b])
        assert out[0, 0] == 1.0 and out[3, 3] == 2.0j
        assert np.count_nonzero(out) == 2

    def test_empty_and_mismatched(self):
        with pytest.raises(DimensionError):
            compose([])
        with pytest.raises(DimensionError):
            compose([np.zeros((4, 4), dtype=complex),
                     np.zeros((8, 8), dtype=complex)])


class TestBandpass:
    def test_all_pass_is_identity(self):
        rng = np.random.default_rng(23)
        x = rng.random((16, 16))
        assert np.max(np.abs(bandpass(x, 0.0, 1.0) - x)) <= 1e-10

    def test_dc_rejected_on_constant(self):
        x = np.full((16, 16), 0.6)
        assert np.max(np.abs(bandpass(x, 0.5, 1.0))) <= 1e-10

    def test_two_gratings_one_survives(self):
        h = 32
        d = radius_map(h)
        c = h // 2
        # pick one impulse pair inside (1/6, 1/2] and one outside
        inside = (3, 4)
        outside = (10, 10)
        assert 1 / 6 < d[c + inside[0], c + inside[1]] <= 0.5
        assert d[c + outside[0], c + outside[1]] > 0.5
        x = grating(h, *inside) + grating(h, *outside)
        out = bandpass(x, 1.0 / 6.0, 0.5)
        assert np.max(np.abs(out - grating(h, *inside))) <= 1e-8

    def test_idempotent(self):
        rng = np.random.default_rng(29)
        x = rng.random((28, 28))
        once = bandpass(x, 1.0 / 6.0, 0.5)
        twice = bandpass(once, 1.0 / 6.0, 0.5)
        assert np.max(np.abs(twice - once)) <= 1e-9

    def test_bad_band(self):
        with pytest.raises(ParameterError):
            bandpass(np.zeros((8, 8)), 0.5, 0.5)


class TestResize:
    def test_square_unchanged(self):
        rng = np.random.default_rng(31)
        x = rng.random((7, 7))
        out, dims = resize_to_square(x)
        assert dims == (7, 7)
        assert np.array_equal(out, x)

    def test_4x8_becomes_8x8(self):
        out, dims = resize_to_square(np.zeros((4, 8)))
        assert out.shape == (8, 8) and dims == (4, 8)

    def test_restore_dims(self):
        rng = np.random.default_rng(37)
        for shape in ((4, 8), (9, 5), (6, 6)):
            x = rng.random(shape)
            sq, dims = resize_to_square(x)
            assert restore_size(sq, dims).shape == shape

    def test_bilinear_preserves_linear_ramp(self):
        # align-corners bilinear reproduces an affine function exactly
        ramp = np.outer(np.linspace(0.0, 1.0, 4), np.ones(4))
        up = resize_bilinear(ramp, 8, 8)
        want = np.outer(np.linspace(0.0, 1.0, 8), np.ones(8))
        assert np.max(np.abs(up - want)) <= 1e-12
