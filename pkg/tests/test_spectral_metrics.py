import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from riseig._validation import DomainError, SingularChannelError
from riseig.spectral_metrics import (
    EigenSpectrum,
    UserPartition,
    dpc_offset,
    gap_bound,
    gram_spectrum,
    high_snr_rate,
    lin_offset,
    offset_report,
    spectrum_means,
)


def complex_normal(rng, rows, cols):
    return (rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))) / np.sqrt(2)


channel_seeds = st.integers(0, 2**32 - 1)
shapes = st.tuples(st.integers(1, 6), st.integers(0, 10)).map(lambda t: (t[0], t[0] + t[1]))


class TestGramSpectrum:
    def test_identity(self):
        np.testing.assert_allclose(gram_spectrum(np.eye(2)).values, [1.0, 1.0])

    def test_padded_diag(self):
        h = np.array([[2.0, 0, 0], [0, 3.0, 0]])
        np.testing.assert_allclose(gram_spectrum(h).values, [9.0, 4.0])

    def test_svd_oracle(self, rng):
        h = complex_normal(rng, 3, 5)
        s = np.linalg.svd(h, compute_uv=False)
        np.testing.assert_allclose(gram_spectrum(h).values, s**2, rtol=1e-12)

    def test_descending(self, rng):
        v = gram_spectrum(complex_normal(rng, 6, 16)).values
        assert np.all(np.diff(v) <= 0)

    def test_negative_rejected(self):
        with pytest.raises(DomainError):
            EigenSpectrum(np.array([1.0, -0.5]))


class TestMeans:
    def test_equal(self):
        assert spectrum_means(EigenSpectrum(np.ones(3))) == pytest.approx((1.0, 1.0))

    def test_hand(self):
        assert spectrum_means(EigenSpectrum(np.array([1.0, 4.0]))) == pytest.approx((2.0, 1.6), rel=1e-14)

    @given(st.floats(1e-12, 1e12))
    def test_symmetric(self, a):
        geo, har = spectrum_means(EigenSpectrum(np.full(4, a)))
        assert geo == pytest.approx(a, rel=1e-12)
        assert har == pytest.approx(a, rel=1e-12)

    def test_singular(self):
        with pytest.raises(SingularChannelError):
            spectrum_means(EigenSpectrum(np.array([1.0, 0.0])))
        with pytest.raises(SingularChannelError):
            spectrum_means(EigenSpectrum(np.array([1.0, 1e-15])))


class TestOffsets:
    def test_identity(self):
        assert dpc_offset(np.eye(3)) == pytest.approx(0.0, abs=1e-15)
        assert lin_offset(np.eye(3)) == pytest.approx(0.0, abs=1e-15)

    def test_hand_spectrum(self):
        assert dpc_offset(np.diag([1.0, 2.0])) == pytest.approx(2.0, abs=1e-14)

    def test_scaling(self, rng):
        h = complex_normal(rng, 4, 7)
        assert dpc_offset(np.sqrt(3.0) * h) - dpc_offset(h) == pytest.approx(4 * np.log2(3.0), abs=1e-12)

    def test_fig_scale_no_underflow(self, rng):
        h = 1e-6 * complex_normal(rng, 6, 16)
        off = dpc_offset(h)
        assert np.isfinite(off)
        assert off == pytest.approx(np.sum(np.log2(gram_spectrum(h).values)), abs=1e-9)

    def test_lin_explicit_inverse(self, rng):
        h = complex_normal(rng, 3, 3)
        inv = np.linalg.inv(h @ h.conj().T)
        assert lin_offset(h) == pytest.approx(-np.sum(np.log2(np.real(np.diag(inv)))), abs=1e-10)

    def test_lin_block_partition_explicit(self, rng):
        h = complex_normal(rng, 4, 6)
        inv = np.linalg.inv(h @ h.conj().T)
        part = UserPartition.contiguous(2, 2)
        expected = -sum(np.log2(np.real(np.linalg.det(inv[b][:, b]))) for b in part.blocks)
        assert lin_offset(h, part) == pytest.approx(expected, abs=1e-10)

    def test_single_block_equals_dpc(self, rng):
        h = complex_normal(rng, 3, 5)
        assert lin_offset(h, UserPartition.contiguous(1, 3)) == pytest.approx(dpc_offset(h), abs=1e-10)

    def test_block_diagonal_equality(self, rng):
        u, _ = np.linalg.qr(complex_normal(rng, 8, 8))
        h = np.diag([0.3, 1.0, 2.5, 7.0]) @ u[:4]
        assert abs(dpc_offset(h) - lin_offset(h)) < 1e-9

    def test_partition_mismatch(self, rng):
        with pytest.raises(DomainError):
            lin_offset(complex_normal(rng, 3, 4), UserPartition.contiguous(2, 1))
        with pytest.raises(DomainError):
            UserPartition((np.array([0, 2]),))

    def test_singular(self):
        h = np.array([[1.0, 0.0], [2.0, 0.0]])
        with pytest.raises(SingularChannelError):
            dpc_offset(h)
        with pytest.raises(SingularChannelError):
            lin_offset(h)

    @settings(max_examples=200, deadline=None)
    @given(channel_seeds, shapes)
    def test_sandwich(self, seed, shape):
        h = complex_normal(np.random.default_rng(seed), *shape)
        rep = offset_report(h)
        r = shape[0]
        assert r * np.log2(rep.har_mean) <= rep.lin_offset + 1e-9
        assert rep.lin_offset <= rep.dpc_offset + 1e-9
        assert rep.dpc_offset == pytest.approx(r * np.log2(rep.geo_mean), abs=1e-9)

    @settings(max_examples=200, deadline=None)
    @given(channel_seeds, shapes)
    def test_gap_bound_dominates(self, seed, shape):
        h = complex_normal(np.random.default_rng(seed), *shape)
        assert gap_bound(gram_spectrum(h)) >= dpc_offset(h) - lin_offset(h) - 1e-9


class TestHighSnrRate:
    def test_zero(self):
        assert high_snr_rate(3.0, 3, 0.0) == pytest.approx(0.0, abs=1e-15)

    def test_two_bits(self):
        assert high_snr_rate(4.0, 2, 0.0) == pytest.approx(2.0)

    @given(st.floats(1e-3, 1e12), st.integers(1, 8), st.floats(-100, 100))
    def test_slope(self, p, r, off):
        assert high_snr_rate(2 * p, r, off) - high_snr_rate(p, r, off) == pytest.approx(r, abs=1e-9)

    def test_power_positive(self):
        with pytest.raises(DomainError):
            high_snr_rate(0.0, 2, 0.0)


class TestGapBound:
    def test_equal(self):
        assert gap_bound(EigenSpectrum(np.full(5, 2.0))) == pytest.approx(0.0, abs=1e-12)

    def test_hand(self):
        assert gap_bound(EigenSpectrum(np.array([1.0, 4.0]))) == pytest.approx(2 * np.log2(1.25), abs=1e-12)
        assert gap_bound(EigenSpectrum(np.array([1.0, 4.0]))) == pytest.approx(0.644, abs=1e-3)

    def test_singular(self):
        with pytest.raises(SingularChannelError):
            gap_bound(EigenSpectrum(np.array([2.0, 0.0])))
