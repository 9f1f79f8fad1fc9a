import numpy as np
import pytest

from dasis.channel import default_temporal_taps
from dasis.equalizers import (
    UnstableChannelError,
    apply_fir,
    channel_zeros,
    fir_from_iir,
    noiseless_zf_pipeline,
    zf_iir_equalize,
)
from dasis.montecarlo import bpsk_modulate


class TestZfIirEqualize:
    def test_trivial_channel(self, rng):
        x = rng.standard_normal(50) + 1j * rng.standard_normal(50)
        np.testing.assert_array_equal(zf_iir_equalize(x, np.array([1.0])), x)

    def test_impulse_response_inverts_to_delta(self, paper_taps):
        out = zf_iir_equalize(paper_taps.taps, paper_taps)
        np.testing.assert_allclose(out, [1.0, 0.0, 0.0], atol=1e-12)

    def test_round_trip_long_bpsk_sequence(self, rng, paper_taps):
        bits = rng.integers(0, 2, 1000)
        symbols = bpsk_modulate(bits)
        received = np.convolve(paper_taps.taps, symbols)
        recovered = zf_iir_equalize(received, paper_taps)
        assert np.max(np.abs(recovered[:1000] - symbols)) < 1e-10

    def test_unit_circle_zero_rejected(self):
        with pytest.raises(UnstableChannelError):
            zf_iir_equalize(np.ones(4, dtype=complex), np.array([1.0, -1.0]))

    def test_marginally_stable_rejected(self):
        taps = np.array([1.0, -(1.0 - 1e-12)])
        with pytest.raises(UnstableChannelError):
            zf_iir_equalize(np.ones(4, dtype=complex), taps)

    def test_paper_channel_accepted(self, paper_taps):
        zf_iir_equalize(np.ones(4, dtype=complex), paper_taps)


class TestFirFromIir:
    def test_single_tap_is_leading_inverse(self):
        out = fir_from_iir(np.array([2.0]), 1)
        np.testing.assert_allclose(out, [0.5], atol=0)

    def test_geometric_series_for_two_tap_channel(self):
        a = 0.5 + 0.2j
        out = fir_from_iir(np.array([1.0, a]), 3)
        np.testing.assert_allclose(out, [1.0, -a, a**2], atol=1e-15)

    @pytest.mark.parametrize("num_taps", [4, 20])
    def test_truncated_inverse_property(self, paper_taps, num_taps):
        fir = fir_from_iir(paper_taps, num_taps)
        combined = np.convolve(fir, paper_taps.taps)
        delta = np.zeros(num_taps)
        delta[0] = 1.0
        np.testing.assert_allclose(combined[:num_taps], delta, atol=1e-12)

    def test_taps_decay_geometrically_at_spectral_radius(self, paper_taps):
        # the inverse impulse response q_k = (r1^{k+1} - r2^{k+1}) / (r1 - r2)
        # for the (monic) two-zero channel: check against the closed form and
        # bound the decay by the largest zero magnitude
        r1, r2 = channel_zeros(paper_taps)
        taps = fir_from_iir(paper_taps, 60)
        closed = np.array([(r1 ** (k + 1) - r2 ** (k + 1)) / (r1 - r2) for k in range(60)])
        np.testing.assert_allclose(taps, closed, rtol=1e-9)
        radius = max(abs(r1), abs(r2))
        bound = 2.0 / abs(r1 - r2) + 1.0
        ks = np.arange(60)
        assert np.all(np.abs(taps) <= bound * radius**ks)

    def test_invalid_length(self, paper_taps):
        with pytest.raises(ValueError):
            fir_from_iir(paper_taps, 0)


class TestApplyFir:
    def test_identity_filter(self):
        x = np.array([1.0, 2.0, 3.0])
        np.testing.assert_array_equal(apply_fir(x, np.array([1.0])), x)

    def test_unit_delay(self):
        out = apply_fir(np.array([1.0, 2.0, 3.0]), np.array([0.0, 1.0]))
        np.testing.assert_array_equal(out, np.array([0.0, 1.0, 2.0]))

    def test_hand_convolution(self):
        out = apply_fir(np.array([1.0, 2.0, 3.0]), np.array([1.0, 1.0]))
        np.testing.assert_array_equal(out, np.array([1.0, 3.0, 5.0]))

    def test_linearity_and_shift_equivariance(self, rng):
        fir = rng.standard_normal(5) + 1j * rng.standard_normal(5)
        x = rng.standard_normal(30) + 1j * rng.standard_normal(30)
        y = rng.standard_normal(30) + 1j * rng.standard_normal(30)
        lin = apply_fir(2.0 * x - 1j * y, fir)
        np.testing.assert_allclose(lin, 2.0 * apply_fir(x, fir) - 1j * apply_fir(y, fir), atol=1e-12)
        shifted_in = np.concatenate([[0.0], x[:-1]])
        np.testing.assert_allclose(
            apply_fir(shifted_in, fir)[1:], apply_fir(x, fir)[:-1], atol=1e-12
        )


class TestTruncationQuality:
    def test_residual_non_increasing_in_taps(self, paper_taps):
        def residual(k):
            combined = np.convolve(fir_from_iir(paper_taps, k), paper_taps.taps)
            delta = np.zeros_like(combined)
            delta[0] = 1.0
            return np.linalg.norm(combined - delta)

        residuals = [residual(k) for k in range(1, 26)]
        assert all(b <= a + 1e-12 for a, b in zip(residuals, residuals[1:]))
        assert residuals[19] < residuals[3]


class TestNoiselessZfPipeline:
    def test_zero_noise_equals_equalizer(self, rng, paper_taps):
        clean = np.convolve(paper_taps.taps, bpsk_modulate(rng.integers(0, 2, 64)))
        out = noiseless_zf_pipeline(clean, paper_taps, 0.0, seed=0)
        np.testing.assert_array_equal(out, zf_iir_equalize(clean, paper_taps))

    def test_impulse_plus_noise(self, paper_taps):
        out = noiseless_zf_pipeline(paper_taps.taps, paper_taps, 1e-6, seed=1)
        assert abs(out[0] - 1.0) < 1e-2
        assert np.max(np.abs(out[1:])) < 1e-2
