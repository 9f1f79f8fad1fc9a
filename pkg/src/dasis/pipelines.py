"""End-to-end link pipelines fed to the Monte Carlo engine.

Every pipeline exposes:

* ``label``: curve label used in CSV output and seeding.
* ``reference_response()``: noise-free symbol-rate impulse response at the
  detector input; its dominant tap fixes detection timing and gain.
* ``antenna_response()``: noise-free impulse response at the antenna,
  where the received-SNR definition measures signal power.
* ``transmit(symbols, noise_variance, rng)``: push a (B, M) block batch
  through the link and return the (B, T) detector-input series.

Digital baselines model a surface-free reception with unit spatial gain:
the scalar series at the antenna is the temporal taps convolved with the
symbols, so they isolate temporal equalization without beamforming gain.
"""

from __future__ import annotations

import numpy as np
from scipy.signal import fftconvolve, lfilter

from .channel import (
    ChannelRealization,
    build_vector_channel,
    convolve_channel,
    rician_spatial_channel,
)
from .equalizers import ensure_stable_inverse, fir_from_iir, zf_iir_equalize
from .geometry import SisGeometry
from .surface import SisConfig, build_stack, effective_response, propagate


def _noise(rng: np.random.Generator, shape, noise_variance: float) -> np.ndarray:
    if noise_variance == 0:
        return np.zeros(shape, dtype=complex)
    scale = np.sqrt(noise_variance / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


class DaSisPipeline:
    """Channel -> surface cascade -> antenna noise -> detector.

    The fixed-configuration cascade is linear and time-invariant at symbol
    rate, so by default blocks are propagated by convolving with the
    end-to-end effective response (bit-equivalent up to float rounding with
    the full cascade, which remains available via exact_cascade=True for
    cross-checks).
    """

    def __init__(
        self,
        config: SisConfig,
        geometry: SisGeometry,
        channel: ChannelRealization,
        label: str | None = None,
        exact_cascade: bool = False,
        average_fading: bool = False,
    ):
        self.config = config
        self.geometry = geometry
        self.channel = channel
        self.stack = build_stack(geometry)
        self.label = label or f"da-sis:{config.elements_per_layer}"
        self.exact_cascade = exact_cascade
        self.average_fading = average_fading
        self._g = effective_response(config, self.stack, channel)

    def reference_response(self) -> np.ndarray:
        return self._g

    def antenna_response(self) -> np.ndarray:
        return self._g

    def transmit(self, symbols: np.ndarray, noise_variance: float, rng) -> np.ndarray:
        symbols = np.atleast_2d(np.asarray(symbols, dtype=complex))
        channel = self.channel
        g = self._g
        if self.average_fading:
            spatial = rician_spatial_channel(self.geometry, self.channel.kappa or 0.0, rng)
            channel = build_vector_channel(spatial, self.channel.temporal, self.channel.kappa)
            g = effective_response(self.config, self.stack, channel)
        if self.exact_cascade:
            out = np.stack(
                [propagate(self.config, self.stack, convolve_channel(channel, x)) for x in symbols]
            )
        else:
            out = fftconvolve(symbols, g[None, :], axes=1)
        return out + _noise(rng, out.shape, noise_variance)


class DigitalPipeline:
    """Surface-free scalar reception followed by a digital equalizer.

    equalizer is one of "none", "zf-iir", "zf-iir-noiseless", or
    ("fir", K).  The "zf-iir-noiseless" variant equalizes the clean series
    and adds the calibrated noise afterwards; all other variants add noise
    at the antenna.
    """

    def __init__(self, channel_taps, equalizer="none", label: str | None = None):
        self.taps = np.asarray(getattr(channel_taps, "taps", channel_taps), dtype=complex)
        self.equalizer = equalizer
        if equalizer == "none":
            self.label = label or "no-eq"
            self._fir = None
        elif equalizer == "zf-iir":
            ensure_stable_inverse(self.taps)
            self.label = label or "zf-iir"
            self._fir = None
        elif equalizer == "zf-iir-noiseless":
            ensure_stable_inverse(self.taps)
            self.label = label or "zf-iir-noiseless"
            self._fir = None
        elif isinstance(equalizer, tuple) and len(equalizer) == 2 and equalizer[0] == "fir":
            self._fir = fir_from_iir(self.taps, int(equalizer[1]))
            self.label = label or f"fir:{int(equalizer[1])}"
        else:
            raise ValueError(f"unknown equalizer {equalizer!r}")

    def reference_response(self) -> np.ndarray:
        if self.equalizer == "none":
            return self.taps
        if self.equalizer in ("zf-iir", "zf-iir-noiseless"):
            return zf_iir_equalize(self.taps, self.taps)
        return np.convolve(self.taps, self._fir)

    def antenna_response(self) -> np.ndarray:
        return self.taps

    def transmit(self, symbols: np.ndarray, noise_variance: float, rng) -> np.ndarray:
        symbols = np.atleast_2d(np.asarray(symbols, dtype=complex))
        clean = fftconvolve(symbols, self.taps[None, :], axes=1)
        if self.equalizer == "zf-iir-noiseless":
            equalized = lfilter([1.0], self.taps, clean, axis=1)
            return equalized + _noise(rng, equalized.shape, noise_variance)
        noisy = clean + _noise(rng, clean.shape, noise_variance)
        if self.equalizer == "none":
            return noisy
        if self.equalizer == "zf-iir":
            return lfilter([1.0], self.taps, noisy, axis=1)
        width = noisy.shape[1]
        return fftconvolve(noisy, self._fir[None, :], axes=1)[:, :width]


def awgn_pipeline() -> DigitalPipeline:
    """ISI-free unit-gain reference link (uncoded BPSK over AWGN)."""
    return DigitalPipeline(np.ones(1, dtype=complex), "none", label="awgn")
