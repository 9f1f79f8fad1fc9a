"""Digital baseline equalizers: exact zero-forcing inversion and FIR truncations.

All filters operate on the scalar series seen by a digital receiver.  The
zero-forcing inverse of a tap polynomial c(z) is causal and stable only
when every zero of c(z) lies strictly inside the unit circle; borderline
channels are rejected with a deterministic margin.
"""

from __future__ import annotations

import numpy as np
from scipy.signal import lfilter

from .channel import TemporalTaps, add_awgn

STABILITY_MARGIN = 1e-9


class UnstableChannelError(ValueError):
    """The channel tap polynomial has a zero on or outside the unit circle."""


def _tap_array(channel_taps) -> np.ndarray:
    taps = np.asarray(getattr(channel_taps, "taps", channel_taps), dtype=complex)
    if taps.ndim != 1 or taps.size < 1 or taps[0] == 0:
        raise ValueError("channel taps must be a 1-D vector with nonzero leading tap")
    return taps


def channel_zeros(channel_taps) -> np.ndarray:
    """Zeros of c0 z^{C-1} + c1 z^{C-2} + ... + c_{C-1}."""
    taps = _tap_array(channel_taps)
    if taps.size == 1:
        return np.zeros(0, dtype=complex)
    return np.roots(taps)


def ensure_stable_inverse(channel_taps) -> np.ndarray:
    """Return the taps if their causal inverse is stable, else raise."""
    taps = _tap_array(channel_taps)
    zeros = channel_zeros(taps)
    if zeros.size and np.max(np.abs(zeros)) >= 1.0 - STABILITY_MARGIN:
        raise UnstableChannelError(
            f"channel zero magnitude {np.max(np.abs(zeros)):.6g} reaches the unit circle"
        )
    return taps


def zf_iir_equalize(series: np.ndarray, channel_taps, axis: int = -1) -> np.ndarray:
    """Exact channel inversion y[k] = (x[k] - sum_i c_i y[k-i]) / c0.

    Zero initial state; deconvolves the channel exactly in the noise-free
    case.  Refuses to run on channels whose inverse is unstable.
    """
    taps = ensure_stable_inverse(channel_taps)
    series = np.asarray(series, dtype=complex)
    return lfilter([1.0], taps, series, axis=axis)


def fir_from_iir(channel_taps, num_taps: int) -> np.ndarray:
    """First num_taps samples of the impulse response of 1 / c(z)."""
    if num_taps < 1:
        raise ValueError("num_taps must be >= 1")
    impulse = np.zeros(num_taps, dtype=complex)
    impulse[0] = 1.0
    return zf_iir_equalize(impulse, channel_taps)


def apply_fir(series: np.ndarray, fir_taps: np.ndarray) -> np.ndarray:
    """Causal FIR filtering: linear convolution truncated to the input length."""
    series = np.asarray(series, dtype=complex)
    fir_taps = np.asarray(fir_taps, dtype=complex)
    return np.convolve(series, fir_taps)[: series.size]


def noiseless_zf_pipeline(
    clean_series: np.ndarray, channel_taps, noise_variance: float, seed
) -> np.ndarray:
    """Idealized benchmark: equalize the noise-free series, then add noise."""
    equalized = zf_iir_equalize(clean_series, channel_taps)
    return add_awgn(equalized, noise_variance, seed)
