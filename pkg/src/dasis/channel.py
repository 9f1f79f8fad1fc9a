"""Transmitter-to-surface vector channel and receiver noise.

The channel seen by the outermost layer is the outer product of a spatial
Rician response (one coefficient per element) and a short symbol-spaced
temporal tap line, so every element sees the same multi-path profile up to
a complex spatial gain.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import SisGeometry, element_positions


def _as_rng(seed) -> np.random.Generator:
    """Accept an int, a seed list, or a Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


@dataclass(frozen=True)
class TemporalTaps:
    """Symbol-spaced channel taps, length C >= 1 with a nonzero leading tap."""

    taps: np.ndarray

    def __post_init__(self):
        taps = np.asarray(self.taps, dtype=complex)
        if taps.ndim != 1 or taps.size < 1:
            raise ValueError("taps must be a non-empty 1-D vector")
        if taps[0] == 0:
            raise ValueError("leading tap must be nonzero")
        taps.flags.writeable = False
        object.__setattr__(self, "taps", taps)

    def __len__(self) -> int:
        return self.taps.size


def default_temporal_taps() -> TemporalTaps:
    """Three-tap multi-path profile [1, -0.9 e^{j pi/6}, 0.81 e^{j pi/4}]."""
    return TemporalTaps(
        np.array(
            [
                1.0,
                -0.9 * np.exp(1j * np.pi / 6),
                0.81 * np.exp(1j * np.pi / 4),
            ]
        )
    )


@dataclass(frozen=True)
class ChannelRealization:
    """One draw of the vector channel.

    tap_matrix has shape (N, C) and equals outer(spatial, temporal.taps),
    hence rank 1.
    """

    tap_matrix: np.ndarray
    spatial: np.ndarray
    temporal: TemporalTaps
    kappa: float | None = None

    @property
    def num_elements(self) -> int:
        return self.tap_matrix.shape[0]

    @property
    def num_taps(self) -> int:
        return self.tap_matrix.shape[1]


def rician_spatial_channel(geometry: SisGeometry, kappa: float, seed) -> np.ndarray:
    """Spatial response of the outermost layer, shape (N,).

    h = sqrt(kappa/(kappa+1)) * h_los + sqrt(1/(kappa+1)) * h_nlos with a
    spherical-wave line-of-sight phase 2 pi d_n / wavelength per element and
    unit-variance circularly-symmetric Gaussian scatter, so E|h_n|^2 = 1.
    """
    if kappa < 0:
        raise ValueError("kappa must be non-negative")
    rng = _as_rng(seed)
    pos = element_positions(geometry, geometry.num_layers)
    dist = np.linalg.norm(pos - np.asarray(geometry.tx_position), axis=1)
    los = np.exp(1j * 2.0 * np.pi * dist / geometry.wavelength)
    n = geometry.elements_per_layer
    nlos = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / np.sqrt(2.0)
    return np.sqrt(kappa / (kappa + 1.0)) * los + np.sqrt(1.0 / (kappa + 1.0)) * nlos


def build_vector_channel(
    spatial: np.ndarray, temporal: TemporalTaps, kappa: float | None = None
) -> ChannelRealization:
    """Assemble the rank-1 tap matrix tap_matrix[n, c] = spatial[n] * taps[c]."""
    spatial = np.asarray(spatial, dtype=complex)
    if spatial.ndim != 1 or spatial.size < 1:
        raise ValueError("spatial must be a non-empty 1-D vector")
    tap_matrix = np.outer(spatial, temporal.taps)
    tap_matrix.flags.writeable = False
    return ChannelRealization(
        tap_matrix=tap_matrix, spatial=spatial, temporal=temporal, kappa=kappa
    )


def draw_channel(
    geometry: SisGeometry,
    kappa: float,
    seed,
    temporal: TemporalTaps | None = None,
) -> ChannelRealization:
    """Draw a Rician spatial response and attach the temporal profile."""
    if temporal is None:
        temporal = default_temporal_taps()
    spatial = rician_spatial_channel(geometry, kappa, seed)
    return build_vector_channel(spatial, temporal, kappa=kappa)


def convolve_channel(channel: ChannelRealization, symbols) -> np.ndarray:
    """Per-element full convolution of the channel with a symbol sequence.

    Returns shape (N, M + C - 1): row n is tap_matrix[n] convolved with the
    symbols.
    """
    symbols = np.asarray(symbols, dtype=complex)
    if symbols.ndim != 1 or symbols.size < 1:
        raise ValueError("symbols must be a non-empty 1-D vector")
    return np.stack([np.convolve(row, symbols) for row in channel.tap_matrix])


def add_awgn(samples: np.ndarray, noise_variance: float, seed) -> np.ndarray:
    """Add circularly-symmetric complex Gaussian noise of total variance
    noise_variance per sample (noise_variance / 2 per real component)."""
    if noise_variance < 0:
        raise ValueError("noise variance must be non-negative")
    samples = np.asarray(samples, dtype=complex)
    if noise_variance == 0:
        return samples.copy()
    rng = _as_rng(seed)
    scale = np.sqrt(noise_variance / 2.0)
    noise = rng.standard_normal(samples.shape) + 1j * rng.standard_normal(samples.shape)
    return samples + scale * noise
