"""Forward model of the delay-augmented surface.

A signal block is a plain complex ndarray of shape (N, T): one row per
element, one column per symbol slot.  Each layer delays selected rows by
one symbol slot, applies per-element phase shifts, and couples into the
next layer (or into the receive antenna for the innermost layer).

Boundary convention for the per-slot delay: bit 0 keeps a row unchanged,
bit 1 shifts it right by one slot with a zero filled in at slot 0.  The
trailing guard columns appended by pad_input guarantee a shifted row never
pushes data past the end of the block; if it would, a GuardBudgetError is
raised instead of silently dropping samples.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .channel import ChannelRealization, convolve_channel
from .geometry import PropagationMatrix, SisGeometry, combining_vector, inter_layer_matrix


class GuardBudgetError(ValueError):
    """A one-slot delay would shift a nonzero sample past the padded block."""


@dataclass
class SisConfig:
    """Optimizable surface state: per-layer phases and delay bits.

    phases[i] and delay_bits[i] belong to layer i+1, so index 0 is the
    innermost layer (next to the antenna).  Phases are kept as real angles
    in [0, 2 pi) and exponentiated on use.
    """

    phases: list[np.ndarray]
    delay_bits: list[np.ndarray]

    def __post_init__(self):
        if len(self.phases) != len(self.delay_bits) or not self.phases:
            raise ValueError("phases and delay_bits must list the same nonzero number of layers")
        self.phases = [np.asarray(p, dtype=float) for p in self.phases]
        self.delay_bits = [np.asarray(b, dtype=np.int8) for b in self.delay_bits]
        n = self.phases[0].size
        for p, b in zip(self.phases, self.delay_bits):
            if p.ndim != 1 or b.ndim != 1 or p.size != n or b.size != n:
                raise ValueError("per-layer vectors must be 1-D with a common length")
            if np.any((p < 0) | (p >= 2 * np.pi)):
                raise ValueError("phases must lie in [0, 2*pi)")
            if np.any((b != 0) & (b != 1)):
                raise ValueError("delay bits must be 0 or 1")

    @property
    def num_layers(self) -> int:
        return len(self.phases)

    @property
    def elements_per_layer(self) -> int:
        return self.phases[0].size

    def copy(self) -> "SisConfig":
        return SisConfig(
            phases=[p.copy() for p in self.phases],
            delay_bits=[b.copy() for b in self.delay_bits],
        )

    def to_dict(self) -> dict:
        return {
            "num_layers": self.num_layers,
            "elements_per_layer": self.elements_per_layer,
            "phases": [p.tolist() for p in self.phases],
            "delay_bits": [b.tolist() for b in self.delay_bits],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "SisConfig":
        cfg = cls(
            phases=[np.asarray(p, dtype=float) for p in doc["phases"]],
            delay_bits=[np.asarray(b, dtype=np.int8) for b in doc["delay_bits"]],
        )
        if cfg.num_layers != doc.get("num_layers", cfg.num_layers):
            raise ValueError("num_layers does not match the phase arrays")
        if cfg.elements_per_layer != doc.get("elements_per_layer", cfg.elements_per_layer):
            raise ValueError("elements_per_layer does not match the phase arrays")
        return cfg


def save_config(config: SisConfig, path: str, metadata: dict | None = None) -> None:
    """Persist a surface configuration as JSON (full float precision).

    Optional metadata (optimizer provenance etc.) is stored under a separate
    key and ignored on load.
    """
    doc = config.to_dict()
    if metadata:
        doc["metadata"] = metadata
    tmp = f"{path}.tmp"
    with open(tmp, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
    os.replace(tmp, path)


def load_config(path: str) -> SisConfig:
    with open(path) as fh:
        return SisConfig.from_dict(json.load(fh))


def pad_input(received: np.ndarray, num_layers: int) -> np.ndarray:
    """Append num_layers all-zero guard columns: (N, W) -> (N, W + L)."""
    if num_layers < 1:
        raise ValueError("num_layers must be >= 1")
    received = np.asarray(received, dtype=complex)
    n = received.shape[0]
    return np.hstack([received, np.zeros((n, num_layers), dtype=complex)])


def apply_delay_bits(block: np.ndarray, bits: np.ndarray) -> np.ndarray:
    """Shift bit-1 rows right by one symbol slot; keep bit-0 rows.

    Equivalent to the masked matrix form M0 @ X @ D0 + M1 @ X @ D1 with D0
    the identity with zeroed final slot and D1 its strict right shift, for
    any block whose final column carries no data.
    """
    block = np.asarray(block, dtype=complex)
    bits = np.asarray(bits)
    if bits.shape != (block.shape[0],):
        raise ValueError("one delay bit per row is required")
    ones = bits == 1
    if np.any(block[ones, -1] != 0):
        raise GuardBudgetError(
            "delayed rows would shift nonzero samples past the guard columns"
        )
    out = block.copy()
    out[ones, 1:] = block[ones, :-1]
    out[ones, 0] = 0
    return out


def apply_layer(
    block: np.ndarray,
    inter_layer: PropagationMatrix | np.ndarray,
    phases: np.ndarray,
    bits: np.ndarray,
) -> np.ndarray:
    """One layer hop: delay selected rows, phase-shift, then propagate.

    Computes H @ diag(exp(j*phases)) @ delayed(block).
    """
    entries = getattr(inter_layer, "entries", inter_layer)
    delayed = apply_delay_bits(block, bits)
    phased = np.exp(1j * np.asarray(phases, dtype=float))[:, None] * delayed
    return entries @ phased


@dataclass(frozen=True)
class SurfaceStack:
    """Precomputed propagation operators for one geometry.

    inter_layer[i] couples layer i+2 to layer i+1 (empty for a single-layer
    stack); combining couples layer 1 to the receive antenna.
    """

    inter_layer: tuple[np.ndarray, ...]
    combining: np.ndarray

    @property
    def num_layers(self) -> int:
        return len(self.inter_layer) + 1

    @property
    def elements_per_layer(self) -> int:
        return self.combining.size


@lru_cache(maxsize=16)
def _cached_stack(geometry: SisGeometry) -> SurfaceStack:
    mats = []
    for layer in range(2, geometry.num_layers + 1):
        mats.append(inter_layer_matrix(geometry, layer).entries)
    return SurfaceStack(inter_layer=tuple(mats), combining=combining_vector(geometry))


def build_stack(geometry: SisGeometry | SurfaceStack) -> SurfaceStack:
    """Resolve a geometry to its propagation operators (cached per geometry)."""
    if isinstance(geometry, SurfaceStack):
        return geometry
    return _cached_stack(geometry)


def propagate(
    config: SisConfig,
    geometry: SisGeometry | SurfaceStack,
    received: np.ndarray,
) -> np.ndarray:
    """Noise-free antenna time series for a received block.

    Pads the (N, M+C-1) block with one guard column per layer, applies the
    layers from outermost to innermost, and combines the innermost layer
    output into the antenna, returning a length J = M + L + C - 1 vector.
    """
    stack = build_stack(geometry)
    if config.num_layers != stack.num_layers:
        raise ValueError("config and geometry disagree on the number of layers")
    if config.elements_per_layer != stack.elements_per_layer:
        raise ValueError("config and geometry disagree on the element count")
    block = pad_input(received, config.num_layers)
    for layer in range(config.num_layers, 1, -1):
        block = apply_layer(
            block,
            stack.inter_layer[layer - 2],
            config.phases[layer - 1],
            config.delay_bits[layer - 1],
        )
    delayed = apply_delay_bits(block, config.delay_bits[0])
    phased = np.exp(1j * config.phases[0])[:, None] * delayed
    return stack.combining @ phased


def effective_response(
    config: SisConfig,
    geometry: SisGeometry | SurfaceStack,
    channel: ChannelRealization,
) -> np.ndarray:
    """End-to-end impulse response g of channel + surface + combining.

    Feeds a single unit symbol through the channel convolution and the
    layer cascade; the result has length C + L.  The fixed-configuration
    system is linear and time-invariant at symbol rate, so the noise-free
    antenna output for any input x equals g convolved with x.
    """
    received = convolve_channel(channel, np.ones(1, dtype=complex))
    return propagate(config, geometry, received)
