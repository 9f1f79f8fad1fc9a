"""Physical layout of the stacked surface and free-space coupling coefficients.

Conventions used throughout the package:

* The surface normal points along +y (from the transmitter toward the
  receive antenna).
* Layers are numbered 1..L with layer 1 innermost (one layer spacing in
  front of the antenna) and layer L outermost (facing the transmitter).
* All layers are parallel, axis-aligned square grids sharing the same
  in-plane (x, z) coordinates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0  # m/s

Vec3 = tuple[float, float, float]


@dataclass(frozen=True)
class SisGeometry:
    """Immutable physical layout of an L-layer surface.

    Attributes:
        num_layers: number of stacked layers L.
        elements_per_layer: elements per layer N; must be a perfect square.
        element_spacing: in-plane spacing between neighboring elements [m].
        layer_spacing: distance between consecutive layer planes [m].
        wavelength: carrier wavelength [m].
        element_area: effective element aperture [m^2].
        tx_position: transmit antenna coordinates [m].
        rx_position: receive antenna coordinates [m].
        sis_center: center of the outermost layer (layer L) [m].
    """

    num_layers: int
    elements_per_layer: int
    element_spacing: float
    layer_spacing: float
    wavelength: float
    element_area: float
    tx_position: Vec3
    rx_position: Vec3
    sis_center: Vec3

    def __post_init__(self):
        if self.num_layers < 1:
            raise ValueError("num_layers must be >= 1")
        if self.elements_per_layer < 1:
            raise ValueError("elements_per_layer must be >= 1")
        side = math.isqrt(self.elements_per_layer)
        if side * side != self.elements_per_layer:
            raise ValueError(
                f"elements_per_layer must be a perfect square, got {self.elements_per_layer}"
            )
        for name in ("element_spacing", "layer_spacing", "wavelength", "element_area"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    @property
    def grid_side(self) -> int:
        return math.isqrt(self.elements_per_layer)


def make_geometry(
    frequency_hz: float = 28e9,
    num_layers: int = 2,
    elements_per_layer: int = 81,
    tx_position: Vec3 = (0.0, 0.0, 0.0),
    rx_position: Vec3 = (0.0, 100.0, -15.0),
    element_spacing: float | None = None,
    layer_spacing: float | None = None,
    element_area: float | None = None,
    sis_center: Vec3 | None = None,
) -> SisGeometry:
    """Build a geometry with the default receiver-side placement.

    Defaults: half-wavelength element grid, 0.75 wavelength layer spacing,
    element aperture (wavelength/2)^2, and the stack placed on the normal
    directly in front of the receive antenna, so that layer 1 sits one
    layer spacing behind the antenna and layer L sits num_layers spacings
    away from it.
    """
    if frequency_hz <= 0:
        raise ValueError("frequency_hz must be positive")
    wavelength = SPEED_OF_LIGHT / frequency_hz
    if element_spacing is None:
        element_spacing = wavelength / 2
    if layer_spacing is None:
        layer_spacing = 0.75 * wavelength
    if element_area is None:
        element_area = (wavelength / 2) ** 2
    if sis_center is None:
        rx = rx_position
        sis_center = (rx[0], rx[1] - num_layers * layer_spacing, rx[2])
    return SisGeometry(
        num_layers=num_layers,
        elements_per_layer=elements_per_layer,
        element_spacing=element_spacing,
        layer_spacing=layer_spacing,
        wavelength=wavelength,
        element_area=element_area,
        tx_position=tuple(float(v) for v in tx_position),
        rx_position=tuple(float(v) for v in rx_position),
        sis_center=tuple(float(v) for v in sis_center),
    )


@dataclass(frozen=True)
class PropagationMatrix:
    """Complex coupling coefficients between two layers.

    entries[n, m] couples element m of the source layer to element n of the
    destination layer.
    """

    entries: np.ndarray
    source_layer: int
    dest_layer: int


def element_positions(geometry: SisGeometry, layer_index: int) -> np.ndarray:
    """Element coordinates of one layer, shape (N, 3), row-major over the grid.

    Element n = r * sqrt(N) + c sits at in-plane offset
    (c - (side-1)/2, r - (side-1)/2) * spacing from the layer center.
    Layer planes are stacked along +y: layer L is at the stack center,
    layer 1 is (L-1) layer spacings closer to the receiver.
    """
    if not 1 <= layer_index <= geometry.num_layers:
        raise ValueError(
            f"layer_index must be in [1, {geometry.num_layers}], got {layer_index}"
        )
    side = geometry.grid_side
    offsets = (np.arange(side) - (side - 1) / 2.0) * geometry.element_spacing
    cx, cy, cz = geometry.sis_center
    cy = cy + (geometry.num_layers - layer_index) * geometry.layer_spacing
    xs, zs = np.meshgrid(offsets, offsets, indexing="xy")
    pos = np.empty((geometry.elements_per_layer, 3))
    pos[:, 0] = cx + xs.ravel()
    pos[:, 1] = cy
    pos[:, 2] = cz + zs.ravel()
    return pos


def rs_coefficient(
    src, dst, wavelength: float, element_area: float
) -> complex:
    """Rayleigh-Sommerfeld coupling between a source element and a destination point.

    w = (A * cos(chi) / d) * (1 / (2 pi d) - j / wavelength) * exp(j 2 pi d / wavelength)

    where d is the separation and chi the angle between the displacement and
    the source-layer normal (+y).
    """
    src = np.asarray(src, dtype=float)
    dst = np.asarray(dst, dtype=float)
    disp = dst - src
    d = float(np.linalg.norm(disp))
    if d == 0.0:
        raise ValueError("source and destination coincide (zero distance)")
    cos_chi = disp[1] / d
    return (
        (element_area * cos_chi / d)
        * (1.0 / (2.0 * np.pi * d) - 1j / wavelength)
        * np.exp(1j * 2.0 * np.pi * d / wavelength)
    )


def _rs_matrix(src_positions: np.ndarray, dst_positions: np.ndarray,
               wavelength: float, element_area: float) -> np.ndarray:
    """Vectorized rs_coefficient over all (dst, src) pairs."""
    disp = dst_positions[:, None, :] - src_positions[None, :, :]
    d = np.linalg.norm(disp, axis=2)
    if np.any(d == 0.0):
        raise ValueError("coincident source/destination elements")
    cos_chi = disp[:, :, 1] / d
    return (
        (element_area * cos_chi / d)
        * (1.0 / (2.0 * np.pi * d) - 1j / wavelength)
        * np.exp(1j * 2.0 * np.pi * d / wavelength)
    )


def inter_layer_matrix(geometry: SisGeometry, layer_index: int) -> PropagationMatrix:
    """Coupling matrix H_l from layer `layer_index` to layer `layer_index - 1`.

    Valid for layer_index in [2, num_layers]; entry (n, m) is the
    rs_coefficient from element m of the source layer to element n of the
    destination layer.
    """
    if not 2 <= layer_index <= geometry.num_layers:
        raise ValueError(
            f"layer_index must be in [2, {geometry.num_layers}], got {layer_index}"
        )
    src = element_positions(geometry, layer_index)
    dst = element_positions(geometry, layer_index - 1)
    entries = _rs_matrix(src, dst, geometry.wavelength, geometry.element_area)
    entries.flags.writeable = False
    return PropagationMatrix(
        entries=entries, source_layer=layer_index, dest_layer=layer_index - 1
    )


def combining_vector(geometry: SisGeometry) -> np.ndarray:
    """Coupling from each layer-1 element to the receive antenna, shape (N,).

    The antenna is treated as a point located at rx_position and coupled by
    the same diffraction law as the inter-layer hops.
    """
    src = element_positions(geometry, 1)
    dst = np.asarray(geometry.rx_position, dtype=float)[None, :]
    vec = _rs_matrix(src, dst, geometry.wavelength, geometry.element_area)[0]
    vec.flags.writeable = False
    return vec


def material_delay(thickness: float, relative_permittivity: float) -> float:
    """Traversal delay of a dielectric slab: thickness * sqrt(eps_r) / c."""
    if thickness < 0:
        raise ValueError("thickness must be non-negative")
    if relative_permittivity < 1:
        raise ValueError("relative permittivity must be >= 1")
    return thickness * math.sqrt(relative_permittivity) / SPEED_OF_LIGHT
