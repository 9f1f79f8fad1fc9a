import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from dasis.channel import default_temporal_taps, draw_channel
from dasis.geometry import make_geometry
from dasis.surface import SisConfig


@pytest.fixture(scope="session")
def paper_taps():
    return default_temporal_taps()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def small_system(num_layers=2, elements=4, channel_seed=3, kappa=15.0):
    """Geometry + channel pair for fast tests."""
    geometry = make_geometry(num_layers=num_layers, elements_per_layer=elements)
    channel = draw_channel(geometry, kappa, channel_seed)
    return geometry, channel


def random_config(num_layers, elements, rng) -> SisConfig:
    return SisConfig(
        phases=[rng.uniform(0.0, 2.0 * np.pi, elements) for _ in range(num_layers)],
        delay_bits=[
            rng.integers(0, 2, elements).astype(np.int8) for _ in range(num_layers)
        ],
    )
