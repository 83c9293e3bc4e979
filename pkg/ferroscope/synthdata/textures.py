"""
Brushed-steel and background textures.

Normal texture: a mid-gray base level plus horizontal streaks (a sum of
seeded sinusoids over the rows with whole-cycle frequencies, so the streaks
average out over a tile) plus uniform white noise.
"""

import numpy as np

from ferroscope.synthdata.base import to_uint8
from ferroscope.synthdata.config import CorpusConfig

STREAK_AMPLITUDE = (2.0, 8.0)
BACKGROUND_LEVEL = (4.0, 16.0)
BACKGROUND_NOISE = 3.0


def normal_texture(rng: np.random.Generator, height: int, width: int, cfg: CorpusConfig) -> np.ndarray:
    """(height, width) uint8 brushed-metal texture."""
    low, high = cfg.streak_components
    components = int(rng.integers(low, high + 1))
    max_cycles = max(2, height // 4)
    rows = np.arange(height, dtype=np.float64)
    profile = np.zeros(height)
    for _ in range(components):
        amplitude = rng.uniform(*STREAK_AMPLITUDE)
        cycles = int(rng.integers(1, max_cycles + 1))
        phase = rng.uniform(0.0, 2.0 * np.pi)
        profile += amplitude * np.sin(2.0 * np.pi * cycles * rows / height + phase)
    level = rng.uniform(*cfg.base_level)
    noise = rng.uniform(-cfg.noise_amplitude, cfg.noise_amplitude, size=(height, width))
    return to_uint8(level + profile[:, None] + noise)


def background_texture(rng: np.random.Generator, height: int, width: int) -> np.ndarray:
    """Near-black off-sheet texture with faint noise."""
    level = rng.uniform(*BACKGROUND_LEVEL)
    noise = rng.uniform(-BACKGROUND_NOISE, BACKGROUND_NOISE, size=(height, width))
    return to_uint8(level + noise)
