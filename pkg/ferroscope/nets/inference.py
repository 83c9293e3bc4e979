"""
Frozen-network inference: classification, reconstruction and discriminator
feature extraction. Every call runs in EVAL mode, so results are
deterministic and the network can be shared between callers.
"""

from dataclasses import dataclass
from typing import Iterator, List, Sequence

import numpy as np

from ferroscope.imaging.grid import UnitImage
from ferroscope.nets.builders import FEATURE_NODE
from ferroscope.tensorcore import Mode, Network, softmax
from ferroscope.utils.errors import NonFiniteError, ShapeError

CHUNK = 64


@dataclass(frozen=True)
class ClassProbs:
    probs: np.ndarray

    @property
    def argmax(self) -> int:
        return int(np.argmax(self.probs))

    def __len__(self) -> int:
        return int(self.probs.shape[0])


@dataclass(frozen=True)
class FeatureVector:
    values: np.ndarray

    def __post_init__(self) -> None:
        if self.values.ndim != 1:
            raise ShapeError(f"Feature vector must be 1-D, got {self.values.shape}")
        if not np.all(np.isfinite(self.values)):
            raise NonFiniteError("Feature vector contains non-finite values", name="feature")

    @property
    def dim(self) -> int:
        return int(self.values.shape[0])


def stack_tiles(network: Network, tiles: Sequence[UnitImage]) -> np.ndarray:
    """(B, C, side, side) float batch, after checking each tile fits ``network``."""
    expected = network.input_shape
    for t in tiles:
        if (t.channels, t.side, t.side) != expected:
            raise ShapeError(
                f"Tile {t.tile_id} is {t.side}x{t.side}x{t.channels}; "
                f"{network.name} expects side {expected[1]} with {expected[0]} channel(s)"
            )
    if not tiles:
        return np.zeros((0,) + expected, dtype=np.float32)
    return np.stack([t.as_float() for t in tiles])


def _chunks(batch: np.ndarray) -> Iterator[np.ndarray]:
    for start in range(0, batch.shape[0], CHUNK):
        yield batch[start:start + CHUNK]


def classify_array(classifier: Network, batch: np.ndarray) -> np.ndarray:
    """Softmax probabilities, shape (B, K), for a float batch."""
    if batch.shape[0] == 0:
        return np.zeros((0, classifier.output_shape[0]), dtype=np.float64)
    parts = [softmax(classifier.run(c, Mode.EVAL).astype(np.float64)) for c in _chunks(batch)]
    return np.concatenate(parts)


def classify_batch(classifier: Network, tiles: Sequence[UnitImage]) -> List[ClassProbs]:
    probs = classify_array(classifier, stack_tiles(classifier, tiles))
    return [ClassProbs(row) for row in probs]


def classify(classifier: Network, tile: UnitImage) -> ClassProbs:
    return classify_batch(classifier, [tile])[0]


def generate_array(generator: Network, batch: np.ndarray) -> np.ndarray:
    if batch.shape[0] == 0:
        return batch.copy()
    return np.concatenate([generator.run(c, Mode.EVAL) for c in _chunks(batch)])


def generate_batch(generator: Network, tiles: Sequence[UnitImage]) -> np.ndarray:
    """Reconstructions with the input's (B, C, side, side) shape, values in [0, 1]."""
    return generate_array(generator, stack_tiles(generator, tiles))


def generate(generator: Network, tile: UnitImage) -> np.ndarray:
    return generate_batch(generator, [tile])[0]


def feature_array(discriminator: Network, batch: np.ndarray) -> np.ndarray:
    """Post-ELU final conv activation flattened channel-major, shape (B, D)."""
    dim = int(np.prod(discriminator.shape_of(FEATURE_NODE)))
    if batch.shape[0] == 0:
        return np.zeros((0, dim), dtype=np.float32)
    parts = [
        discriminator.forward(c, Mode.EVAL)[FEATURE_NODE].reshape(c.shape[0], dim)
        for c in _chunks(batch)
    ]
    return np.concatenate(parts)


def extract_features(discriminator: Network, tiles: Sequence[UnitImage]) -> List[FeatureVector]:
    return [FeatureVector(row) for row in feature_array(discriminator, stack_tiles(discriminator, tiles))]


def extract_feature(discriminator: Network, tile: UnitImage) -> FeatureVector:
    return extract_features(discriminator, [tile])[0]
