"""
Ferroscope Defect Base
======================

Abstract base for synthetic defect families plus the labeled tile type.

A defect paints onto a float copy of a grayscale tile; the result is
quantized back to 8 bits and the mask is exactly the set of changed pixels,
so everything outside the mask is bit-identical to the input tile.
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from ferroscope.imaging.grid import UnitImage
from ferroscope.utils.errors import InvalidArgumentError


@dataclass(frozen=True)
class LabeledTile:
    tile: UnitImage
    label: int
    mask: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        if self.mask is not None and self.mask.shape != self.tile.pixels.shape[:2]:
            raise InvalidArgumentError(f"Mask {self.mask.shape} does not match tile {self.tile.pixels.shape[:2]}")

    @property
    def mask_fraction(self) -> float:
        if self.mask is None:
            return 0.0
        return float(self.mask.mean())


def to_uint8(values: np.ndarray) -> np.ndarray:
    return np.clip(np.floor(values + 0.5), 0, 255).astype(np.uint8)


class BaseDefect(ABC):
    """One defect family.

    Subclasses implement paint(); apply() handles quantization and masking.
    """

    kind = ""

    def __init__(self, contrast: Tuple[float, float] = (40.0, 90.0)) -> None:
        self.contrast = contrast

    @abstractmethod
    def paint(self, canvas: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        """Return a modified copy of the (H, W) float canvas."""

    def apply(self, pixels: np.ndarray, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
        """(defective uint8 pixels, boolean mask) for (H, W) or (H, W, 1) uint8 pixels."""
        gray = pixels[:, :, 0] if pixels.ndim == 3 else pixels
        painted = to_uint8(self.paint(gray.astype(np.float64), rng))
        mask = painted != gray
        out = painted[:, :, None] if pixels.ndim == 3 else painted
        return out, mask

    def _contrast(self, rng: np.random.Generator) -> float:
        return float(rng.uniform(*self.contrast))
