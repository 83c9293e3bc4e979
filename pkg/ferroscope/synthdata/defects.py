"""
The four synthetic defect families and defect injection.
"""

from enum import Enum
from typing import Dict, Type, Union

import cv2
import numpy as np

from ferroscope.imaging.grid import UnitImage
from ferroscope.synthdata.base import BaseDefect, LabeledTile
from ferroscope.utils.errors import InvalidArgumentError


def _layer(shape) -> np.ndarray:
    return np.zeros(shape, dtype=np.uint8)


class Scratch(BaseDefect):
    """Bright or dark anti-aliased segment, length 45-85% of the side, through the middle."""

    kind = "scratch"

    def paint(self, canvas: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        h, w = canvas.shape
        side = min(h, w)
        length = rng.uniform(0.45, 0.85) * side
        angle = rng.uniform(0.0, np.pi)
        cy = h / 2 + rng.uniform(-0.05, 0.05) * side
        cx = w / 2 + rng.uniform(-0.05, 0.05) * side
        dx, dy = 0.5 * length * np.cos(angle), 0.5 * length * np.sin(angle)
        start = (int(round(cx - dx)), int(round(cy - dy)))
        end = (int(round(cx + dx)), int(round(cy + dy)))
        layer = _layer(canvas.shape)
        cv2.line(layer, start, end, 255, int(rng.integers(1, 3)), cv2.LINE_AA)
        sign = 1.0 if rng.random() < 0.5 else -1.0
        return canvas + sign * self._contrast(rng) * (layer / 255.0)


class Patch(BaseDefect):
    """Filled ellipse offset by at least 30 gray levels, toward the side with more headroom."""

    kind = "patch"

    def paint(self, canvas: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        h, w = canvas.shape
        side = min(h, w)
        center = (int(round(rng.uniform(0.3, 0.7) * w)), int(round(rng.uniform(0.3, 0.7) * h)))
        axes = (
            max(2, int(round(rng.uniform(0.15, 0.3) * side))),
            max(2, int(round(rng.uniform(0.15, 0.3) * side))),
        )
        layer = _layer(canvas.shape)
        cv2.ellipse(layer, center, axes, float(rng.uniform(0.0, 180.0)), 0, 360, 255, -1, cv2.LINE_AA)
        offset = max(30.0, self._contrast(rng))
        sign = -1.0 if canvas.mean() > 128.0 else 1.0
        return canvas + sign * offset * (layer / 255.0)


class Inclusion(BaseDefect):
    """One to three small dark blobs."""

    kind = "inclusion"

    def paint(self, canvas: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        h, w = canvas.shape
        side = min(h, w)
        layer = _layer(canvas.shape)
        for _ in range(int(rng.integers(1, 4))):
            radius = max(2, int(round(rng.uniform(0.05, 0.15) * side / 2)))
            center = (
                int(rng.integers(radius, w - radius)),
                int(rng.integers(radius, h - radius)),
            )
            cv2.circle(layer, center, radius, 255, -1, cv2.LINE_AA)
        return canvas - self._contrast(rng) * (layer / 255.0)


class RolledScale(BaseDefect):
    """Dark high-frequency speckle over a random sub-rectangle."""

    kind = "rolled_in_scale"

    def paint(self, canvas: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        h, w = canvas.shape
        rh = max(2, int(round(rng.uniform(0.3, 0.6) * h)))
        rw = max(2, int(round(rng.uniform(0.3, 0.6) * w)))
        top = int(rng.integers(0, h - rh + 1))
        left = int(rng.integers(0, w - rw + 1))
        speckle = (rng.random((rh, rw)) < 0.5) * rng.uniform(0.5, 1.0, size=(rh, rw))
        out = canvas.copy()
        out[top:top + rh, left:left + rw] -= self._contrast(rng) * speckle
        return out


class DefectKind(str, Enum):
    ROLLED_SCALE = "rolled_in_scale"
    INCLUSION = "inclusion"
    SCRATCH = "scratch"
    PATCH = "patch"

    @classmethod
    def parse(cls, value: Union[str, "DefectKind"]) -> "DefectKind":
        aliases = {"rolledscale": cls.ROLLED_SCALE, "rolled_scale": cls.ROLLED_SCALE}
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        if key in aliases:
            return aliases[key]
        try:
            return cls(key)
        except ValueError as e:
            raise InvalidArgumentError(f"Unknown defect kind: {value!r}") from e


DEFECTS: Dict[DefectKind, Type[BaseDefect]] = {
    DefectKind.ROLLED_SCALE: RolledScale,
    DefectKind.INCLUSION: Inclusion,
    DefectKind.SCRATCH: Scratch,
    DefectKind.PATCH: Patch,
}


def inject_defect(
    tile: Union[LabeledTile, UnitImage],
    kind: Union[str, DefectKind],
    seed: int,
    label: int = -1,
    contrast=(40.0, 90.0),
) -> LabeledTile:
    """Defective copy of a normal tile with its change mask."""
    defect = defect_for(kind, contrast)
    unit = tile.tile if isinstance(tile, LabeledTile) else tile
    pixels, mask = defect.apply(unit.pixels, np.random.default_rng(seed))
    return LabeledTile(UnitImage(pixels, unit.row, unit.col, unit.source_id), label, mask)


def defect_for(kind: Union[str, DefectKind], contrast=(40.0, 90.0)) -> BaseDefect:
    return DEFECTS[DefectKind.parse(kind)](contrast)
