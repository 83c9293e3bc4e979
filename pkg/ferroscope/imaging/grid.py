"""
Ferroscope Image Grid
=====================

Divides raw inspection images into fixed-size unit images on an M x N grid
and reassembles per-tile values into full-resolution maps.

Two edge policies:
- SCALE_UP: bilinear upscale so both dimensions are exact multiples of the
  tile side, then cut exact tiles (strip images 256 x 1600 -> 256 x 1792 -> 1 x 7)
- DROP_PARTIAL: cut full tiles anchored at the top-left corner and discard
  the partial strips at the right and bottom edges
"""

import os
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, List, Sequence, Tuple, Union

import cv2
import numpy as np

from ferroscope.utils.errors import InvalidArgumentError, TooSmallError
from ferroscope.utils.fileio import atomic_write

MIN_TILE_SIDE = 8


class TilePolicy(str, Enum):
    SCALE_UP = "scaleup"
    DROP_PARTIAL = "droppartial"

    @classmethod
    def parse(cls, value: Union[str, "TilePolicy"]) -> "TilePolicy":
        if isinstance(value, TilePolicy):
            return value
        try:
            return cls(str(value).lower().replace("_", "").replace("-", ""))
        except ValueError as e:
            raise InvalidArgumentError(f"Unknown tiling policy: {value!r}") from e


@dataclass(frozen=True)
class RawImage:
    """Row-major 8-bit image; pixels has shape (height, width, channels)."""

    pixels: np.ndarray
    source_id: str = ""

    def __post_init__(self) -> None:
        if self.pixels.ndim != 3 or self.pixels.shape[2] not in (1, 3):
            raise InvalidArgumentError(f"RawImage needs (H, W, 1|3) pixels, got shape {self.pixels.shape}")
        if self.pixels.dtype != np.uint8:
            raise InvalidArgumentError(f"RawImage pixels must be uint8, got {self.pixels.dtype}")
        if self.pixels.shape[0] < 1 or self.pixels.shape[1] < 1:
            raise InvalidArgumentError("RawImage must be non-empty")

    @property
    def height(self) -> int:
        return int(self.pixels.shape[0])

    @property
    def width(self) -> int:
        return int(self.pixels.shape[1])

    @property
    def channels(self) -> int:
        return int(self.pixels.shape[2])


@dataclass(frozen=True)
class UnitImage:
    """One grid cell U_i cut from a raw image."""

    pixels: np.ndarray
    row: int
    col: int
    source_id: str = ""

    def __post_init__(self) -> None:
        if self.pixels.ndim != 3 or self.pixels.shape[0] != self.pixels.shape[1]:
            raise InvalidArgumentError(f"UnitImage needs square (side, side, C) pixels, got {self.pixels.shape}")

    @property
    def side(self) -> int:
        return int(self.pixels.shape[0])

    @property
    def channels(self) -> int:
        return int(self.pixels.shape[2])

    @property
    def tile_id(self) -> str:
        return f"{self.source_id}_r{self.row:03d}_c{self.col:03d}"

    def as_float(self) -> np.ndarray:
        """Channel-first float32 array in [0, 1], the network input layout."""
        return (self.pixels.astype(np.float32) / 255.0).transpose(2, 0, 1)


@dataclass(frozen=True)
class TileGrid:
    rows: int
    cols: int
    side: int
    policy: TilePolicy
    effective_height: int
    effective_width: int

    @property
    def count(self) -> int:
        return self.rows * self.cols


def _check_side(side: int) -> None:
    if side <= 0:
        raise InvalidArgumentError(f"Tile side must be positive, got {side}")
    if side < MIN_TILE_SIDE:
        raise InvalidArgumentError(f"Tile side must be >= {MIN_TILE_SIDE}, got {side}")


def scale_to_multiple(img: RawImage, side: int) -> RawImage:
    """Bilinearly upscale each dimension to the next multiple of ``side``."""
    _check_side(side)
    target_h = -(-img.height // side) * side
    target_w = -(-img.width // side) * side
    if (target_h, target_w) == (img.height, img.width):
        return img
    resized = cv2.resize(img.pixels, (target_w, target_h), interpolation=cv2.INTER_LINEAR)
    if resized.ndim == 2:
        resized = resized[:, :, None]
    return RawImage(np.ascontiguousarray(resized), img.source_id)


def tile(img: RawImage, side: int, policy: Union[str, TilePolicy] = TilePolicy.SCALE_UP) -> Tuple[TileGrid, List[UnitImage]]:
    """Cut ``img`` into row-major unit images."""
    policy = TilePolicy.parse(policy)
    _check_side(side)
    if policy is TilePolicy.SCALE_UP:
        img = scale_to_multiple(img, side)
    rows, cols = img.height // side, img.width // side
    if rows < 1 or cols < 1:
        raise TooSmallError(f"Image {img.height}x{img.width} is smaller than one {side}px tile")

    grid = TileGrid(rows, cols, side, policy, rows * side, cols * side)
    tiles = [
        UnitImage(
            np.ascontiguousarray(img.pixels[r * side:(r + 1) * side, c * side:(c + 1) * side]),
            r,
            c,
            img.source_id,
        )
        for r in range(rows)
        for c in range(cols)
    ]
    return grid, tiles


def untile(grid: TileGrid, tiles: Sequence[UnitImage]) -> RawImage:
    """Concatenate tiles back into the covered region of the source."""
    if len(tiles) != grid.count:
        raise InvalidArgumentError(f"Expected {grid.count} tiles, got {len(tiles)}")
    channels = tiles[0].channels
    canvas = np.zeros((grid.effective_height, grid.effective_width, channels), dtype=np.uint8)
    s = grid.side
    for t in tiles:
        canvas[t.row * s:(t.row + 1) * s, t.col * s:(t.col + 1) * s] = t.pixels
    return RawImage(canvas, tiles[0].source_id)


def expand_values(grid: TileGrid, values: Sequence[float]) -> np.ndarray:
    """Expand M*N per-tile values into an (effective_height, effective_width) block field."""
    field = np.asarray(values, dtype=np.float64)
    if field.size != grid.count:
        raise InvalidArgumentError(f"Expected {grid.count} values for a {grid.rows}x{grid.cols} grid, got {field.size}")
    field = field.reshape(grid.rows, grid.cols)
    return np.kron(field, np.ones((grid.side, grid.side)))


def quantize(values: np.ndarray, value_range: Tuple[float, float] = (0.0, 1.0)) -> np.ndarray:
    """Affine-map ``value_range`` onto [0, 255] and round half up."""
    lo, hi = value_range
    if not hi > lo:
        raise InvalidArgumentError(f"Value range must be increasing, got {value_range}")
    scaled = (np.asarray(values, dtype=np.float64) - lo) / (hi - lo) * 255.0
    return np.clip(np.floor(scaled + 0.5), 0, 255).astype(np.uint8)


def reassemble(grid: TileGrid, values: Sequence[float], value_range: Tuple[float, float] = (0.0, 1.0)) -> RawImage:
    """Single-channel image where every pixel of tile (r, c) holds values[r, c]."""
    field = expand_values(grid, values)
    return RawImage(quantize(field, value_range)[:, :, None])


def write_tile_manifest(path: Union[str, os.PathLike], records: Iterable[Tuple[str, int, int, str]]) -> None:
    """One ``source_id,row,col,relative_path`` line per tile."""
    with atomic_write(path, "w") as fh:
        for source_id, row, col, rel in records:
            fh.write(f"{source_id},{row},{col},{rel}\n")


def read_tile_manifest(path: Union[str, os.PathLike]) -> List[Tuple[str, int, int, str]]:
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            source_id, row, col, rel = line.rsplit(",", 3)
            records.append((source_id, int(row), int(col), rel))
    return records
