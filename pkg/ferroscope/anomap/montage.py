"""
Top-k tile montages and ranked (raw image, map) pair sheets.
"""

import math
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ferroscope.imaging.grid import RawImage, UnitImage
from ferroscope.utils.errors import InvalidArgumentError

PAIR_GAP = 4


class MontageOrder(str, Enum):
    MOST_ANOMALOUS = "most_anomalous"
    MOST_NORMAL = "most_normal"


def rank_tiles(tiles: Sequence[UnitImage], scores: Sequence[float], k: int, order: MontageOrder = MontageOrder.MOST_ANOMALOUS) -> List[int]:
    """Indices of the k extreme tiles; ties broken by (source_id, row, col)."""
    if len(tiles) != len(scores):
        raise InvalidArgumentError(f"{len(tiles)} tiles for {len(scores)} scores")
    if not 1 <= k <= len(tiles):
        raise InvalidArgumentError(f"k={k} must be between 1 and the tile count {len(tiles)}")
    sign = -1.0 if MontageOrder(order) is MontageOrder.MOST_ANOMALOUS else 1.0
    ranked = sorted(
        range(len(tiles)),
        key=lambda i: (sign * float(scores[i]), tiles[i].source_id, tiles[i].row, tiles[i].col),
    )
    return ranked[:k]


def grid_shape(k: int, rows: Optional[int] = None, cols: Optional[int] = None) -> Tuple[int, int]:
    if rows is None and cols is None:
        side = math.isqrt(k)
        side = side if side * side == k else side + 1
        return side, side
    if rows is None or cols is None or rows < 1 or cols < 1:
        raise InvalidArgumentError("Supply both rows and cols (positive) or neither")
    if rows * cols < k:
        raise InvalidArgumentError(f"A {rows}x{cols} grid cannot hold {k} tiles")
    return rows, cols


def montage(
    tiles: Sequence[UnitImage],
    scores: Sequence[float],
    k: int,
    order: MontageOrder = MontageOrder.MOST_ANOMALOUS,
    rows: Optional[int] = None,
    cols: Optional[int] = None,
) -> RawImage:
    """k tiles laid out row-major, most extreme first, on a ceil(sqrt(k)) square grid by default."""
    picked = rank_tiles(tiles, scores, k, order)
    n_rows, n_cols = grid_shape(k, rows, cols)
    side, channels = tiles[picked[0]].side, tiles[picked[0]].channels
    canvas = np.zeros((n_rows * side, n_cols * side, channels), dtype=np.uint8)
    for slot, index in enumerate(picked):
        t = tiles[index]
        if (t.side, t.channels) != (side, channels):
            raise InvalidArgumentError(f"Tile {t.tile_id} differs in size from the first montage tile")
        r, c = divmod(slot, n_cols)
        canvas[r * side:(r + 1) * side, c * side:(c + 1) * side] = t.pixels
    return RawImage(canvas, f"montage_{MontageOrder(order).value}_{k}")


def _rgb(pixels: np.ndarray) -> np.ndarray:
    return np.repeat(pixels, 3, axis=2) if pixels.shape[2] == 1 else pixels


def pair_montage(
    raws: Sequence[RawImage],
    maps: Sequence[RawImage],
    peaks: Sequence[float],
    rows: int = 5,
    cols: int = 2,
    order: MontageOrder = MontageOrder.MOST_ANOMALOUS,
) -> RawImage:
    """Sheet of (raw, rendered map) pairs ranked by each map's peak AF."""
    if not (len(raws) == len(maps) == len(peaks)) or not raws:
        raise InvalidArgumentError("pair_montage needs equal, non-empty lists of raws, maps and peaks")
    if rows < 1 or cols < 1:
        raise InvalidArgumentError("rows and cols must be positive")
    sign = -1.0 if MontageOrder(order) is MontageOrder.MOST_ANOMALOUS else 1.0
    ranked = sorted(range(len(raws)), key=lambda i: (sign * float(peaks[i]), raws[i].source_id))
    ranked = ranked[: rows * cols]

    cell_h = max(max(raws[i].height, maps[i].height) for i in ranked)
    cell_w = max(raws[i].width + maps[i].width for i in ranked) + PAIR_GAP
    canvas = np.zeros((rows * (cell_h + PAIR_GAP), cols * (cell_w + PAIR_GAP), 3), dtype=np.uint8)
    for slot, i in enumerate(ranked):
        r, c = divmod(slot, cols)
        top, left = r * (cell_h + PAIR_GAP), c * (cell_w + PAIR_GAP)
        raw, heat = _rgb(raws[i].pixels), _rgb(maps[i].pixels)
        canvas[top:top + raw.shape[0], left:left + raw.shape[1]] = raw
        offset = left + raw.shape[1] + PAIR_GAP
        canvas[top:top + heat.shape[0], offset:offset + heat.shape[1]] = heat
    return RawImage(canvas, f"pairs_{MontageOrder(order).value}")
