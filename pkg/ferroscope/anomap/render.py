"""
Heatmap rendering of AF maps.

Each tile becomes a block of its jet colour (hard blocks by default, or a
bilinear interpolation of the M x N field with ``smooth=True``). The heat
layer is optionally alpha-blended over the source image, background tiles
are painted black, and a legend strip labelled 0 .. display_scale can be
appended below.
"""

from typing import Optional

import cv2
import numpy as np

from ferroscope.anomap.colormap import jet
from ferroscope.anomap.feature_map import AnomalousFeatureMap
from ferroscope.imaging.grid import RawImage, expand_values
from ferroscope.utils.errors import InvalidArgumentError

LEGEND_HEIGHT = 24
LEGEND_BAR = 8


def _as_rgb(pixels: np.ndarray) -> np.ndarray:
    return np.repeat(pixels, 3, axis=2) if pixels.shape[2] == 1 else pixels


def heat_field(afmap: AnomalousFeatureMap, smooth: bool = False) -> np.ndarray:
    """Per-pixel AF values over the grid coverage."""
    grid = afmap.grid
    if not smooth:
        return expand_values(grid, afmap.af)
    cells = afmap.cells.astype(np.float32)
    smoothed = cv2.resize(cells, (grid.effective_width, grid.effective_height), interpolation=cv2.INTER_LINEAR)
    return np.clip(smoothed.astype(np.float64), 0.0, 1.0)


def legend_strip(width: int, display_scale: float) -> np.ndarray:
    strip = np.zeros((LEGEND_HEIGHT, width, 3), dtype=np.uint8)
    ramp = jet(np.linspace(0.0, 1.0, width))
    strip[:LEGEND_BAR] = ramp[None, :, :]
    font, size, thickness = cv2.FONT_HERSHEY_SIMPLEX, 0.35, 1
    high = f"{display_scale:g}"
    (text_w, _), _ = cv2.getTextSize(high, font, size, thickness)
    baseline_y = LEGEND_HEIGHT - 4
    cv2.putText(strip, "0", (1, baseline_y), font, size, (255, 255, 255), thickness, cv2.LINE_AA)
    cv2.putText(strip, high, (max(width - text_w - 1, 0), baseline_y), font, size, (255, 255, 255), thickness, cv2.LINE_AA)
    return strip


def render(
    afmap: AnomalousFeatureMap,
    alpha: float = 1.0,
    base: Optional[RawImage] = None,
    smooth: bool = False,
    legend: bool = False,
) -> RawImage:
    """RGB heatmap (``base`` is None) or overlay ``alpha * heat + (1 - alpha) * base``."""
    if not 0.0 <= alpha <= 1.0:
        raise InvalidArgumentError(f"alpha must be in [0, 1], got {alpha}")
    grid = afmap.grid
    heat = jet(heat_field(afmap, smooth))

    if base is not None:
        if (base.height, base.width) != (grid.effective_height, grid.effective_width):
            raise InvalidArgumentError(
                f"Base image {base.height}x{base.width} does not match grid coverage "
                f"{grid.effective_height}x{grid.effective_width}"
            )
        out = cv2.addWeighted(heat, float(alpha), np.ascontiguousarray(_as_rgb(base.pixels)), 1.0 - float(alpha), 0.0)
    else:
        out = heat

    if afmap.background is not None and afmap.background.any():
        blocks = expand_values(grid, afmap.background.astype(np.float64)) > 0.5
        out = out.copy()
        out[blocks] = 0

    if legend:
        out = np.concatenate([out, legend_strip(out.shape[1], afmap.display_scale)], axis=0)
    return RawImage(np.ascontiguousarray(out), afmap.source_id)
