"""
PNG read/write for raw images and rendered outputs (8-bit grayscale or RGB).

OpenCV stores colour images as BGR; everything in ferroscope is RGB, so the
channel order is swapped at this boundary only.
"""

import os
from pathlib import Path
from typing import Optional, Union

import cv2
import numpy as np

from ferroscope.imaging.grid import RawImage
from ferroscope.utils.errors import FormatError, InvalidArgumentError
from ferroscope.utils.fileio import atomic_write_bytes


def read_png(path: Union[str, os.PathLike], source_id: Optional[str] = None) -> RawImage:
    """Load an 8-bit PNG as a RawImage; the file stem is the default source id."""
    path = Path(path)
    if not path.exists():
        raise FormatError(f"Image not found: {path}")
    data = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
    if data is None:
        raise FormatError(f"Not a readable image: {path}")
    if data.dtype != np.uint8:
        raise FormatError(f"Only 8-bit images are supported, got {data.dtype} in {path}")
    if data.ndim == 2:
        pixels = data[:, :, None]
    elif data.shape[2] == 3:
        pixels = cv2.cvtColor(data, cv2.COLOR_BGR2RGB)
    elif data.shape[2] == 4:
        pixels = cv2.cvtColor(data, cv2.COLOR_BGRA2RGB)
    else:
        raise FormatError(f"Unsupported channel count {data.shape[2]} in {path}")
    return RawImage(np.ascontiguousarray(pixels), source_id or path.stem)


def encode_png(pixels: np.ndarray) -> bytes:
    """Encode an (H, W), (H, W, 1) or (H, W, 3) uint8 array as PNG bytes."""
    if pixels.dtype != np.uint8:
        raise InvalidArgumentError(f"PNG output must be uint8, got {pixels.dtype}")
    if pixels.ndim == 3 and pixels.shape[2] == 1:
        pixels = pixels[:, :, 0]
    if pixels.ndim == 3:
        if pixels.shape[2] != 3:
            raise InvalidArgumentError(f"Cannot write {pixels.shape[2]}-channel image as PNG")
        pixels = cv2.cvtColor(pixels, cv2.COLOR_RGB2BGR)
    ok, buffer = cv2.imencode(".png", pixels)
    if not ok:
        raise FormatError("PNG encoding failed")
    return buffer.tobytes()


def write_png(path: Union[str, os.PathLike], image: Union[RawImage, np.ndarray]) -> None:
    """Write an image atomically as PNG."""
    pixels = image.pixels if isinstance(image, RawImage) else image
    atomic_write_bytes(path, encode_png(pixels))
