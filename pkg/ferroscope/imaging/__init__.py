"""
Imaging package: unit-image tiling and PNG I/O.
"""

from .grid import (
    RawImage,
    TileGrid,
    TilePolicy,
    UnitImage,
    expand_values,
    quantize,
    reassemble,
    read_tile_manifest,
    scale_to_multiple,
    tile,
    untile,
    write_tile_manifest,
)
from .pngio import encode_png, read_png, write_png

__all__ = [
    "RawImage",
    "TileGrid",
    "TilePolicy",
    "UnitImage",
    "expand_values",
    "quantize",
    "reassemble",
    "read_tile_manifest",
    "scale_to_multiple",
    "tile",
    "untile",
    "write_tile_manifest",
    "encode_png",
    "read_png",
    "write_png",
]
