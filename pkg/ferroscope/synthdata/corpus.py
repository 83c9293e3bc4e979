"""
Ferroscope Corpus
=================

Synthetic tile generation and the on-disk corpus layout:

    <root>/<class_name>/<id>.png          8-bit grayscale tiles
    <root>/masks/<class_name>/<id>.png    defect masks (defect classes only)
    <root>/manifest.csv                   path,class,seed,sha256,mask_path

Tile i of class c in stream s draws from default_rng([seed, s, c, i]), so a
(config, seed) pair fixes the corpus byte for byte. Directories without a
manifest are scanned in catalog order, which is how third-party tiled
datasets are loaded.
"""

import csv
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from ferroscope.imaging.grid import RawImage, UnitImage
from ferroscope.imaging.pngio import read_png, write_png
from ferroscope.nets.catalog import ClassCatalog, strip_steel
from ferroscope.synthdata.base import LabeledTile
from ferroscope.synthdata.config import BACKGROUND, DEFECT_CLASSES, NORMAL, SYNTH_CLASSES, CorpusConfig
from ferroscope.synthdata.defects import defect_for, inject_defect
from ferroscope.synthdata.textures import background_texture, normal_texture
from ferroscope.utils.errors import CorruptCorpusError, FormatError, InvalidArgumentError
from ferroscope.utils.fileio import sha256_file, write_csv
from ferroscope.utils.logger import logger

MANIFEST = "manifest.csv"
MANIFEST_HEADER = ["path", "class", "seed", "sha256", "mask_path"]
MASK_DIR = "masks"

CORPUS_STREAM = 0
GAN_STREAM = 1
HOLDOUT_STREAM = 2
STRIP_STREAM = 3

PathLike = Union[str, os.PathLike]


def _class_index(name: str) -> int:
    return SYNTH_CLASSES.index(name)


def _rng(cfg: CorpusConfig, stream: int, class_name: str, i: int) -> np.random.Generator:
    return np.random.default_rng([cfg.seed, stream, _class_index(class_name), i])


def _unit(pixels: np.ndarray, tile_id: str) -> UnitImage:
    return UnitImage(pixels[:, :, None], 0, 0, tile_id)


def generate_tile(cfg: CorpusConfig, class_name: str, i: int, stream: int = CORPUS_STREAM, label: int = -1) -> LabeledTile:
    """Tile i of ``class_name`` in ``stream``."""
    if class_name not in SYNTH_CLASSES:
        raise InvalidArgumentError(f"Cannot synthesize class {class_name!r}")
    rng = _rng(cfg, stream, class_name, i)
    side = cfg.tile_side
    tile_id = f"{class_name}_{i:05d}"
    if class_name == BACKGROUND:
        return LabeledTile(_unit(background_texture(rng, side, side), tile_id), label)
    base = _unit(normal_texture(rng, side, side, cfg), tile_id)
    if class_name == NORMAL:
        return LabeledTile(base, label)
    return inject_defect(base, class_name, int(rng.integers(2 ** 31)), label, cfg.defect_contrast)


def gen_normal(cfg: CorpusConfig, n: int, stream: int = CORPUS_STREAM, label: int = 0) -> List[LabeledTile]:
    if n < 0:
        raise InvalidArgumentError(f"n must be >= 0, got {n}")
    return [generate_tile(cfg, NORMAL, i, stream, label) for i in range(n)]


def gen_class(cfg: CorpusConfig, class_name: str, n: int, stream: int = CORPUS_STREAM, label: int = -1) -> List[LabeledTile]:
    return [generate_tile(cfg, class_name, i, stream, label) for i in range(n)]


def make_corpus(
    cfg: CorpusConfig,
    path: PathLike,
    counts: Optional[Dict[str, int]] = None,
    stream: int = CORPUS_STREAM,
    catalog: Optional[ClassCatalog] = None,
) -> List[List[str]]:
    """Write a corpus and its manifest; returns the manifest rows."""
    root = Path(path)
    catalog = catalog or strip_steel()
    counts = cfg.counts if counts is None else counts
    rows: List[List[str]] = []
    for class_name in SYNTH_CLASSES:
        n = int(counts.get(class_name, 0))
        if n <= 0:
            continue
        label = catalog.index(class_name)
        (root / class_name).mkdir(parents=True, exist_ok=True)
        for i in range(n):
            item = generate_tile(cfg, class_name, i, stream, label)
            rel = f"{class_name}/{item.tile.source_id}.png"
            write_png(root / rel, item.tile.pixels)
            mask_rel = ""
            if item.mask is not None:
                mask_rel = f"{MASK_DIR}/{rel}"
                write_png(root / mask_rel, (item.mask.astype(np.uint8) * 255)[:, :, None])
            rows.append([rel, class_name, str(cfg.seed), sha256_file(root / rel), mask_rel])
        logger.debug("Class generated", corpus=str(root), class_name=class_name, tiles=n)
    write_csv(root / MANIFEST, MANIFEST_HEADER, rows)
    logger.info("Corpus written", path=str(root), tiles=len(rows), stream=stream)
    return rows


def _load_tile(path: Path, label: int, mask_path: Optional[Path] = None) -> LabeledTile:
    try:
        image = read_png(path)
        mask = None
        if mask_path is not None:
            mask = read_png(mask_path).pixels[:, :, 0] > 0
        return LabeledTile(UnitImage(image.pixels, 0, 0, image.source_id), label, mask)
    except (FormatError, InvalidArgumentError) as e:
        raise CorruptCorpusError(f"Unusable corpus tile {path}: {e}") from e


def load_corpus(path: PathLike, catalog: Optional[ClassCatalog] = None, verify: bool = True) -> List[LabeledTile]:
    """Load a corpus directory, validating it against manifest.csv when present."""
    root = Path(path)
    catalog = catalog or strip_steel()
    if not root.is_dir():
        raise CorruptCorpusError(f"Corpus directory not found: {root}")
    manifest = root / MANIFEST
    if not manifest.exists():
        return _scan(root, catalog)

    with open(manifest, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        missing = {"path", "class"} - set(reader.fieldnames or [])
        if missing:
            raise CorruptCorpusError(f"{manifest} lacks columns {sorted(missing)}")
        entries = list(reader)

    tiles = []
    for entry in entries:
        class_name = entry["class"]
        if class_name not in catalog.names:
            raise CorruptCorpusError(f"{manifest} lists class {class_name!r} outside the catalog")
        if not (root / class_name).is_dir():
            raise CorruptCorpusError(f"Class directory {root / class_name} listed in manifest is missing")
        tile_path = root / entry["path"]
        if not tile_path.is_file():
            raise CorruptCorpusError(f"Manifest references absent file {tile_path}")
        checksum = entry.get("sha256") or ""
        if verify and checksum and sha256_file(tile_path) != checksum:
            raise CorruptCorpusError(f"Checksum mismatch for {tile_path}")
        mask_rel = entry.get("mask_path") or ""
        mask_path = root / mask_rel if mask_rel else None
        if mask_path is not None and not mask_path.is_file():
            raise CorruptCorpusError(f"Manifest references absent mask {mask_path}")
        tiles.append(_load_tile(tile_path, catalog.index(class_name), mask_path))
    logger.info("Corpus loaded", path=str(root), tiles=len(tiles), manifest=True)
    return tiles


def _scan(root: Path, catalog: ClassCatalog) -> List[LabeledTile]:
    tiles = []
    for label, class_name in enumerate(catalog.names):
        class_dir = root / class_name
        if not class_dir.is_dir():
            continue
        for png in sorted(class_dir.glob("*.png")):
            tiles.append(_load_tile(png, label))
    if not tiles:
        raise CorruptCorpusError(f"No tiles found under {root} for classes {list(catalog.names)}")
    logger.info("Corpus loaded", path=str(root), tiles=len(tiles), manifest=False)
    return tiles


def split_labels(tiles: Sequence[LabeledTile]) -> Tuple[List[UnitImage], np.ndarray]:
    return [t.tile for t in tiles], np.asarray([t.label for t in tiles], dtype=np.int64)


@dataclass(frozen=True)
class StripImage:
    raw: RawImage
    defects: Tuple[Tuple[str, int], ...]
    background_columns: Tuple[int, int]


def gen_strip(cfg: CorpusConfig, index: int) -> StripImage:
    """Raw strip image: steel texture with an off-sheet run at one end and 1-2 defects.

    ``defects`` lists (kind, x offset); ``background_columns`` is the
    [start, stop) pixel range of the off-sheet run (empty when start == stop).
    """
    rng = np.random.default_rng([cfg.seed, STRIP_STREAM, index])
    h, w = cfg.strip_height, cfg.strip_width
    canvas = normal_texture(rng, h, w, cfg)

    run = int(rng.integers(0, max(1, w // 4) + 1))
    if rng.random() < 0.5:
        bg = (0, run)
    else:
        bg = (w - run, w)
    if run:
        canvas[:, bg[0]:bg[1]] = background_texture(rng, h, run)

    side = min(h, w)
    placed = []
    lo, hi = (bg[1], w) if bg[0] == 0 else (0, bg[0])
    for _ in range(int(rng.integers(1, 3))):
        if hi - lo < side:
            break
        kind = DEFECT_CLASSES[int(rng.integers(len(DEFECT_CLASSES)))]
        x = int(rng.integers(lo, hi - side + 1))
        window = canvas[:side, x:x + side]
        painted, _ = defect_for(kind, cfg.defect_contrast).apply(window, rng)
        canvas[:side, x:x + side] = painted
        placed.append((kind, x))
    return StripImage(RawImage(canvas[:, :, None], f"strip_{index:03d}"), tuple(placed), bg)
