"""
Synthetic steel-surface corpus generation and corpus loading.
"""

from .base import BaseDefect, LabeledTile
from .config import BACKGROUND, DEFECT_CLASSES, NORMAL, SYNTH_CLASSES, CorpusConfig
from .corpus import (
    CORPUS_STREAM,
    GAN_STREAM,
    HOLDOUT_STREAM,
    MANIFEST,
    StripImage,
    gen_class,
    gen_normal,
    gen_strip,
    generate_tile,
    load_corpus,
    make_corpus,
    split_labels,
)
from .defects import DEFECTS, DefectKind, Inclusion, Patch, RolledScale, Scratch, inject_defect
from .textures import background_texture, normal_texture

__all__ = [
    "BACKGROUND",
    "BaseDefect",
    "CORPUS_STREAM",
    "CorpusConfig",
    "DEFECTS",
    "DEFECT_CLASSES",
    "DefectKind",
    "GAN_STREAM",
    "HOLDOUT_STREAM",
    "Inclusion",
    "LabeledTile",
    "MANIFEST",
    "NORMAL",
    "Patch",
    "RolledScale",
    "SYNTH_CLASSES",
    "Scratch",
    "StripImage",
    "background_texture",
    "gen_class",
    "gen_normal",
    "gen_strip",
    "generate_tile",
    "inject_defect",
    "load_corpus",
    "make_corpus",
    "normal_texture",
    "split_labels",
]
