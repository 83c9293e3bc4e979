"""Shared fixtures: file logging off, seeded RNG, tiny configurations, published matrices."""

import os

os.environ.setdefault("FERROSCOPE_LOG_FILE", "0")

import numpy as np
import pytest

from ferroscope.metrics import ConfusionMatrix
from ferroscope.nets import NetConfig
from ferroscope.synthdata import CorpusConfig
from ferroscope.utils.config_loader import ConfigLoader

# Published 7-class bridge inspection matrix; blank cells are zero.
TABLE4_NAMES = ["CoROI", "mixCoBack", "Background", "PaintSteel", "mixCoPaint", "DarkCoUnused", "StCorrosion"]
TABLE4 = [
    [1069, 6, 1, 3, 33, 0, 9],
    [1, 91, 10, 4, 1, 0, 3],
    [1, 9, 235, 3, 2, 2, 9],
    [11, 1, 8, 658, 37, 11, 35],
    [28, 1, 3, 24, 704, 7, 52],
    [5, 2, 4, 13, 11, 81, 3],
    [10, 0, 8, 31, 33, 2, 678],
]
TABLE4_ROW_PCT = ["95.4", "82.7", "90.0", "86.5", "86.0", "68.1", "89.0"]
TABLE4_COL_PCT = ["95.0", "82.7", "87.4", "89.4", "85.7", "78.6", "85.9"]

# Published 6-class strip steel matrix.
TABLE7_NAMES = ["normal", "urokoScale", "inclusion", "scratch", "patch", "background"]
TABLE7 = [
    [222, 70, 7, 1, 0, 7],
    [16, 345, 17, 4, 13, 0],
    [16, 42, 128, 5, 0, 2],
    [6, 25, 6, 125, 11, 4],
    [0, 5, 0, 7, 78, 0],
    [3, 0, 0, 1, 0, 210],
]
TABLE7_ROW_PCT = ["72.3", "87.3", "66.3", "70.6", "86.7", "98.1"]
TABLE7_COL_PCT = ["84.4", "70.8", "81.0", "87.4", "76.5", "94.2"]


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def table4():
    return ConfusionMatrix.from_counts(TABLE4)


@pytest.fixture
def table7():
    return ConfusionMatrix.from_counts(TABLE7)


@pytest.fixture
def tiny_net_config():
    """16px single-channel networks small enough for gradient checks and quick training."""
    return NetConfig.desk(
        input_side=16,
        encoder_depth=1,
        base_channels=2,
        bridge_blocks=1,
        convs_per_stage=1,
        disc_downsamplings=2,
        disc_base_channels=2,
        feature_channels=4,
    )


@pytest.fixture
def tiny_corpus_config():
    return CorpusConfig(
        tile_side=16,
        counts={"normal": 4, "rolled_in_scale": 4, "inclusion": 4, "scratch": 4, "patch": 4, "background": 4},
        seed=11,
        gan_normal=8,
        holdout_normal=4,
        holdout_defect=4,
        strips=2,
        strip_height=16,
        strip_width=60,
    )


@pytest.fixture
def loader(tmp_path):
    """Fresh loader over the shipped defaults with paths inside tmp_path."""
    cfg = ConfigLoader(env_file=str(tmp_path / ".env"))
    cfg.set("paths.workdir", str(tmp_path / "run"))
    cfg.set("paths.corpus", str(tmp_path / "run" / "corpus"))
    cfg.set("paths.raw_images", str(tmp_path / "run" / "strips"))
    cfg.set("logging.file_enabled", False)
    return cfg
