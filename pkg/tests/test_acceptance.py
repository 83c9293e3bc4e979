"""End-to-end runs: every stage on a tiny configuration, and detection quality at desk scale."""

import csv

import numpy as np
import pytest
import yaml

from ferroscope.imaging import read_png, read_tile_manifest
from ferroscope.main import STAGES, build_parser, configure, main
from ferroscope.nets import classify_batch, strip_steel
from ferroscope.ocsvm import read_features, read_model
from ferroscope.synthdata import BACKGROUND, HOLDOUT_STREAM, CorpusConfig, gen_class
from ferroscope.training import restore

TINY = [
    "imgrid.tile_side=16",
    "net.encoder_depth=1",
    "net.classifier_depth=2",
    "net.base_channels=2",
    "net.bridge_blocks=1",
    "net.convs_per_stage=1",
    "net.disc_downsamplings=2",
    "net.disc_base_channels=2",
    "net.feature_channels=4",
    "train.classifier.epochs=1",
    "train.classifier.batch_size=4",
    "train.gan.epochs=1",
    "train.gan.batch_size=4",
    "synth.counts={normal: 4, rolled_in_scale: 4, inclusion: 4, scratch: 4, patch: 4, background: 4}",
    "synth.gan_normal=8",
    "synth.holdout_normal=4",
    "synth.holdout_defect=4",
    "synth.strips=2",
    "synth.strip_height=16",
    "synth.strip_width=60",
    "logging.file_enabled=false",
]


def _rows(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


@pytest.fixture
def run_stage(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    workdir = tmp_path / "run"
    args = ["--set", f"paths.workdir={workdir}", "--set", f"paths.corpus={workdir / 'corpus'}",
            "--set", f"paths.raw_images={workdir / 'strips'}"]
    for assignment in TINY:
        args += ["--set", assignment]

    def run(stage, *extra):
        return main([stage, *args, *extra])

    run.workdir = workdir
    return run


@pytest.mark.slow
def test_full_pipeline(run_stage):
    for stage in STAGES:
        assert run_stage(stage) == 0, stage
    w = run_stage.workdir

    tiles = read_tile_manifest(w / "tiles" / "manifest.csv")
    assert len(tiles) == 2 * 4
    assert {(row, col) for _, row, col, _ in tiles} == {(0, c) for c in range(4)}

    assert (w / "models" / "classifier.fsck").is_file()
    assert (w / "models" / "generator.fsck").is_file()
    gan = yaml.safe_load((w / "reports" / "gan.yaml").read_text())
    assert gan["metrics"]["feature_dim"] == 4 * 4 * 4

    for pool, count in (("train", 8), ("holdout", 8), ("tiles", 8)):
        assert read_features(w / "features" / f"{pool}.fvec").shape == (count, 64)
        scores = _rows(w / "scores" / f"{pool}.csv")
        assert len(scores) == count
        for row in scores:
            norm, eq1 = float(row["norm_score"]), float(row["eq1_score"])
            assert 0.0 <= norm <= 1.0
            assert norm == eq1 + 1.0

    train_norms = [float(r["norm_score"]) for r in _rows(w / "scores" / "train.csv")]
    assert min(train_norms) == 0.0 and max(train_norms) == 1.0
    assert read_model(w / "models" / "ocsvm.ocsv").calibrated

    af = _rows(w / "maps" / "af.csv")
    assert len(af) == 8
    assert all(0.0 <= float(r["af"]) <= 1.0 for r in af)
    heat = read_png(w / "maps" / "strip_000_heat.png")
    overlay = read_png(w / "maps" / "strip_000_overlay.png")
    assert heat.pixels.shape[1] == overlay.pixels.shape[1] == 64
    assert heat.channels == 3

    sheet = read_png(w / "montage" / "most_anomalous.png")
    assert sheet.pixels.shape[:2] == (3 * 16, 3 * 16)
    ranked = [float(r["norm_score"]) for r in _rows(w / "montage" / "most_anomalous.csv")]
    assert ranked == sorted(ranked, reverse=True)
    assert (w / "montage" / "pairs_most_anomalous.png").is_file()

    assert sum(int(r["count"]) for r in _rows(w / "hist" / "holdout.csv")) == 8
    report = yaml.safe_load((w / "reports" / "eval.yaml").read_text())
    assert report["tiles"] == 8 and report["defect_tiles"] == 4
    assert 0.0 <= report["roc_auc"] <= 1.0
    confusion_rows = _rows(w / "reports" / "holdout_confusion.csv")
    classes = ["normal", "rolled_in_scale", "inclusion", "scratch", "patch", "background"]
    assert [r["true"] for r in confusion_rows[:-1]] == classes
    assert sum(int(r[name]) for r in confusion_rows[:-1] for name in classes) == 8


@pytest.mark.slow
def test_pipeline_is_reproducible(run_stage):
    for stage in ("synth", "train-gan", "features"):
        assert run_stage(stage) == 0
    first = read_features(run_stage.workdir / "features" / "holdout.fvec")
    assert run_stage("train-gan") == 0
    assert run_stage("features") == 0
    assert np.array_equal(first, read_features(run_stage.workdir / "features" / "holdout.fvec"))


@pytest.mark.slow
def test_recalibrated_scoring(run_stage):
    for stage in ("synth", "tile", "train-gan", "features", "fit-svm"):
        assert run_stage(stage) == 0
    assert run_stage("score", "--recalibrate") == 0
    holdout = [float(r["norm_score"]) for r in _rows(run_stage.workdir / "scores" / "holdout.csv")]
    assert min(holdout) == 0.0 and max(holdout) == 1.0


# Regression floors for the default desk configuration.
DESK_MIN_ROC_AUC = 0.85
DESK_MIN_DEFECT_NEGATIVE = 0.70
DESK_MIN_CLASSIFIER_ACCURACY = 0.80


@pytest.mark.slow
def test_desk_scale_detection_quality(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    workdir = tmp_path / "desk"
    args = ["--set", f"paths.workdir={workdir}", "--set", f"paths.corpus={workdir / 'corpus'}",
            "--set", "logging.file_enabled=false"]
    for stage in ("synth", "train-cls", "train-gan", "features", "fit-svm", "score", "eval"):
        assert main([stage, *args]) == 0, stage

    classifier_report = yaml.safe_load((workdir / "reports" / "classifier.yaml").read_text())
    assert classifier_report["metrics"]["accuracy"] >= DESK_MIN_CLASSIFIER_ACCURACY

    report = yaml.safe_load((workdir / "reports" / "eval.yaml").read_text())
    assert (report["normal_tiles"], report["defect_tiles"]) == (128, 128)
    assert report["roc_auc"] >= DESK_MIN_ROC_AUC
    assert report["defect_negative_fraction"] >= DESK_MIN_DEFECT_NEGATIVE

    loader = configure(build_parser().parse_args(["eval", *args]))
    catalog = strip_steel()
    background = catalog.index(BACKGROUND)
    unseen = [t.tile for t in gen_class(CorpusConfig.from_config(loader), BACKGROUND, 8, stream=HOLDOUT_STREAM)]
    probs = classify_batch(restore(workdir / "models" / "classifier.fsck"), unseen)
    recognised = [p.argmax == background and p.probs[background] > 0.5 for p in probs]
    assert sum(recognised) >= 7
