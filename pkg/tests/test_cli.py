import pytest
import yaml

from ferroscope.engine import PipelineEngine, split_evenly
from ferroscope.main import STAGES, build_parser, configure, main
from ferroscope.utils.errors import TrainingDivergedError


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    """Run the CLI from an empty directory so no stray .env or relative path leaks in."""
    monkeypatch.chdir(tmp_path)
    return tmp_path / "run"


def _run(workdir, *argv):
    return main([*argv, "--set", f"paths.workdir={workdir}", "--set", "logging.file_enabled=false"])


def test_dry_run_prints_resolved_config(workdir, capsys):
    code = _run(workdir, "fit-svm", "--dry-run", "--nu", "0.2", "--set", "anomap.alpha=0.7")
    assert code == 0
    data = yaml.safe_load(capsys.readouterr().out)
    assert data["ocsvm"]["nu"] == 0.2
    assert data["anomap"]["alpha"] == 0.7
    assert data["paths"]["workdir"] == str(workdir.resolve())
    assert not workdir.exists()


def test_dry_run_leaves_the_directory_untouched(tmp_path, monkeypatch, capsys):
    monkeypatch.chdir(tmp_path)
    assert main(["synth", "--dry-run"]) == 0
    assert yaml.safe_load(capsys.readouterr().out)["paths"]["workdir"] == str(tmp_path.resolve() / "runs" / "desk")
    assert list(tmp_path.iterdir()) == []


def test_relative_paths_are_made_absolute(workdir, capsys):
    assert main(["synth", "--dry-run", "--set", "paths.corpus=data/corpus"]) == 0
    data = yaml.safe_load(capsys.readouterr().out)
    assert data["paths"]["corpus"] == str(workdir.parent.resolve() / "data" / "corpus")


def test_unknown_override_key_exits_one(workdir):
    assert _run(workdir, "synth", "--set", "ocsvm.kernel=linear") == 1
    assert _run(workdir, "synth", "--set", "ocsvm.nu") == 1


def test_invalid_config_values_exit_one(workdir):
    assert _run(workdir, "tile", "--set", "imgrid.policy=zigzag") == 1
    assert _run(workdir, "tile", "--set", "net.preset=huge") == 1
    assert _run(workdir, "score", "--nu", "1.5") == 1
    assert _run(workdir, "map", "--anomalous-classes", "rust") == 1
    assert _run(workdir, "eval", "--config", "missing.yaml") == 1


def test_usage_errors_exit_one(workdir):
    for argv in (["fit-svm", "--kernel", "rbf"], ["detect"], [], ["tile", "--policy", "zigzag"]):
        with pytest.raises(SystemExit) as info:
            main(argv)
        assert info.value.code == 1


@pytest.mark.parametrize("stage", ["tile", "features", "fit-svm", "score", "map", "montage", "hist", "eval"])
def test_missing_stage_inputs_exit_two(workdir, stage):
    assert _run(workdir, stage) == 2


def test_corpus_stage_without_corpus_exits_two(workdir):
    assert _run(workdir, "train-cls") == 2


def test_numerical_failure_exits_three(workdir, mocker):
    mocker.patch.object(PipelineEngine, "run", side_effect=TrainingDivergedError("non-finite loss"))
    assert _run(workdir, "train-gan") == 3


def test_interrupt_exits_130(workdir, mocker):
    mocker.patch.object(PipelineEngine, "run", side_effect=KeyboardInterrupt)
    assert _run(workdir, "synth") == 130


def test_stage_flags_map_onto_config(workdir):
    args = build_parser().parse_args(
        ["train-gan", "--epochs", "2", "--batch-size", "8", "--lambda-rec", "10", "--tile-side", "64", "--seed", "5"]
    )
    loader = configure(args)
    assert loader.get("train.gan.epochs") == 2
    assert loader.get("train.gan.batch_size") == 8
    assert loader.get("train.classifier.epochs") == 12
    assert loader.get("train.gan.lambda_rec") == 10.0
    assert loader.get("imgrid.tile_side") == 64
    assert loader.seed() == 5


def test_flags_override_config_file_and_set(workdir):
    user = workdir.parent / "user.yaml"
    user.write_text("ocsvm:\n  nu: 0.3\n  recalibrate: false\n", encoding="utf-8")
    args = build_parser().parse_args(
        ["score", "--config", str(user), "--set", "ocsvm.nu=0.4", "--nu", "0.05", "--recalibrate",
         "--anomalous-classes", "scratch,patch"]
    )
    loader = configure(args)
    assert loader.get("ocsvm.nu") == 0.05
    assert loader.get("ocsvm.recalibrate") is True
    assert loader.get("anomap.anomalous_classes") == ["scratch", "patch"]


def test_engine_layout(workdir, loader):
    loader.set("paths.workdir", str(workdir))
    engine = PipelineEngine(loader)
    assert engine.pool_dir("tiles") == workdir / "tiles"
    assert engine.pool_dir("holdout") == workdir / "pools" / "holdout"
    assert engine.model_path("ocsvm").name == "ocsvm.ocsv"
    assert engine.model_path("generator").name == "generator.fsck"
    assert tuple(engine.stages) == STAGES


def test_split_evenly():
    assert split_evenly(10, ["a", "b", "c", "d"]) == {"a": 3, "b": 3, "c": 2, "d": 2}
    assert sum(split_evenly(128, ["a", "b", "c", "d"]).values()) == 128
