import os

import numpy as np
import pytest
import yaml

from ferroscope.imaging import UnitImage
from ferroscope.nets import ClassCatalog, build_classifier, build_discriminator, build_generator
from ferroscope.synthdata import gen_normal
from ferroscope.tensorcore import Network
from ferroscope.training import (
    TrainConfig,
    TrainReport,
    checkpoint,
    descriptor_path,
    learning_curve,
    restore,
    split,
    split_indices,
    steps_per_epoch,
    train_classifier,
    train_gan,
)
from ferroscope.utils.errors import (
    ConfigError,
    DescriptorMismatchError,
    FormatError,
    InvalidArgumentError,
    StratificationError,
    TrainingDivergedError,
)

TWO_CLASSES = ClassCatalog.from_names(["dark", "bright"], anomalous=["bright"])


def _labelled_tiles(per_class=12, side=16, seed=0):
    """Dark tiles labelled 0, bright tiles labelled 1."""
    rng = np.random.default_rng(seed)
    tiles, labels = [], []
    for label, (lo, hi) in enumerate([(0, 90), (165, 256)]):
        for i in range(per_class):
            pixels = rng.integers(lo, hi, size=(side, side, 1), dtype=np.uint8)
            tiles.append(UnitImage(pixels, label, i, "syn"))
            labels.append(label)
    return tiles, labels


def _params(net: Network):
    return {name: p.data.copy() for name, p in net.named_parameters().items()}


def test_split_sizes_and_partition():
    train, test = split_indices(10, 0.8, seed=0)
    assert len(train) == 8 and len(test) == 2
    assert sorted(np.concatenate([train, test]).tolist()) == list(range(10))


def test_split_is_deterministic_per_seed():
    a = split_indices(50, 0.7, seed=3)
    b = split_indices(50, 0.7, seed=3)
    c = split_indices(50, 0.7, seed=4)
    assert np.array_equal(a[0], b[0])
    assert not np.array_equal(a[0], c[0])


def test_stratified_split_keeps_every_class_on_both_sides():
    labels = [0] * 6 + [1] * 3 + [2] * 2
    train, test = split_indices(len(labels), 0.8, seed=1, labels=labels)
    assert len(train) == 8
    for cls in (0, 1, 2):
        assert any(labels[i] == cls for i in train)
        assert any(labels[i] == cls for i in test)


def test_stratified_split_rejects_singleton_class():
    with pytest.raises(StratificationError):
        split_indices(5, 0.8, seed=0, labels=[0, 0, 0, 0, 1])


def test_stratified_half_split_of_two_per_class():
    labels = np.array([0, 1, 1, 0])
    train, test = split_indices(4, 0.5, seed=0, labels=labels)
    assert sorted(labels[train].tolist()) == [0, 1]
    assert sorted(labels[test].tolist()) == [0, 1]
    with pytest.raises(StratificationError):
        split_indices(2, 0.5, seed=0, labels=[0, 1])


def test_split_rejects_bad_ratio_and_empty_input():
    with pytest.raises(InvalidArgumentError):
        split_indices(5, 1.0, seed=0)
    with pytest.raises(InvalidArgumentError):
        split_indices(0, 0.5, seed=0)


def test_split_returns_items():
    train, test = split(list("abcdefghij"), 0.5, seed=2)
    assert len(train) == 5
    assert sorted(train + test) == list("abcdefghij")


def test_train_config_validation():
    with pytest.raises(ConfigError):
        TrainConfig(split_ratio=1.0)
    with pytest.raises(ConfigError):
        TrainConfig(batch_size=0)
    with pytest.raises(ConfigError):
        TrainConfig(lambda_adv=0.0, lambda_rec=0.0)
    assert TrainConfig().with_overrides(epochs=3, batch_size=None).epochs == 3


def test_train_config_from_loader(loader):
    loader.set("train.gan.epochs", 2)
    loader.set("seed", 77)
    cfg = TrainConfig.from_config("gan", loader)
    assert cfg.epochs == 2 and cfg.seed == 77
    with pytest.raises(ConfigError):
        TrainConfig.from_config("detector", loader)


def test_steps_per_epoch_drops_last_partial_batch():
    assert steps_per_epoch(2070, 4) == 517
    assert steps_per_epoch(2070, 4) * 8 == 4136
    assert steps_per_epoch(3, 4) == 0


def test_checkpoint_restores_parameters(tmp_path, tiny_net_config):
    disc = build_discriminator(tiny_net_config, seed=5)
    path = tmp_path / "disc.fsck"
    checkpoint(disc, path)
    assert os.path.exists(descriptor_path(path))

    rebuilt = restore(path)
    assert rebuilt.descriptor() == disc.descriptor()
    for name, value in _params(disc).items():
        assert np.array_equal(rebuilt.named_parameters()[name].data, value)

    target = build_discriminator(tiny_net_config, seed=99)
    restore(path, into=target)
    assert np.array_equal(target.parameters()[0].data, disc.parameters()[0].data)


def test_restore_into_other_architecture_is_rejected(tmp_path, tiny_net_config):
    path = tmp_path / "gen.fsck"
    checkpoint(build_generator(tiny_net_config), path)
    other = build_discriminator(tiny_net_config)
    before = _params(other)
    with pytest.raises(DescriptorMismatchError):
        restore(path, into=other)
    for name, value in before.items():
        assert np.array_equal(other.named_parameters()[name].data, value)


def test_restore_without_descriptor(tmp_path, tiny_net_config):
    path = tmp_path / "gen.fsck"
    checkpoint(build_generator(tiny_net_config), path)
    os.remove(descriptor_path(path))
    with pytest.raises(FormatError):
        restore(path)


def test_train_report_records_and_writes(tmp_path):
    report = TrainReport(kind="classifier", seed=1, epochs=2)
    report.record({"cross_entropy": 1.5}, {"test_accuracy": 0.5})
    report.record({"cross_entropy": np.float32(0.5)}, {"test_accuracy": 0.75})
    report.metrics = {"confusion": np.eye(2, dtype=np.int64)}
    assert report.completed_epochs == 2
    assert report.records()[1] == {"epoch": 2, "cross_entropy": 0.5, "test_accuracy": 0.75}
    path = tmp_path / "report.yaml"
    report.write(path)
    data = yaml.safe_load(path.read_text())
    assert data["metrics"]["confusion"] == [[1, 0], [0, 1]]
    assert len(data["history"]) == 2


def test_classifier_learns_brightness(tmp_path, tiny_net_config):
    tiles, labels = _labelled_tiles()
    net = build_classifier(tiny_net_config, TWO_CLASSES, seed=0)
    cfg = TrainConfig(batch_size=4, epochs=6, learning_rate=1e-2, beta1=0.9, seed=3, split_ratio=0.75)
    ckpt = tmp_path / "cls.fsck"
    _, report = train_classifier(net, tiles, labels, cfg, TWO_CLASSES.names, [1], checkpoint_path=ckpt)

    losses = report.losses["cross_entropy"]
    assert len(losses) == 6
    assert losses[-1] < losses[0]
    assert len(report.epoch_metrics["test_accuracy"]) == 6
    assert np.array(report.metrics["confusion"]).sum() == 6
    assert report.metrics["accuracy"] is not None
    assert ckpt.exists()


def test_classifier_separates_uniform_tiles_within_five_epochs(tiny_net_config):
    tiles, labels = [], []
    for label, level in enumerate([38, 217]):
        for i in range(32):
            tiles.append(UnitImage(np.full((16, 16, 1), level, dtype=np.uint8), label, i, "flat"))
            labels.append(label)
    net = build_classifier(tiny_net_config, TWO_CLASSES, seed=0)
    cfg = TrainConfig(batch_size=4, epochs=5, learning_rate=1e-2, beta1=0.9, seed=3, split_ratio=0.75)
    _, report = train_classifier(net, tiles, labels, cfg, TWO_CLASSES.names, [1])

    assert report.epoch_metrics["test_accuracy"][-1] == 1.0
    assert report.metrics["accuracy"] == 1.0


def test_classifier_training_is_reproducible(tiny_net_config):
    tiles, labels = _labelled_tiles(per_class=6)
    cfg = TrainConfig(batch_size=4, epochs=2, seed=9)
    a = build_classifier(tiny_net_config, TWO_CLASSES, seed=1)
    b = build_classifier(tiny_net_config, TWO_CLASSES, seed=1)
    train_classifier(a, tiles, labels, cfg)
    train_classifier(b, tiles, labels, cfg)
    for name, value in _params(a).items():
        assert np.array_equal(b.named_parameters()[name].data, value)


def test_classifier_rejects_single_class(tiny_net_config):
    tiles, _ = _labelled_tiles(per_class=3)
    net = build_classifier(tiny_net_config, TWO_CLASSES)
    with pytest.raises(InvalidArgumentError):
        train_classifier(net, tiles, [0] * len(tiles), TrainConfig())


def test_classifier_divergence_restores_last_epoch(mocker, tiny_net_config):
    tiles, labels = _labelled_tiles(per_class=4)
    net = build_classifier(tiny_net_config, TWO_CLASSES, seed=2)
    before = _params(net)
    mocker.patch(
        "ferroscope.training.classifier.softmax_cross_entropy",
        return_value=(float("nan"), np.zeros((4, 2), dtype=np.float32)),
    )
    with pytest.raises(TrainingDivergedError) as info:
        train_classifier(net, tiles, labels, TrainConfig(batch_size=4, epochs=1))
    assert info.value.report.completed_epochs == 0
    assert info.value.exit_code == 3
    for name, value in before.items():
        assert np.array_equal(net.named_parameters()[name].data, value)


def test_learning_curve_trains_one_model_per_size(tiny_net_config):
    tiles, labels = _labelled_tiles(per_class=6)
    cfg = TrainConfig(batch_size=4, epochs=1, seed=0, split_ratio=0.5)
    points = learning_curve(
        lambda seed: build_classifier(tiny_net_config, TWO_CLASSES, seed),
        tiles,
        labels,
        [12, 8],
        cfg,
        TWO_CLASSES.names,
        [1],
    )
    assert [p.size for p in points] == [8, 12]
    assert all(0.0 <= p.accuracy <= 1.0 for p in points)
    with pytest.raises(InvalidArgumentError):
        learning_curve(lambda s: build_classifier(tiny_net_config, TWO_CLASSES, s), tiles, labels, [13], cfg, TWO_CLASSES.names, [1])


def test_gan_training_records_every_epoch(tiny_net_config):
    tiles, _ = _labelled_tiles(per_class=5)
    gen = build_generator(tiny_net_config, seed=0)
    disc = build_discriminator(tiny_net_config, seed=0)
    disc_before = _params(disc)
    cfg = TrainConfig(batch_size=4, epochs=2, seed=1)
    _, _, report = train_gan(gen, disc, tiles, cfg)

    assert report.metrics["steps_per_epoch"] == 2
    assert report.metrics["total_steps"] == 4
    for key in ("discriminator", "generator", "adversarial", "reconstruction"):
        assert len(report.losses[key]) == 2
        assert all(np.isfinite(report.losses[key]))
    assert any(not np.array_equal(disc.named_parameters()[n].data, v) for n, v in disc_before.items())


def test_reconstruction_only_gan_loss_does_not_increase(tiny_net_config, tiny_corpus_config):
    tiles = [t.tile for t in gen_normal(tiny_corpus_config, 16)]
    gen = build_generator(tiny_net_config, seed=4)
    disc = build_discriminator(tiny_net_config, seed=4)
    cfg = TrainConfig(batch_size=4, epochs=9, learning_rate=1e-3, seed=2, lambda_adv=0.0)
    _, _, report = train_gan(gen, disc, tiles, cfg)

    losses = np.asarray(report.losses["reconstruction"])
    smoothed = np.convolve(losses, np.ones(3) / 3, mode="valid")
    assert np.all(np.diff(smoothed) <= 1e-6)
    assert losses[-1] < losses[0]


def test_gan_parameter_sets_are_disjoint(tiny_net_config):
    gen = build_generator(tiny_net_config)
    disc = build_discriminator(tiny_net_config)
    assert not set(gen.named_parameters()) & set(disc.named_parameters())


def test_gan_needs_a_full_batch(tiny_net_config):
    tiles, _ = _labelled_tiles(per_class=1)
    with pytest.raises(InvalidArgumentError):
        train_gan(build_generator(tiny_net_config), build_discriminator(tiny_net_config), tiles, TrainConfig(batch_size=4))


def test_gan_divergence_restores_both_networks(mocker, tiny_net_config):
    tiles, _ = _labelled_tiles(per_class=4)
    gen = build_generator(tiny_net_config, seed=3)
    disc = build_discriminator(tiny_net_config, seed=3)
    gen_before, disc_before = _params(gen), _params(disc)
    mocker.patch(
        "ferroscope.training.gan.l1_loss",
        return_value=(float("inf"), np.zeros((4, 1, 16, 16), dtype=np.float32)),
    )
    with pytest.raises(TrainingDivergedError):
        train_gan(gen, disc, tiles, TrainConfig(batch_size=4, epochs=1))
    for name, value in gen_before.items():
        assert np.array_equal(gen.named_parameters()[name].data, value)
    for name, value in disc_before.items():
        assert np.array_equal(disc.named_parameters()[name].data, value)
