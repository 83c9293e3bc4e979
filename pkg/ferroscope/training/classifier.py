"""
Supervised classifier training.

Minimizes softmax cross-entropy with Adam over a stratified train split and
evaluates a confusion matrix on the held-out split after every epoch. A
non-finite loss or gradient restores the parameters of the last completed
epoch and raises TrainingDivergedError.
"""

import os
import time
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from ferroscope.imaging.grid import UnitImage
from ferroscope.metrics import ConfusionMatrix, accuracy, class_report, confusion
from ferroscope.nets.inference import classify_array, stack_tiles
from ferroscope.tensorcore import Adam, Mode, Network, softmax_cross_entropy
from ferroscope.training.checkpoint import checkpoint
from ferroscope.training.config import TrainConfig, TrainReport
from ferroscope.training.split import split_indices
from ferroscope.utils.errors import InvalidArgumentError, NonFiniteError, TrainingDivergedError
from ferroscope.utils.logger import logger


def snapshot(network: Network) -> Dict[str, np.ndarray]:
    return {name: p.data.copy() for name, p in network.named_parameters().items()}


def load_snapshot(network: Network, saved: Dict[str, np.ndarray]) -> None:
    for name, p in network.named_parameters().items():
        p.data = saved[name].copy()
        p.zero_grad()


def evaluate(classifier: Network, batch: np.ndarray, labels: np.ndarray, k: int) -> ConfusionMatrix:
    predicted = classify_array(classifier, batch).argmax(axis=1) if len(labels) else np.zeros(0, dtype=np.int64)
    return confusion(labels, predicted, k)


def train_classifier(
    classifier: Network,
    tiles: Sequence[UnitImage],
    labels: Sequence[int],
    cfg: TrainConfig,
    class_names: Optional[Sequence[str]] = None,
    key_classes: Optional[Sequence[int]] = None,
    checkpoint_path: Optional[Union[str, os.PathLike]] = None,
) -> Tuple[Network, TrainReport]:
    """Train ``classifier`` in place and return it with its report.

    When ``checkpoint_path`` is given the network is checkpointed after every
    epoch, so a diverged run leaves the last good epoch on disk.
    """
    labels = np.asarray(labels, dtype=np.int64)
    if len(tiles) != labels.size:
        raise InvalidArgumentError(f"{len(tiles)} tiles for {labels.size} labels")
    if np.unique(labels).size < 2:
        raise InvalidArgumentError("Classifier training needs at least 2 classes present")
    k = int(classifier.output_shape[0])
    if labels.max() >= k:
        raise InvalidArgumentError(f"Label {int(labels.max())} outside the {k}-class classifier")
    names = list(class_names) if class_names is not None else [f"class{c}" for c in range(k)]

    data = stack_tiles(classifier, tiles)
    train_idx, test_idx = split_indices(labels.size, cfg.split_ratio, cfg.seed, labels)
    x_train, y_train = data[train_idx], labels[train_idx]
    x_test, y_test = data[test_idx], labels[test_idx]

    optimizer = Adam(classifier.parameters(), cfg.adam)
    report = TrainReport(kind="classifier", seed=cfg.seed, epochs=cfg.epochs)
    last_good = snapshot(classifier)
    started = time.perf_counter()
    logger.info(
        "Classifier training started",
        train=int(y_train.size),
        test=int(y_test.size),
        classes=k,
        epochs=cfg.epochs,
        batch_size=cfg.batch_size,
    )

    for epoch in range(cfg.epochs):
        order = np.random.default_rng([cfg.seed, epoch]).permutation(y_train.size)
        total, seen = 0.0, 0
        for start in range(0, order.size, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            optimizer.zero_grad()
            logits = classifier.run(x_train[idx], Mode.TRAIN)
            loss, grad = softmax_cross_entropy(logits, y_train[idx])
            try:
                if not np.isfinite(loss):
                    raise NonFiniteError(f"Non-finite cross-entropy at epoch {epoch + 1}", name="cross_entropy")
                classifier.backward(grad)
                optimizer.step()
            except NonFiniteError as e:
                load_snapshot(classifier, last_good)
                report.wall_seconds = time.perf_counter() - started
                logger.error("Classifier training diverged", epoch=epoch + 1, cause=str(e))
                raise TrainingDivergedError(f"Classifier diverged at epoch {epoch + 1}: {e}", report) from e
            classifier.advance()
            total += loss * idx.size
            seen += idx.size

        cm = evaluate(classifier, x_test, y_test, k)
        test_accuracy = accuracy(cm) if cm.total else 0.0
        report.record({"cross_entropy": total / max(seen, 1)}, {"test_accuracy": test_accuracy})
        last_good = snapshot(classifier)
        if checkpoint_path is not None:
            checkpoint(classifier, checkpoint_path)
        logger.info(
            "Classifier epoch finished",
            epoch=epoch + 1,
            loss=round(total / max(seen, 1), 5),
            test_accuracy=round(test_accuracy, 4),
        )

    cm = evaluate(classifier, x_test, y_test, k)
    report.metrics = {
        "confusion": cm.counts.tolist(),
        **class_report(cm, names, key_classes).to_dict(),
    }
    report.wall_seconds = time.perf_counter() - started
    logger.info("Classifier training finished", seconds=round(report.wall_seconds, 2), accuracy=report.metrics["accuracy"])
    return classifier, report


@dataclass
class LearningPoint:
    size: int
    accuracy: float
    key_precision_mean: Optional[float]
    lowest_precision: Optional[float]
    key_recall_mean: Optional[float]
    lowest_recall: Optional[float]

    def row(self) -> List:
        return [self.size, self.accuracy, self.key_precision_mean, self.lowest_precision, self.key_recall_mean, self.lowest_recall]


LEARNING_CURVE_HEADER = ["size", "accuracy", "key_precision_mean", "lowest_precision", "key_recall_mean", "lowest_recall"]


def learning_curve(
    build: Callable[[int], Network],
    tiles: Sequence[UnitImage],
    labels: Sequence[int],
    sizes: Sequence[int],
    cfg: TrainConfig,
    class_names: Sequence[str],
    key_classes: Sequence[int],
) -> List[LearningPoint]:
    """Train a fresh classifier on stratified subsets of increasing size."""
    labels = np.asarray(labels, dtype=np.int64)
    n = labels.size
    points = []
    for size in sorted(sizes):
        if not 1 <= size <= n:
            raise InvalidArgumentError(f"Learning-curve size {size} outside [1, {n}]")
        if size == n:
            subset = np.arange(n)
        else:
            subset, _ = split_indices(n, (size + 0.5) / n, cfg.seed, labels)
        net, report = train_classifier(
            build(cfg.seed),
            [tiles[i] for i in subset],
            labels[subset],
            cfg,
            class_names,
            key_classes,
        )
        m = report.metrics
        points.append(
            LearningPoint(
                size=int(subset.size),
                accuracy=m["accuracy"],
                key_precision_mean=m["key_precision_mean"],
                lowest_precision=m["lowest_precision"],
                key_recall_mean=m["key_recall_mean"],
                lowest_recall=m["lowest_recall"],
            )
        )
        logger.info("Learning-curve point", size=int(subset.size), accuracy=m["accuracy"])
    return points
