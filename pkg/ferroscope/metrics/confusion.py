"""
Ferroscope Confusion Metrics
============================

Confusion matrix (rows = true class, columns = predicted class) and the
statistics read off it: accuracy, per-class recall and precision, and
key-class aggregates.

Zero denominators raise UndefinedMetricError instead of returning 0 or 1.
"""

from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from enum import Enum
from typing import Iterable, Sequence

import numpy as np
from sklearn.metrics import confusion_matrix

from ferroscope.utils.errors import InvalidArgumentError, UndefinedMetricError


class Statistic(str, Enum):
    PRECISION = "precision"
    RECALL = "recall"


class Reduce(str, Enum):
    MEAN = "mean"
    MIN = "min"


@dataclass(frozen=True)
class ConfusionMatrix:
    counts: np.ndarray

    def __post_init__(self) -> None:
        if self.counts.ndim != 2 or self.counts.shape[0] != self.counts.shape[1]:
            raise InvalidArgumentError(f"Confusion counts must be square, got {self.counts.shape}")
        if np.any(self.counts < 0):
            raise InvalidArgumentError("Confusion counts must be non-negative")

    @classmethod
    def from_counts(cls, counts: Sequence[Sequence[int]]) -> "ConfusionMatrix":
        return cls(np.asarray(counts, dtype=np.int64))

    @property
    def k(self) -> int:
        return int(self.counts.shape[0])

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def correct(self) -> int:
        return int(np.trace(self.counts))

    def row_sum(self, c: int) -> int:
        return int(self.counts[c].sum())

    def col_sum(self, c: int) -> int:
        return int(self.counts[:, c].sum())


def confusion(true_labels: Sequence[int], predicted: Sequence[int], k: int) -> ConfusionMatrix:
    true_labels = np.asarray(true_labels, dtype=np.int64).ravel()
    predicted = np.asarray(predicted, dtype=np.int64).ravel()
    if k < 1:
        raise InvalidArgumentError(f"Class count must be >= 1, got {k}")
    if true_labels.shape != predicted.shape:
        raise InvalidArgumentError(f"Label count {true_labels.size} != prediction count {predicted.size}")
    for name, arr in (("true", true_labels), ("predicted", predicted)):
        if arr.size and (arr.min() < 0 or arr.max() >= k):
            raise InvalidArgumentError(f"{name} label outside [0, {k})")
    if true_labels.size == 0:
        return ConfusionMatrix(np.zeros((k, k), dtype=np.int64))
    counts = confusion_matrix(true_labels, predicted, labels=list(range(k)))
    return ConfusionMatrix(counts.astype(np.int64))


def accuracy(cm: ConfusionMatrix) -> float:
    if cm.total == 0:
        raise UndefinedMetricError("Accuracy of an empty confusion matrix")
    return cm.correct / cm.total


def _check_class(cm: ConfusionMatrix, c: int) -> None:
    if not 0 <= c < cm.k:
        raise InvalidArgumentError(f"Class {c} outside [0, {cm.k})")


def recall(cm: ConfusionMatrix, c: int) -> float:
    _check_class(cm, c)
    row = cm.row_sum(c)
    if row == 0:
        raise UndefinedMetricError(f"Recall undefined for class {c}: no true examples", class_index=c)
    return int(cm.counts[c, c]) / row


def precision(cm: ConfusionMatrix, c: int) -> float:
    _check_class(cm, c)
    col = cm.col_sum(c)
    if col == 0:
        raise UndefinedMetricError(f"Precision undefined for class {c}: never predicted", class_index=c)
    return int(cm.counts[c, c]) / col


_STATISTICS = {Statistic.PRECISION: precision, Statistic.RECALL: recall}


def key_class_aggregate(
    cm: ConfusionMatrix,
    subset: Iterable[int],
    kind: Statistic = Statistic.PRECISION,
    reduce: Reduce = Reduce.MEAN,
) -> float:
    """Mean or min of precision/recall over a class subset."""
    subset = sorted(set(subset))
    if not subset:
        raise InvalidArgumentError("Key-class subset must be non-empty")
    stat = _STATISTICS[Statistic(kind)]
    values = [stat(cm, c) for c in subset]
    return aggregate(values, reduce)


def aggregate(values: Sequence[float], reduce: Reduce = Reduce.MEAN) -> float:
    if not values:
        raise InvalidArgumentError("Nothing to aggregate")
    if Reduce(reduce) is Reduce.MIN:
        return float(min(values))
    return float(sum(values) / len(values))


def percent(fraction: float, places: int = 1) -> str:
    """Fraction as a percentage string, rounded half-up (0.7231 -> '72.3')."""
    quantum = Decimal(1).scaleb(-places)
    return str((Decimal(repr(float(fraction))) * 100).quantize(quantum, rounding=ROUND_HALF_UP))
