"""
Metric reports: per-class tables, CSV/text confusion output, ROC-AUC and
per-class score summaries.
"""

import os
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
from sklearn.metrics import roc_auc_score

from ferroscope.metrics.confusion import (
    ConfusionMatrix,
    Reduce,
    accuracy,
    aggregate,
    percent,
    precision,
    recall,
)
from ferroscope.utils.errors import InvalidArgumentError, UndefinedMetricError
from ferroscope.utils.fileio import atomic_write_text, write_csv


def _defined(stat, cm: ConfusionMatrix, c: int) -> Optional[float]:
    try:
        return stat(cm, c)
    except UndefinedMetricError:
        return None


@dataclass
class ClassRow:
    name: str
    precision: Optional[float]
    recall: Optional[float]
    support: int


@dataclass
class ClassReport:
    accuracy: Optional[float]
    rows: List[ClassRow]
    key_classes: List[str]
    key_precision_mean: Optional[float] = None
    key_recall_mean: Optional[float] = None
    lowest_precision: Optional[float] = None
    lowest_recall: Optional[float] = None
    undefined: List[str] = field(default_factory=list)

    def to_dict(self) -> Dict:
        return {
            "accuracy": self.accuracy,
            "key_classes": list(self.key_classes),
            "key_precision_mean": self.key_precision_mean,
            "key_recall_mean": self.key_recall_mean,
            "lowest_precision": self.lowest_precision,
            "lowest_recall": self.lowest_recall,
            "undefined": list(self.undefined),
            "classes": [
                {"name": r.name, "precision": r.precision, "recall": r.recall, "support": r.support}
                for r in self.rows
            ],
        }


def class_report(cm: ConfusionMatrix, names: Sequence[str], key_classes: Optional[Sequence[int]] = None) -> ClassReport:
    """Per-class precision/recall plus key-class mean and lowest values.

    Aggregates are left as None when any key class has an undefined statistic.
    """
    if len(names) != cm.k:
        raise InvalidArgumentError(f"{len(names)} names for a {cm.k}-class matrix")
    key = sorted(set(range(cm.k) if key_classes is None else key_classes))
    rows = [
        ClassRow(names[c], _defined(precision, cm, c), _defined(recall, cm, c), cm.row_sum(c))
        for c in range(cm.k)
    ]
    report = ClassReport(
        accuracy=accuracy(cm) if cm.total else None,
        rows=rows,
        key_classes=[names[c] for c in key],
    )
    report.undefined = [
        f"{r.name}.{stat}" for r in rows for stat in ("precision", "recall") if getattr(r, stat) is None
    ]
    key_precisions = [rows[c].precision for c in key]
    key_recalls = [rows[c].recall for c in key]
    if key and None not in key_precisions:
        report.key_precision_mean = aggregate(key_precisions, Reduce.MEAN)
        report.lowest_precision = aggregate(key_precisions, Reduce.MIN)
    if key and None not in key_recalls:
        report.key_recall_mean = aggregate(key_recalls, Reduce.MEAN)
        report.lowest_recall = aggregate(key_recalls, Reduce.MIN)
    return report


def _pct(value: Optional[float]) -> str:
    return "" if value is None else f"{percent(value)}%"


def format_table(cm: ConfusionMatrix, names: Sequence[str]) -> str:
    """Aligned text confusion table.

    One row per true class with its counts, recall and miss rate; footer rows
    hold column precision and false-discovery rate. Undefined cells are blank.
    """
    if len(names) != cm.k:
        raise InvalidArgumentError(f"{len(names)} names for a {cm.k}-class matrix")
    header = ["true\\pred"] + [f"c{i + 1}{n}" for i, n in enumerate(names)] + ["recall", "miss"]
    table: List[List[str]] = [header]
    for c in range(cm.k):
        r = _defined(recall, cm, c)
        table.append(
            [f"c{c + 1}{names[c]}"]
            + [str(int(v)) for v in cm.counts[c]]
            + [_pct(r), _pct(None if r is None else 1.0 - r)]
        )
    precisions = [_defined(precision, cm, c) for c in range(cm.k)]
    table.append(["precision"] + [_pct(p) for p in precisions] + ["", ""])
    table.append(["false discovery"] + [_pct(None if p is None else 1.0 - p) for p in precisions] + ["", ""])
    if cm.total:
        table.append(["accuracy", f"{percent(accuracy(cm))}%"] + [""] * (len(header) - 2))

    widths = [max(len(row[i]) for row in table) for i in range(len(header))]
    lines = []
    for row in table:
        first = row[0].ljust(widths[0])
        rest = [cell.rjust(widths[i + 1]) for i, cell in enumerate(row[1:])]
        lines.append("  ".join([first] + rest).rstrip())
    return "\n".join(lines) + "\n"


def write_confusion(cm: ConfusionMatrix, names: Sequence[str], csv_path: Union[str, os.PathLike], text_path: Optional[Union[str, os.PathLike]] = None) -> None:
    """Counts as CSV (one row per true class) and optionally the aligned text table."""
    rows = []
    for c in range(cm.k):
        r = _defined(recall, cm, c)
        rows.append([names[c]] + [int(v) for v in cm.counts[c]] + ["" if r is None else f"{r:.6f}"])
    precisions = [_defined(precision, cm, c) for c in range(cm.k)]
    rows.append(["precision"] + ["" if p is None else f"{p:.6f}" for p in precisions] + [""])
    write_csv(csv_path, ["true"] + list(names) + ["recall"], rows)
    if text_path is not None:
        atomic_write_text(text_path, format_table(cm, names))


def roc_auc(normal_scores: Sequence[float], defect_scores: Sequence[float]) -> float:
    """ROC-AUC of scores where defect tiles are the positive class (high = anomalous)."""
    normal = np.asarray(normal_scores, dtype=np.float64)
    defect = np.asarray(defect_scores, dtype=np.float64)
    if normal.size == 0 or defect.size == 0:
        raise UndefinedMetricError("ROC-AUC needs both normal and defect scores")
    y_true = np.concatenate([np.zeros(normal.size), np.ones(defect.size)])
    return float(roc_auc_score(y_true, np.concatenate([normal, defect])))


def score_summary(scores: Sequence[float], labels: Sequence[int], names: Sequence[str]) -> Dict[str, Dict[str, float]]:
    """Mean, min and max score per true class (classes without tiles are omitted)."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if scores.shape != labels.shape:
        raise InvalidArgumentError(f"{scores.size} scores for {labels.size} labels")
    summary: Dict[str, Dict[str, float]] = {}
    for c, name in enumerate(names):
        picked = scores[labels == c]
        if picked.size:
            summary[name] = {
                "count": int(picked.size),
                "mean": float(picked.mean()),
                "min": float(picked.min()),
                "max": float(picked.max()),
            }
    return summary
