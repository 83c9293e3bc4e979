"""
Classification and detection metrics.
"""

from .confusion import (
    ConfusionMatrix,
    Reduce,
    Statistic,
    accuracy,
    aggregate,
    confusion,
    key_class_aggregate,
    percent,
    precision,
    recall,
)
from .report import ClassReport, ClassRow, class_report, format_table, roc_auc, score_summary, write_confusion

__all__ = [
    "ClassReport",
    "ClassRow",
    "ConfusionMatrix",
    "Reduce",
    "Statistic",
    "accuracy",
    "aggregate",
    "class_report",
    "confusion",
    "format_table",
    "key_class_aggregate",
    "percent",
    "precision",
    "recall",
    "roc_auc",
    "score_summary",
    "write_confusion",
]
