"""
Training loops, splitting and checkpoints.
"""

from .checkpoint import checkpoint, descriptor_path, restore
from .classifier import LEARNING_CURVE_HEADER, LearningPoint, evaluate, learning_curve, train_classifier
from .config import TrainConfig, TrainReport
from .gan import steps_per_epoch, train_gan
from .split import split, split_indices

__all__ = [
    "LEARNING_CURVE_HEADER",
    "LearningPoint",
    "TrainConfig",
    "TrainReport",
    "checkpoint",
    "descriptor_path",
    "evaluate",
    "learning_curve",
    "restore",
    "split",
    "split_indices",
    "steps_per_epoch",
    "train_classifier",
    "train_gan",
]
