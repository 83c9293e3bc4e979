"""
Ferroscope One-Class SVM Model
==============================

Fitted model, RBF kernel, decision function and calibrated scoring.

Sign convention: the decision value v is positive for normal-like features and
negative for anomalous ones. Calibration stores the extremes (min v, max v)
of a reference pool; scores clamp v into that range and map it affinely:

    eq1_score  = -(v - min_v) / (max_v - min_v)   in [-1, 0], 0 = most anomalous
    norm_score = eq1_score + 1                    in [0, 1],  1 = most anomalous
"""

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np
from sklearn.metrics.pairwise import rbf_kernel as rbf_matrix_sklearn

from ferroscope.utils.errors import DegenerateCalibrationError, InvalidArgumentError, StateError


def rbf_kernel(x: np.ndarray, y: np.ndarray, gamma: float) -> float:
    """exp(-gamma * ||x - y||^2) for two vectors."""
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.shape != y.shape:
        raise InvalidArgumentError(f"Kernel inputs differ in length: {x.size} vs {y.size}")
    if gamma < 0:
        raise InvalidArgumentError(f"gamma must be >= 0, got {gamma}")
    diff = x - y
    return float(np.exp(-gamma * float(diff @ diff)))


def rbf_matrix(a: np.ndarray, b: np.ndarray, gamma: float) -> np.ndarray:
    """Pairwise kernel matrix between the rows of ``a`` and ``b``."""
    return rbf_matrix_sklearn(np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64), gamma=gamma)


@dataclass(frozen=True)
class AnomalyScore:
    raw_v: float
    eq1_score: float
    norm_score: float


@dataclass(frozen=True)
class OcsvmModel:
    support_vectors: np.ndarray
    alphas: np.ndarray
    rho: float
    gamma: float
    nu: float
    mean: np.ndarray
    scale: np.ndarray
    n_train: int
    calib_min_v: float = math.nan
    calib_max_v: float = math.nan
    converged: bool = True
    n_iter: int = 0

    @property
    def dim(self) -> int:
        return int(self.mean.shape[0])

    @property
    def upper_bound(self) -> float:
        return 1.0 / (self.nu * self.n_train)

    @property
    def calibrated(self) -> bool:
        return not (math.isnan(self.calib_min_v) or math.isnan(self.calib_max_v))

    def transform(self, features: np.ndarray) -> np.ndarray:
        """Apply the stored per-dimension standardization."""
        x = np.asarray(features, dtype=np.float64)
        if x.ndim == 1:
            x = x[None, :]
        if x.ndim != 2 or x.shape[1] != self.dim:
            raise InvalidArgumentError(f"Feature dimension {x.shape[-1]} does not match model dimension {self.dim}")
        return (x - self.mean) / self.scale


def decision_batch(model: OcsvmModel, features: np.ndarray) -> np.ndarray:
    """Raw decision values v for a (B, D) array."""
    x = model.transform(features)
    return rbf_matrix(x, model.support_vectors, model.gamma) @ model.alphas - model.rho


def decision(model: OcsvmModel, f: np.ndarray) -> float:
    return float(decision_batch(model, f)[0])


def calibrate(model: OcsvmModel, features: np.ndarray) -> OcsvmModel:
    """Copy of ``model`` with (min v, max v) taken over ``features``."""
    values = decision_batch(model, features)
    if values.size == 0:
        raise InvalidArgumentError("Calibration needs at least one feature")
    low, high = float(values.min()), float(values.max())
    if not low < high:
        raise DegenerateCalibrationError(f"All {values.size} calibration decisions equal {low}; cannot normalize")
    return replace(model, calib_min_v=low, calib_max_v=high)


def _require_calibrated(model: OcsvmModel) -> None:
    if not model.calibrated:
        raise StateError("Model is not calibrated; run calibrate first")


def eq1_from_raw(v: np.ndarray, min_v: float, max_v: float) -> np.ndarray:
    clamped = np.clip(np.asarray(v, dtype=np.float64), min_v, max_v)
    # + 0.0 turns -0.0 at v = min_v into 0.0
    return -(clamped - min_v) / (max_v - min_v) + 0.0


def norm_from_eq1(eq1: np.ndarray) -> np.ndarray:
    return np.asarray(eq1, dtype=np.float64) + 1.0


def score_eq1(model: OcsvmModel, f: np.ndarray) -> float:
    _require_calibrated(model)
    return float(eq1_from_raw(decision(model, f), model.calib_min_v, model.calib_max_v))


def score_norm(model: OcsvmModel, f: np.ndarray) -> float:
    _require_calibrated(model)
    return float(norm_from_eq1(score_eq1(model, f)))


def score_batch(model: OcsvmModel, features: np.ndarray, recalibrate: bool = False) -> Sequence[AnomalyScore]:
    """Scores for a batch; ``recalibrate`` takes min/max v from this batch instead of the model."""
    raw = decision_batch(model, features)
    if recalibrate:
        low, high = float(raw.min()), float(raw.max())
        if not low < high:
            raise DegenerateCalibrationError("Batch decisions are all equal; cannot recalibrate")
    else:
        _require_calibrated(model)
        low, high = model.calib_min_v, model.calib_max_v
    eq1 = eq1_from_raw(raw, low, high)
    norm = norm_from_eq1(eq1)
    return [AnomalyScore(float(v), float(e), float(s)) for v, e, s in zip(raw, eq1, norm)]

