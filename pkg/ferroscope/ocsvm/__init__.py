"""
nu-one-class SVM over discriminator features.
"""

from .config import OcsvmParams
from .io import decode_features, decode_model, encode_features, encode_model, read_features, read_model, write_features, write_model
from .model import (
    AnomalyScore,
    OcsvmModel,
    calibrate,
    decision,
    decision_batch,
    eq1_from_raw,
    norm_from_eq1,
    rbf_kernel,
    rbf_matrix,
    score_batch,
    score_eq1,
    score_norm,
)
from .solver import DualSolution, default_gamma, dual_objective, fit, initial_alpha, solve_dual

__all__ = [
    "AnomalyScore",
    "DualSolution",
    "OcsvmModel",
    "OcsvmParams",
    "calibrate",
    "decision",
    "decision_batch",
    "decode_features",
    "decode_model",
    "default_gamma",
    "dual_objective",
    "encode_features",
    "encode_model",
    "eq1_from_raw",
    "fit",
    "initial_alpha",
    "norm_from_eq1",
    "rbf_kernel",
    "rbf_matrix",
    "read_features",
    "read_model",
    "score_batch",
    "score_eq1",
    "score_norm",
    "solve_dual",
    "write_features",
    "write_model",
]
