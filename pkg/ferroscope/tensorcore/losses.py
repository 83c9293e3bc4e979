"""
Loss functions. Each returns (mean loss as float, gradient w.r.t. its first argument).
"""

from typing import Tuple, Union

import numpy as np

from ferroscope.utils.errors import InvalidArgumentError, ShapeError

_PROB_EPS = 1e-7


def softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax over the last axis."""
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def softmax_cross_entropy(logits: np.ndarray, labels: np.ndarray) -> Tuple[float, np.ndarray]:
    """Mean cross-entropy of integer ``labels`` under softmax(``logits``)."""
    if logits.ndim != 2:
        raise ShapeError(f"Logits must be (B, K), got {logits.shape}")
    labels = np.asarray(labels, dtype=np.int64)
    if labels.shape != (logits.shape[0],):
        raise ShapeError(f"Labels must be ({logits.shape[0]},), got {labels.shape}")
    if labels.size and (labels.min() < 0 or labels.max() >= logits.shape[1]):
        raise InvalidArgumentError("Label outside the class range")
    batch = logits.shape[0]
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=1))
    log_probs = shifted - log_norm[:, None]
    loss = float(-log_probs[np.arange(batch), labels].mean())
    grad = np.exp(log_probs)
    grad[np.arange(batch), labels] -= 1.0
    return loss, (grad / batch).astype(logits.dtype)


def bce_with_logits(logits: np.ndarray, target: Union[float, np.ndarray]) -> Tuple[float, np.ndarray]:
    """Binary cross-entropy of sigmoid(``logits``) against ``target``, computed stably."""
    z = logits.astype(np.float64)
    t = np.broadcast_to(np.asarray(target, dtype=np.float64), z.shape)
    loss = np.maximum(z, 0) - z * t + np.log1p(np.exp(-np.abs(z)))
    prob = 0.5 * (1.0 + np.tanh(0.5 * z))
    grad = (prob - t) / z.size
    return float(loss.mean()), grad.astype(logits.dtype)


def binary_cross_entropy(prob: np.ndarray, target: Union[float, np.ndarray]) -> float:
    """Binary cross-entropy on probabilities (reporting only; training uses the logit form)."""
    p = np.clip(prob.astype(np.float64), _PROB_EPS, 1.0 - _PROB_EPS)
    t = np.broadcast_to(np.asarray(target, dtype=np.float64), p.shape)
    return float(np.mean(-(t * np.log(p) + (1.0 - t) * np.log(1.0 - p))))


def l1_loss(prediction: np.ndarray, target: np.ndarray) -> Tuple[float, np.ndarray]:
    """Mean absolute error."""
    if prediction.shape != target.shape:
        raise ShapeError(f"L1 shapes differ: {prediction.shape} vs {target.shape}")
    diff = prediction - target.astype(prediction.dtype)
    return float(np.abs(diff).mean()), (np.sign(diff) / diff.size).astype(prediction.dtype)
