"""
nu-one-class SVM dual solver.

Solves, in normalized form,

    minimize  1/2 a^T K a   subject to  0 <= a_i <= C = 1/(nu N),  sum(a) = 1

by two-variable working-set updates: the pair (i, j) maximally violating the
KKT conditions (i: smallest gradient among a_i < C, j: largest gradient among
a_j > 0) moves mass from j to i along the analytic optimum of the pair
sub-problem, until the violation gap drops below ``tol``.
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ferroscope.ocsvm.model import OcsvmModel, rbf_matrix
from ferroscope.utils.errors import InvalidArgumentError, NonFiniteError
from ferroscope.utils.logger import logger

SV_THRESHOLD = 1e-8
MIN_QUAD = 1e-12
DEFAULT_TOL = 1e-3
DEFAULT_MAX_ITER = 100_000


@dataclass
class DualSolution:
    alpha: np.ndarray
    gradient: np.ndarray
    rho: float
    gap: float
    n_iter: int
    converged: bool
    upper: float


def dual_objective(kernel: np.ndarray, alpha: np.ndarray) -> float:
    return 0.5 * float(alpha @ kernel @ alpha)


def initial_alpha(n: int, nu: float) -> np.ndarray:
    upper = 1.0 / (nu * n)
    full = min(int(math.floor(nu * n + 1e-9)), n)
    alpha = np.zeros(n, dtype=np.float64)
    alpha[:full] = upper
    if full < n:
        alpha[full] = max(1.0 - full * upper, 0.0)
    return alpha


def _masks(alpha: np.ndarray, upper: float):
    up = alpha < upper - 1e-15
    low = alpha > 1e-15
    return up, low


def _rho(alpha: np.ndarray, grad: np.ndarray, upper: float) -> float:
    up, low = _masks(alpha, upper)
    free = up & low
    if free.any():
        return float(grad[free].mean())
    # bounded only: any value in [max over a = C, min over a = 0] satisfies KKT
    hi = grad[~up].max() if (~up).any() else None
    lo = grad[~low].min() if (~low).any() else None
    if hi is None:
        return float(lo)
    if lo is None:
        return float(hi)
    return 0.5 * float(hi + lo)


def solve_dual(kernel: np.ndarray, nu: float, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER) -> DualSolution:
    n = kernel.shape[0]
    upper = 1.0 / (nu * n)
    alpha = initial_alpha(n, nu)
    grad = kernel @ alpha
    diag = np.diag(kernel)
    gap = math.inf
    n_iter = 0

    while n_iter < max_iter:
        up, low = _masks(alpha, upper)
        g_up = np.where(up, grad, np.inf)
        g_low = np.where(low, grad, -np.inf)
        i = int(np.argmin(g_up))
        j = int(np.argmax(g_low))
        gap = float(g_low[j] - g_up[i])
        if gap < tol:
            break

        quad = max(diag[i] + diag[j] - 2.0 * kernel[i, j], MIN_QUAD)
        step = min(gap / quad, upper - alpha[i], alpha[j])
        alpha[i] += step
        alpha[j] -= step
        if upper - alpha[i] < 1e-15:
            alpha[i] = upper
        if alpha[j] < 1e-15:
            alpha[j] = 0.0
        grad += step * (kernel[:, i] - kernel[:, j])
        n_iter += 1

    converged = gap < tol
    return DualSolution(alpha, grad, _rho(alpha, grad, upper), gap, n_iter, converged, upper)


def default_gamma(features: np.ndarray) -> float:
    """1 / (D * mean per-dimension variance); falls back to 1 / D for constant features."""
    dim = features.shape[1]
    variance = float(features.var(axis=0).mean())
    if variance <= 0.0 or not math.isfinite(variance):
        return 1.0 / dim
    return 1.0 / (dim * variance)


def fit(
    features: np.ndarray,
    nu: float = 0.1,
    gamma: Optional[float] = None,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    standardize: bool = True,
) -> OcsvmModel:
    """Fit an uncalibrated model on (N, D) normal-class features."""
    x = np.asarray(features, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2 or x.shape[0] < 1 or x.shape[1] < 1:
        raise InvalidArgumentError(f"fit needs a non-empty (N, D) feature array, got shape {x.shape}")
    if not 0.0 < nu <= 1.0:
        raise InvalidArgumentError(f"nu must be in (0, 1], got {nu}")
    if gamma is not None and gamma < 0:
        raise InvalidArgumentError(f"gamma must be >= 0, got {gamma}")
    if not np.all(np.isfinite(x)):
        raise NonFiniteError("Features contain non-finite values", name="features")
    n, dim = x.shape

    if standardize:
        mean = x.mean(axis=0)
        scale = x.std(axis=0)
        scale[scale < 1e-12] = 1.0
    else:
        mean = np.zeros(dim)
        scale = np.ones(dim)
    z = (x - mean) / scale
    gamma = default_gamma(z) if gamma is None else float(gamma)

    solution = solve_dual(rbf_matrix(z, z, gamma), nu, tol, int(max_iter))
    keep = solution.alpha > SV_THRESHOLD
    if not solution.converged:
        logger.warning("One-class SVM hit its iteration cap", n_iter=solution.n_iter, gap=solution.gap, tol=tol)
    logger.info(
        "One-class SVM fitted",
        n_train=n,
        dim=dim,
        nu=nu,
        gamma=gamma,
        support_vectors=int(keep.sum()),
        n_iter=solution.n_iter,
        rho=solution.rho,
    )
    return OcsvmModel(
        support_vectors=z[keep],
        alphas=solution.alpha[keep],
        rho=solution.rho,
        gamma=gamma,
        nu=float(nu),
        mean=mean,
        scale=scale,
        n_train=n,
        converged=solution.converged,
        n_iter=solution.n_iter,
    )
