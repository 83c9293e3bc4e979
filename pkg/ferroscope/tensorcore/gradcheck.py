"""
Finite-difference verification of the engine's analytic gradients.

The scalar checked is a fixed random projection of the network output. The
analytic gradient comes from the float32 network; the numeric one from a
float64 copy with dropout masks and ReLU/PReLU/MaxPool decisions frozen to
those of the analytic pass, so every perturbation differentiates the same piece of
the piecewise-smooth function.
"""

from typing import Dict

import numpy as np

from ferroscope.tensorcore.network import Network
from ferroscope.tensorcore.tensor import Mode

DENOMINATOR_FLOOR = 1e-2


def relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = DENOMINATOR_FLOOR) -> float:
    a = np.asarray(analytic, dtype=np.float64)
    n = np.asarray(numeric, dtype=np.float64)
    denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)
    return float(np.max(np.abs(a - n) / denom)) if a.size else 0.0


def analytic_gradients(network: Network, batch: np.ndarray, projection: np.ndarray) -> Dict[str, np.ndarray]:
    network.zero_grad()
    network.forward(batch, Mode.TRAIN)
    network.backward(projection.astype(network.dtype))
    return {name: p.grad.astype(np.float64) for name, p in network.named_parameters().items()}


def numeric_gradients(network: Network, batch: np.ndarray, projection: np.ndarray, epsilon: float) -> Dict[str, np.ndarray]:
    """Central differences on a float64 copy; ``network`` must have run a TRAIN forward."""
    checked = network.astype(np.float64)
    x = np.asarray(batch, dtype=np.float64)

    def loss() -> float:
        out = checked.forward(x, Mode.TRAIN, freeze_decisions=True)[checked.output_name]
        return float(np.sum(out * projection))

    grads: Dict[str, np.ndarray] = {}
    for name, param in checked.named_parameters().items():
        flat = param.data.reshape(-1)
        numeric = np.zeros_like(flat)
        for i in range(flat.size):
            original = flat[i]
            flat[i] = original + epsilon
            upper = loss()
            flat[i] = original - epsilon
            lower = loss()
            flat[i] = original
            numeric[i] = (upper - lower) / (2.0 * epsilon)
        grads[name] = numeric.reshape(param.data.shape)
    return grads


def grad_check(network: Network, batch: np.ndarray, epsilon: float = 1e-3, seed: int = 0) -> float:
    """Worst relative error between analytic and central-difference parameter gradients.

    Cost is two forward passes per scalar parameter; keep networks at or
    below ~10^4 parameters.
    """
    batch = np.asarray(batch)
    output_shape = (batch.shape[0],) + network.output_shape
    projection = np.random.default_rng(seed).standard_normal(output_shape)

    analytic = analytic_gradients(network, batch, projection)
    numeric = numeric_gradients(network, batch, projection, epsilon)
    return max((relative_error(analytic[name], numeric[name]) for name in analytic), default=0.0)
