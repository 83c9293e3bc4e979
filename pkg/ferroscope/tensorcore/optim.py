"""
Adam optimizer.

adam_step is the functional update; Adam applies it in place to a network's
parameters and owns the moment state.
"""

from dataclasses import dataclass, field
from typing import Dict, Mapping, Sequence, Tuple

import numpy as np

from ferroscope.tensorcore.tensor import Parameter
from ferroscope.utils.errors import NonFiniteError, ShapeError


@dataclass(frozen=True)
class AdamHyper:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


@dataclass
class AdamState:
    step: int = 0
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)


def adam_step(
    params: Mapping[str, np.ndarray],
    grads: Mapping[str, np.ndarray],
    state: AdamState,
    hyper: AdamHyper = AdamHyper(),
) -> Tuple[Dict[str, np.ndarray], AdamState]:
    """One bias-corrected Adam update; inputs are left untouched."""
    for name, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise NonFiniteError(f"Non-finite gradient for parameter {name}", name=name)

    step = state.step + 1
    new_params: Dict[str, np.ndarray] = {}
    new_m: Dict[str, np.ndarray] = {}
    new_v: Dict[str, np.ndarray] = {}
    correction1 = 1.0 - hyper.beta1 ** step
    correction2 = 1.0 - hyper.beta2 ** step

    for name, value in params.items():
        g = grads[name]
        m = state.m.get(name)
        v = state.v.get(name)
        if m is None:
            m = np.zeros_like(value)
            v = np.zeros_like(value)
        if m.shape != value.shape or v.shape != value.shape or g.shape != value.shape:
            raise ShapeError(f"Adam state for {name} does not match parameter shape {value.shape}")
        m = (hyper.beta1 * m + (1.0 - hyper.beta1) * g).astype(value.dtype)
        v = (hyper.beta2 * v + (1.0 - hyper.beta2) * g * g).astype(value.dtype)
        m_hat = m / correction1
        v_hat = v / correction2
        new_params[name] = (value - hyper.lr * m_hat / (np.sqrt(v_hat) + hyper.eps)).astype(value.dtype)
        new_m[name] = m
        new_v[name] = v

    return new_params, AdamState(step, new_m, new_v)


class Adam:
    """Stateful Adam bound to a fixed list of parameters."""

    def __init__(self, parameters: Sequence[Parameter], hyper: AdamHyper = AdamHyper()) -> None:
        self.parameters = list(parameters)
        self.hyper = hyper
        self.state = AdamState()

    @property
    def parameter_names(self) -> set:
        return {p.name for p in self.parameters}

    def step(self) -> None:
        params = {p.name: p.data for p in self.parameters}
        grads = {p.name: p.grad for p in self.parameters}
        updated, self.state = adam_step(params, grads, self.state, self.hyper)
        for p in self.parameters:
            p.data = updated[p.name]

    def zero_grad(self) -> None:
        for p in self.parameters:
            p.zero_grad()
