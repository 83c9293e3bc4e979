"""
Tensor and Parameter containers.

Activations flow through the engine as plain numpy arrays; Tensor pairs a
data buffer with its gradient where a gradient is tracked, and Parameter is
a named, learnable Tensor.
"""

from enum import Enum
from typing import Optional, Tuple

import numpy as np

from ferroscope.utils.errors import ShapeError

DTYPE = np.float32


class Mode(str, Enum):
    TRAIN = "train"
    EVAL = "eval"


class Tensor:
    """Data buffer of up to four axes (batch, channels, height, width) plus gradient."""

    __slots__ = ("data", "grad")

    def __init__(self, data: np.ndarray, grad: Optional[np.ndarray] = None) -> None:
        data = np.asarray(data)
        if data.ndim > 4:
            raise ShapeError(f"Tensors have at most 4 axes, got shape {data.shape}")
        if grad is not None and grad.shape != data.shape:
            raise ShapeError(f"Gradient shape {grad.shape} does not match data shape {data.shape}")
        self.data = data
        self.grad = grad

    @property
    def shape(self) -> Tuple[int, ...]:
        return tuple(self.data.shape)

    def zero_grad(self) -> None:
        self.grad = np.zeros_like(self.data)


class Parameter(Tensor):
    """Learnable tensor with a stable, network-unique name."""

    __slots__ = ("name",)

    def __init__(self, name: str, data: np.ndarray) -> None:
        super().__init__(np.asarray(data), np.zeros_like(data))
        self.name = name

    def __repr__(self) -> str:
        return f"Parameter({self.name!r}, shape={self.shape}, dtype={self.data.dtype})"
