"""
Ferroscope Layer Kinds
======================

Abstract base class and concrete layers for the reverse-mode engine.
Each layer:
- computes forward on a list of input arrays (one, or several for Concat)
- caches what backward needs only in training mode
- returns input gradients from backward and accumulates parameter gradients

Layers with a discrete decision (ReLU, PReLU, MaxPool2) remember it during a
training pass; a later pass run with ``freeze_decisions`` reuses it, which is
how gradient checks hold kinks fixed across perturbations.
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ferroscope.tensorcore.tensor import DTYPE, Mode, Parameter
from ferroscope.utils.errors import InvalidArgumentError, ShapeError, StateError

Shape = Tuple[int, ...]


@dataclass(frozen=True)
class RunContext:
    """Per-node view of a forward pass."""

    mode: Mode
    seed: int = 0
    step: int = 0
    node_index: int = 0
    freeze_decisions: bool = False

    @property
    def training(self) -> bool:
        return self.mode is Mode.TRAIN


def he_uniform(rng: np.random.Generator, shape: Shape, fan_in: int) -> np.ndarray:
    limit = np.sqrt(6.0 / fan_in)
    return rng.uniform(-limit, limit, size=shape).astype(DTYPE)


class Layer(ABC):
    """Base class for every layer kind."""

    kind = ""

    def __init__(self) -> None:
        self.params: Dict[str, Parameter] = {}
        self._cache: Optional[Dict[str, Any]] = None
        self._decision: Optional[np.ndarray] = None

    def parameters(self) -> List[Parameter]:
        return list(self.params.values())

    def config(self) -> Dict[str, Any]:
        """Constructor arguments, enough to rebuild the layer from a descriptor."""
        return {}

    def spec(self) -> Dict[str, Any]:
        return {"kind": self.kind, **self.config()}

    @abstractmethod
    def output_shape(self, input_shapes: Sequence[Shape]) -> Shape:
        """Per-sample output shape (no batch axis)."""

    @abstractmethod
    def forward(self, inputs: List[np.ndarray], ctx: RunContext) -> np.ndarray:
        pass

    @abstractmethod
    def backward(self, grad: np.ndarray) -> List[np.ndarray]:
        pass

    def _remember(self, ctx: RunContext, **cache: Any) -> None:
        if ctx.training:
            self._cache = cache

    def _recall(self) -> Dict[str, Any]:
        if self._cache is None:
            raise StateError(f"{self.kind} backward called without a training-mode forward pass")
        return self._cache

    def _decide(self, ctx: RunContext, fresh) -> np.ndarray:
        """Return the frozen decision when requested, else compute and maybe store it."""
        if ctx.freeze_decisions and self._decision is not None:
            return self._decision
        decision = fresh()
        if ctx.training:
            self._decision = decision
        return decision


def _single(input_shapes: Sequence[Shape], kind: str) -> Shape:
    if len(input_shapes) != 1:
        raise ShapeError(f"{kind} takes exactly one input, got {len(input_shapes)}")
    return input_shapes[0]


class Conv2d(Layer):
    """2-D convolution over (B, C, H, W) via strided window views."""

    kind = "Conv"

    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        kernel_size: int = 3,
        stride: int = 1,
        padding: int = 0,
        rng: Optional[np.random.Generator] = None,
    ) -> None:
        super().__init__()
        if stride < 1 or kernel_size < 1 or padding < 0 or in_channels < 1 or out_channels < 1:
            raise InvalidArgumentError(
                f"Invalid Conv parameters: in={in_channels} out={out_channels} k={kernel_size} s={stride} p={padding}"
            )
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.kernel_size = kernel_size
        self.stride = stride
        self.padding = padding
        rng = rng or np.random.default_rng(0)
        fan_in = in_channels * kernel_size * kernel_size
        self.params["weight"] = Parameter(
            "weight", he_uniform(rng, (out_channels, in_channels, kernel_size, kernel_size), fan_in)
        )
        self.params["bias"] = Parameter("bias", np.zeros(out_channels, dtype=DTYPE))

    def config(self) -> Dict[str, Any]:
        return {
            "in_channels": self.in_channels,
            "out_channels": self.out_channels,
            "kernel_size": self.kernel_size,
            "stride": self.stride,
            "padding": self.padding,
        }

    def output_shape(self, input_shapes: Sequence[Shape]) -> Shape:
        shape = _single(input_shapes, self.kind)
        if len(shape) != 3 or shape[0] != self.in_channels:
            raise ShapeError(f"Conv expects ({self.in_channels}, H, W), got {shape}")
        _, h, w = shape
        k, s, p = self.kernel_size, self.stride, self.padding
        ho, wo = (h + 2 * p - k) // s + 1, (w + 2 * p - k) // s + 1
        if ho < 1 or wo < 1:
            raise ShapeError(f"Conv kernel {k} does not fit a padded {h}x{w} input")
        return (self.out_channels, ho, wo)

    def forward(self, inputs: List[np.ndarray], ctx: RunContext) -> np.ndarray:
        x = inputs[0]
        if x.ndim != 4 or x.shape[1] != self.in_channels:
            raise ShapeError(f"Conv expects (B, {self.in_channels}, H, W), got {x.shape}")
        p, k, s = self.padding, self.kernel_size, self.stride
        xp = np.pad(x, ((0, 0), (0, 0), (p, p), (p, p))) if p else x
        if xp.shape[2] < k or xp.shape[3] < k:
            raise ShapeError(f"Conv kernel {k} does not fit input {x.shape}")
        windows = sliding_window_view(xp, (k, k), axis=(2, 3))[:, :, ::s, ::s]
        weight = self.params["weight"].data
        out = np.tensordot(windows, weight, axes=([1, 4, 5], [1, 2, 3])).transpose(0, 3, 1, 2)
        out = out + self.params["bias"].data[None, :, None, None]
        self._remember(ctx, windows=windows, x_shape=x.shape, xp_shape=xp.shape)
        return np.ascontiguousarray(out)

    def backward(self, grad: np.ndarray) -> List[np.ndarray]:
        cache = self._recall()
        windows = cache["windows"]
        k, s, p = self.kernel_size, self.stride, self.padding
        weight = self.params["weight"]
        bias = self.params["bias"]

        weight.grad += np.tensordot(grad, windows, axes=([0, 2, 3], [0, 2, 3])).astype(weight.data.dtype)
        bias.grad += grad.sum(axis=(0, 2, 3)).astype(bias.data.dtype)

        ho, wo = grad.shape[2], grad.shape[3]
        d_windows = np.tensordot(grad, weight.data, axes=([1], [0]))  # (B, Ho, Wo, C, k, k)
        dxp = np.zeros(cache["xp_shape"], dtype=grad.dtype)
        for i in range(k):
            for j in range(k):
                dxp[:, :, i:i + s * (ho - 1) + 1:s, j:j + s * (wo - 1) + 1:s] += d_windows[:, :, :, :, i, j].transpose(0, 3, 1, 2)
        if p:
            h, w = cache["x_shape"][2], cache["x_shape"][3]
            dxp = dxp[:, :, p:p + h, p:p + w]
        return [np.ascontiguousarray(dxp)]


class Dense(Layer):
    """Fully connected layer; inputs with more than two axes are flattened channel-major."""

    kind = "Dense"

    def __init__(self, in_features: int, out_features: int, rng: Optional[np.random.Generator] = None) -> None:
        super().__init__()
        if in_features < 1 or out_features < 1:
            raise InvalidArgumentError(f"Invalid Dense sizes: {in_features} -> {out_features}")
        self.in_features = in_features
        self.out_features = out_features
        rng = rng or np.random.default_rng(0)
        self.params["weight"] = Parameter("weight", he_uniform(rng, (out_features, in_features), in_features))
        self.params["bias"] = Parameter("bias", np.zeros(out_features, dtype=DTYPE))

    def config(self) -> Dict[str, Any]:
        return {"in_features": self.in_features, "out_features": self.out_features}

    def output_shape(self, input_shapes: Sequence[Shape]) -> Shape:
        shape = _single(input_shapes, self.kind)
        if int(np.prod(shape)) != self.in_features:
            raise ShapeError(f"Dense expects {self.in_features} features, got shape {shape}")
        return (self.out_features,)

    def forward(self, inputs: List[np.ndarray], ctx: RunContext) -> np.ndarray:
        x = inputs[0]
        flat = x.reshape(x.shape[0], -1)
        if flat.shape[1] != self.in_features:
            raise ShapeError(f"Dense expects {self.in_features} features, got {flat.shape[1]}")
        self._remember(ctx, flat=flat, x_shape=x.shape)
        return flat @ self.params["weight"].data.T + self.params["bias"].data

    def backward(self, grad: np.ndarray) -> List[np.ndarray]:
        cache = self._recall()
        weight = self.params["weight"]
        weight.grad += (grad.T @ cache["flat"]).astype(weight.data.dtype)
        self.params["bias"].grad += grad.sum(axis=0).astype(weight.data.dtype)
        return [(grad @ weight.data).reshape(cache["x_shape"])]


class ELU(Layer):
    kind = "ELU"

    def __init__(self, alpha: float = 1.0) -> None:
        super().__init__()
        self.alpha = float(alpha)

    def config(self) -> Dict[str, Any]:
        return {"alpha": self.alpha}

    def output_shape(self, input_shapes: Sequence[Shape]) -> Shape:
        return _single(input_shapes, self.kind)

    def forward(self, inputs: List[np.ndarray], ctx: RunContext) -> np.ndarray:
        x = inputs[0]
        y = np.where(x > 0, x, self.alpha * np.expm1(np.minimum(x, 0))).astype(x.dtype)
        self._remember(ctx, x=x, y=y)
        return y

    def backward(self, grad: np.ndarray) -> List[np.ndarray]:
        cache = self._recall()
        x, y = cache["x"], cache["y"]
        return [grad * np.where(x > 0, 1.0, y + self.alpha).astype(grad.dtype)]


class ReLU(Layer):
    kind = "ReLU"

    def output_shape(self, input_shapes: Sequence[Shape]) -> Shape:
        return _single(input_shapes, self.kind)

    def forward(self, inputs: List[np.ndarray], ctx: RunContext) -> np.ndarray:
        x = inputs[0]
        positive = self._decide(ctx, lambda: x > 0)
        self._remember(ctx, positive=positive)
        return x * positive

    def backward(self, grad: np.ndarray) -> List[np.ndarray]:
        return [grad * self._recall()["positive"]]


class PReLU(Layer):
    """Parametric ReLU with one learnable slope per layer."""

    kind = "PReLU"

    def __init__(self, init: float = 0.25) -> None:
        super().__init__()
        self.init = float(init)
        self.params["slope"] = Parameter("slope", np.array([init], dtype=DTYPE))

    def config(self) -> Dict[str, Any]:
        return {"init": self.init}

    def output_shape(self, input_shapes: Sequence[Shape]) -> Shape:
        return _single(input_shapes, self.kind)

    def forward(self, inputs: List[np.ndarray], ctx: RunContext) -> np.ndarray:
        x = inputs[0]
        positive = self._decide(ctx, lambda: x > 0)
        slope = self.params["slope"].data[0]
        self._remember(ctx, x=x, positive=positive)
        return np.where(positive, x, slope * x)

    def backward(self, grad: np.ndarray) -> List[np.ndarray]:
        cache = self._recall()
        x, positive = cache["x"], cache["positive"]
        slope = self.params["slope"]
        slope.grad += np.array([np.sum(grad * x * ~positive)], dtype=slope.data.dtype)
        return [np.where(positive, grad, slope.data[0] * grad)]


class Sigmoid(Layer):
    kind = "Sigmoid"

    def output_shape(self, input_shapes: Sequence[Shape]) -> Shape:
        return _single(input_shapes, self.kind)

    def forward(self, inputs: List[np.ndarray], ctx: RunContext) -> np.ndarray:
        x = inputs[0]
        y = (0.5 * (1.0 + np.tanh(0.5 * x))).astype(x.dtype)
        self._remember(ctx, y=y)
        return y

    def backward(self, grad: np.ndarray) -> List[np.ndarray]:
        y = self._recall()["y"]
        return [grad * y * (1.0 - y)]


class Dropout(Layer):
    """Inverted dropout; masks come from a counter-based generator keyed by (seed, step, node)."""

    kind = "Dropout"

    def __init__(self, rate: float = 0.5) -> None:
        super().__init__()
        if not 0.0 <= rate < 1.0:
            raise InvalidArgumentError(f"Dropout rate must be in [0, 1), got {rate}")
        self.rate = float(rate)

    def config(self) -> Dict[str, Any]:
        return {"rate": self.rate}

    def output_shape(self, input_shapes: Sequence[Shape]) -> Shape:
        return _single(input_shapes, self.kind)

    def mask(self, shape: Shape, ctx: RunContext) -> np.ndarray:
        bits = np.random.Generator(
            np.random.Philox(key=ctx.seed, counter=[ctx.step, ctx.node_index, 0, 0])
        )
        return bits.random(shape) >= self.rate

    def forward(self, inputs: List[np.ndarray], ctx: RunContext) -> np.ndarray:
        x = inputs[0]
        if not ctx.training or self.rate == 0.0:
            self._remember(ctx, scale=None)
            return x
        scale = (self.mask(x.shape, ctx) / (1.0 - self.rate)).astype(x.dtype)
        self._remember(ctx, scale=scale)
        return x * scale

    def backward(self, grad: np.ndarray) -> List[np.ndarray]:
        scale = self._recall()["scale"]
        return [grad if scale is None else grad * scale]


class Upsample2x(Layer):
    """Nearest-neighbour 2x spatial upsampling."""

    kind = "Upsample2x"

    def output_shape(self, input_shapes: Sequence[Shape]) -> Shape:
        c, h, w = _single(input_shapes, self.kind)
        return (c, 2 * h, 2 * w)

    def forward(self, inputs: List[np.ndarray], ctx: RunContext) -> np.ndarray:
        self._remember(ctx)
        return inputs[0].repeat(2, axis=2).repeat(2, axis=3)

    def backward(self, grad: np.ndarray) -> List[np.ndarray]:
        self._recall()
        b, c, h2, w2 = grad.shape
        return [grad.reshape(b, c, h2 // 2, 2, w2 // 2, 2).sum(axis=(3, 5))]


class MaxPool2(Layer):
    """2x2 max pooling, stride 2; ties route the gradient to the first maximum."""

    kind = "MaxPool2"

    def output_shape(self, input_shapes: Sequence[Shape]) -> Shape:
        c, h, w = _single(input_shapes, self.kind)
        if h % 2 or w % 2:
            raise ShapeError(f"MaxPool2 needs even spatial dimensions, got {h}x{w}")
        return (c, h // 2, w // 2)

    @staticmethod
    def _blocks(x: np.ndarray) -> np.ndarray:
        b, c, h, w = x.shape
        return x.reshape(b, c, h // 2, 2, w // 2, 2).transpose(0, 1, 2, 4, 3, 5).reshape(b, c, h // 2, w // 2, 4)

    def forward(self, inputs: List[np.ndarray], ctx: RunContext) -> np.ndarray:
        x = inputs[0]
        if x.ndim != 4 or x.shape[2] % 2 or x.shape[3] % 2:
            raise ShapeError(f"MaxPool2 needs (B, C, even H, even W), got {x.shape}")
        blocks = self._blocks(x)
        index = self._decide(ctx, lambda: blocks.argmax(axis=-1))
        self._remember(ctx, index=index, x_shape=x.shape)
        return np.take_along_axis(blocks, index[..., None], axis=-1)[..., 0]

    def backward(self, grad: np.ndarray) -> List[np.ndarray]:
        cache = self._recall()
        b, c, h, w = cache["x_shape"]
        routed = np.zeros((b, c, h // 2, w // 2, 4), dtype=grad.dtype)
        np.put_along_axis(routed, cache["index"][..., None], grad[..., None], axis=-1)
        return [routed.reshape(b, c, h // 2, w // 2, 2, 2).transpose(0, 1, 2, 4, 3, 5).reshape(b, c, h, w)]


class Concat(Layer):
    """Channel-axis concatenation of same-size feature maps."""

    kind = "Concat"

    def output_shape(self, input_shapes: Sequence[Shape]) -> Shape:
        if len(input_shapes) < 2:
            raise ShapeError("Concat needs at least two inputs")
        spatial = {s[1:] for s in input_shapes}
        if len(spatial) != 1:
            raise ShapeError(f"Concat inputs disagree spatially: {sorted(spatial)}")
        return (sum(s[0] for s in input_shapes),) + input_shapes[0][1:]

    def forward(self, inputs: List[np.ndarray], ctx: RunContext) -> np.ndarray:
        if len({x.shape[2:] for x in inputs}) != 1:
            raise ShapeError(f"Concat inputs disagree spatially: {[x.shape for x in inputs]}")
        self._remember(ctx, sizes=[x.shape[1] for x in inputs])
        return np.concatenate(inputs, axis=1)

    def backward(self, grad: np.ndarray) -> List[np.ndarray]:
        sizes = self._recall()["sizes"]
        return np.split(grad, np.cumsum(sizes)[:-1], axis=1)


LAYER_TYPES = {
    cls.kind: cls
    for cls in (Conv2d, Dense, ELU, PReLU, ReLU, Sigmoid, Dropout, Upsample2x, MaxPool2, Concat)
}


def layer_from_spec(spec: Dict[str, Any]) -> Layer:
    spec = dict(spec)
    kind = spec.pop("kind", None)
    if kind not in LAYER_TYPES:
        raise InvalidArgumentError(f"Unknown layer kind: {kind!r}")
    return LAYER_TYPES[kind](**spec)
