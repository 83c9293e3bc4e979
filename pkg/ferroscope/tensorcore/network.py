"""
Ferroscope Network Graph
========================

A network is an ordered list of named nodes. Every node applies one layer
to one or more earlier nodes ("input" names the batch), which is enough for
the skip connections of the U-Net generator while staying a plain list.

Contract:
- forward(batch, mode) returns every node's activation, keyed by node name
- backward(grad, start=None) must follow a TRAIN forward; it accumulates
  parameter gradients and returns the gradient with respect to the input
- EVAL forwards store nothing, so a frozen network can be shared
"""

import copy
from collections import Counter, OrderedDict
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ferroscope.tensorcore.layers import Layer, RunContext, layer_from_spec
from ferroscope.tensorcore.tensor import DTYPE, Mode, Parameter
from ferroscope.utils.errors import InvalidArgumentError, ShapeError, StateError

INPUT = "input"


@dataclass
class Node:
    name: str
    layer: Layer
    inputs: Tuple[str, ...]


class Network:
    """Directed acyclic network over the layer kinds in tensorcore.layers."""

    def __init__(self, name: str, input_shape: Sequence[int], seed: int = 0) -> None:
        self.name = name
        self.input_shape = tuple(int(d) for d in input_shape)
        self.seed = int(seed)
        self.step = 0
        self.nodes: List[Node] = []
        self._shapes: Dict[str, Tuple[int, ...]] = {INPUT: self.input_shape}
        self._trace = False

    def add(self, node_name: str, layer: Layer, inputs: Optional[Sequence[str]] = None) -> str:
        """Append a node; ``inputs`` defaults to the previous node."""
        if node_name in self._shapes:
            raise InvalidArgumentError(f"Duplicate node name: {node_name}")
        if inputs is None:
            inputs = (self.nodes[-1].name if self.nodes else INPUT,)
        inputs = tuple(inputs)
        for source in inputs:
            if source not in self._shapes:
                raise InvalidArgumentError(f"Node {node_name} reads unknown node {source}")
        try:
            shape = layer.output_shape([self._shapes[s] for s in inputs])
        except ShapeError as e:
            raise ShapeError(f"layer {node_name}: {e}") from e
        for local, param in layer.params.items():
            param.name = f"{self.name}.{node_name}.{local}"
        self.nodes.append(Node(node_name, layer, inputs))
        self._shapes[node_name] = tuple(shape)
        return node_name

    @property
    def output_name(self) -> str:
        if not self.nodes:
            raise StateError(f"Network {self.name} has no layers")
        return self.nodes[-1].name

    @property
    def output_shape(self) -> Tuple[int, ...]:
        return self._shapes[self.output_name]

    def shape_of(self, node_name: str) -> Tuple[int, ...]:
        return self._shapes[node_name]

    @property
    def dtype(self) -> np.dtype:
        params = self.parameters()
        return params[0].data.dtype if params else np.dtype(DTYPE)

    def forward(self, batch: np.ndarray, mode: Mode = Mode.EVAL, freeze_decisions: bool = False) -> "OrderedDict[str, np.ndarray]":
        x = np.asarray(batch)
        if x.ndim != len(self.input_shape) + 1 or tuple(x.shape[1:]) != self.input_shape:
            raise ShapeError(f"layer {INPUT}: network {self.name} expects (B, {self.input_shape}), got {x.shape}")
        x = x.astype(self.dtype, copy=False)
        mode = Mode(mode)
        activations: "OrderedDict[str, np.ndarray]" = OrderedDict({INPUT: x})
        for index, node in enumerate(self.nodes):
            ctx = RunContext(mode, self.seed, self.step, index, freeze_decisions)
            try:
                activations[node.name] = node.layer.forward([activations[s] for s in node.inputs], ctx)
            except ShapeError as e:
                raise ShapeError(f"layer {node.name}: {e}") from e
        self._trace = mode is Mode.TRAIN
        return activations

    def run(self, batch: np.ndarray, mode: Mode = Mode.EVAL) -> np.ndarray:
        """Forward pass returning only the output activation."""
        return self.forward(batch, mode)[self.output_name]

    def backward(self, grad: np.ndarray, start: Optional[str] = None) -> np.ndarray:
        """Backpropagate ``grad`` from node ``start`` (default: the output)."""
        if not self._trace:
            raise StateError(f"backward on {self.name} requires a preceding training-mode forward pass")
        start = start or self.output_name
        if start not in self._shapes or start == INPUT:
            raise InvalidArgumentError(f"Unknown start node: {start}")
        expected = self._shapes[start]
        if tuple(grad.shape[1:]) != expected:
            raise ShapeError(f"Gradient for {start} must be (B, {expected}), got {grad.shape}")

        grads: Dict[str, np.ndarray] = {start: np.asarray(grad, dtype=self.dtype)}
        stop = [n.name for n in self.nodes].index(start)
        for node in reversed(self.nodes[:stop + 1]):
            g = grads.pop(node.name, None)
            if g is None:
                continue
            for source, g_in in zip(node.inputs, node.layer.backward(g)):
                grads[source] = grads[source] + g_in if source in grads else g_in
        return grads.get(INPUT, np.zeros((grad.shape[0],) + self.input_shape, dtype=self.dtype))

    def parameters(self) -> List[Parameter]:
        return [p for node in self.nodes for p in node.layer.parameters()]

    def named_parameters(self) -> "OrderedDict[str, Parameter]":
        return OrderedDict((p.name, p) for p in self.parameters())

    def parameter_count(self) -> int:
        return int(sum(p.data.size for p in self.parameters()))

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.zero_grad()

    def advance(self) -> None:
        """Move the dropout counter forward; called once per optimizer step."""
        self.step += 1

    def astype(self, dtype: Any) -> "Network":
        """Deep copy with parameters cast to ``dtype`` (layer state is copied too)."""
        clone = copy.deepcopy(self)
        for p in clone.parameters():
            p.data = p.data.astype(dtype)
            p.grad = np.zeros_like(p.data)
        return clone

    def layer_census(self) -> Dict[str, int]:
        """Number of layers per kind."""
        return dict(Counter(node.layer.kind for node in self.nodes))

    def descriptor(self) -> Dict[str, Any]:
        """Architecture as plain data: kind, parameters and ordering of every node."""
        return {
            "name": self.name,
            "input_shape": list(self.input_shape),
            "seed": self.seed,
            "nodes": [
                {"name": node.name, "inputs": list(node.inputs), **node.layer.spec()}
                for node in self.nodes
            ],
        }

    @classmethod
    def from_descriptor(cls, descriptor: Dict[str, Any]) -> "Network":
        net = cls(descriptor["name"], descriptor["input_shape"], descriptor.get("seed", 0))
        for entry in descriptor["nodes"]:
            entry = dict(entry)
            name = entry.pop("name")
            inputs = entry.pop("inputs")
            net.add(name, layer_from_spec(entry), inputs)
        return net
