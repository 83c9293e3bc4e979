"""
Minimal reverse-mode engine: layers, graph networks, losses, Adam and checkpoints.
"""

from .checkpoint import decode_parameters, encode_parameters, load_parameters, save_parameters
from .gradcheck import grad_check, relative_error
from .layers import (
    ELU,
    LAYER_TYPES,
    Concat,
    Conv2d,
    Dense,
    Dropout,
    Layer,
    MaxPool2,
    PReLU,
    ReLU,
    RunContext,
    Sigmoid,
    Upsample2x,
    layer_from_spec,
)
from .losses import bce_with_logits, binary_cross_entropy, l1_loss, softmax, softmax_cross_entropy
from .network import INPUT, Network
from .optim import Adam, AdamHyper, AdamState, adam_step
from .tensor import DTYPE, Mode, Parameter, Tensor

__all__ = [
    "Adam",
    "AdamHyper",
    "AdamState",
    "Concat",
    "Conv2d",
    "DTYPE",
    "Dense",
    "Dropout",
    "ELU",
    "INPUT",
    "LAYER_TYPES",
    "Layer",
    "MaxPool2",
    "Mode",
    "Network",
    "PReLU",
    "Parameter",
    "ReLU",
    "RunContext",
    "Sigmoid",
    "Tensor",
    "Upsample2x",
    "adam_step",
    "bce_with_logits",
    "binary_cross_entropy",
    "decode_parameters",
    "encode_parameters",
    "grad_check",
    "l1_loss",
    "layer_from_spec",
    "load_parameters",
    "relative_error",
    "save_parameters",
    "softmax",
    "softmax_cross_entropy",
]
