"""
Ferroscope Network Builders
===========================

Builds the three pipeline networks from a NetConfig:
- tile classifier: conv3x3 -> ReLU -> MaxPool2 blocks, dense logits
- generator: VGG-style encoder, PReLU bridge, over-complete decoder with
  skip concatenations and a dropout layer before every decoder block
- patch discriminator: stride-2 conv + ELU blocks, a feature conv + ELU
  (the anomaly feature), then dense -> one logit -> sigmoid
"""

from typing import Optional

import numpy as np

from ferroscope.nets.catalog import ClassCatalog
from ferroscope.nets.config import DISC_KERNEL, FEATURE_KERNEL, NetConfig
from ferroscope.tensorcore import (
    ELU,
    Concat,
    Conv2d,
    Dense,
    Dropout,
    MaxPool2,
    Network,
    PReLU,
    ReLU,
    Sigmoid,
    Upsample2x,
)
from ferroscope.utils.errors import ConfigError
from ferroscope.utils.logger import logger

FEATURE_NODE = "feature"
LOGIT_NODE = "logit"
LOGITS_NODE = "logits"


def _rng(seed: int, salt: int) -> np.random.Generator:
    return np.random.default_rng([seed, salt])


def build_classifier(config: NetConfig, catalog: ClassCatalog, seed: int = 0) -> Network:
    """Tile classifier emitting one logit per catalog class (softmax applied by classify)."""
    if catalog.size < 2:
        raise ConfigError(f"Classifier needs at least 2 classes, got {catalog.size}")
    config.require_divisible(config.encoder_depth)
    rng = _rng(seed, 1)
    net = Network("cls", (config.input_channels, config.input_side, config.input_side), seed)

    channels = config.input_channels
    for stage in range(config.encoder_depth):
        out = config.encoder_channels(stage)
        net.add(f"block{stage}_conv", Conv2d(channels, out, 3, 1, 1, rng=rng))
        net.add(f"block{stage}_relu", ReLU())
        net.add(f"block{stage}_pool", MaxPool2())
        channels = out

    features = int(np.prod(net.output_shape))
    net.add(LOGITS_NODE, Dense(features, catalog.size, rng=rng))
    logger.debug("Classifier built", classes=catalog.size, parameters=net.parameter_count())
    return net


def build_generator(config: NetConfig, seed: int = 0) -> Network:
    """U-Net style generator; output has the input's shape, values in [0, 1]."""
    depth = config.encoder_depth
    config.require_divisible(depth)
    rng = _rng(seed, 2)
    net = Network("gen", (config.input_channels, config.input_side, config.input_side), seed)

    skips = []
    channels = config.input_channels
    for stage in range(depth):
        out = config.encoder_channels(stage)
        for j in range(config.convs_per_stage):
            net.add(f"enc{stage}_conv{j}", Conv2d(channels, out, 3, 1, 1, rng=rng))
            net.add(f"enc{stage}_relu{j}", ReLU())
            channels = out
        skips.append(net.output_name)
        net.add(f"enc{stage}_pool", MaxPool2())

    bridge = config.encoder_channels(depth)
    for b in range(config.bridge_blocks):
        net.add(f"bridge{b}_conv", Conv2d(channels, bridge, 3, 1, 1, rng=rng))
        net.add(f"bridge{b}_prelu", PReLU(0.25))
        channels = bridge

    for stage in reversed(range(depth)):
        out = config.decoder_channels(stage)
        net.add(f"dec{stage}_dropout", Dropout(config.dropout_rate))
        net.add(f"dec{stage}_up", Upsample2x())
        net.add(f"dec{stage}_upconv", Conv2d(channels, out, 3, 1, 1, rng=rng))
        up = net.add(f"dec{stage}_uprelu", ReLU())
        net.add(f"dec{stage}_concat", Concat(), inputs=[up, skips[stage]])
        channels = out + config.encoder_channels(stage)
        for j in range(config.convs_per_stage):
            net.add(f"dec{stage}_conv{j}", Conv2d(channels, out, 3, 1, 1, rng=rng))
            net.add(f"dec{stage}_relu{j}", ReLU())
            channels = out

    net.add("out_conv", Conv2d(channels, config.input_channels, 1, 1, 0, rng=rng))
    net.add("out", Sigmoid())
    logger.debug("Generator built", census=net.layer_census(), parameters=net.parameter_count())
    return net


def build_discriminator(config: NetConfig, seed: int = 0) -> Network:
    """Patch discriminator whose post-ELU final convolution is the anomaly feature."""
    if config.input_side < 2 ** config.disc_downsamplings:
        raise ConfigError(
            f"input_side {config.input_side} too small for {config.disc_downsamplings} downsamplings"
        )
    dim = config.feature_dim()
    rng = _rng(seed, 3)
    net = Network("disc", (config.input_channels, config.input_side, config.input_side), seed)

    channels = config.input_channels
    for block in range(config.disc_downsamplings):
        out = config.disc_channels(block)
        net.add(f"down{block}_conv", Conv2d(channels, out, DISC_KERNEL, 2, 1, rng=rng))
        net.add(f"down{block}_elu", ELU(1.0))
        channels = out

    net.add("feature_conv", Conv2d(channels, config.feature_channels, FEATURE_KERNEL, 1, config.feature_padding, rng=rng))
    net.add(FEATURE_NODE, ELU(1.0))
    if int(np.prod(net.output_shape)) != dim:
        raise ConfigError(f"Feature map {net.output_shape} disagrees with configured D={dim}")
    net.add(LOGIT_NODE, Dense(dim, 1, rng=rng))
    net.add("prob", Sigmoid())
    logger.debug("Discriminator built", feature_dim=dim, parameters=net.parameter_count())
    return net


def layer_census(network: Network) -> dict:
    """Layer counts per kind plus the total, for documenting preset depths."""
    census = network.layer_census()
    census["total"] = sum(census.values())
    return census
