"""
Network configuration and the two presets.

Desk preset: 32 px single-channel tiles, two-stage encoder/decoder, 64-value
discriminator feature. Full preset: 100 px RGB input, four stride-2
discriminator blocks ending in a 4x4x256 = 4096-value feature.
"""

from dataclasses import asdict, dataclass, replace
from enum import Enum
from typing import Any, Dict

from ferroscope.utils.config_loader import ConfigLoader
from ferroscope.utils.config_loader import config as default_config
from ferroscope.utils.errors import ConfigError

DISC_KERNEL = 4
FEATURE_KERNEL = 3


class Preset(str, Enum):
    DESK = "desk"
    FULL = "full"


@dataclass(frozen=True)
class NetConfig:
    input_side: int = 32
    input_channels: int = 1
    encoder_depth: int = 2
    base_channels: int = 8
    decoder_multiplier: int = 4
    bridge_blocks: int = 3
    convs_per_stage: int = 2
    dropout_rate: float = 0.25
    disc_downsamplings: int = 4
    disc_base_channels: int = 8
    feature_channels: int = 16
    feature_padding: int = 1
    preset: Preset = Preset.DESK

    def __post_init__(self) -> None:
        if self.encoder_depth < 1:
            raise ConfigError(f"encoder_depth must be >= 1, got {self.encoder_depth}")
        if self.decoder_multiplier < 1:
            raise ConfigError(f"decoder_multiplier must be >= 1, got {self.decoder_multiplier}")
        if self.input_side < 1 or self.input_channels < 1 or self.base_channels < 1:
            raise ConfigError("input_side, input_channels and base_channels must be positive")
        if self.bridge_blocks < 0 or self.convs_per_stage < 1 or self.disc_downsamplings < 0:
            raise ConfigError("bridge_blocks >= 0, convs_per_stage >= 1, disc_downsamplings >= 0 required")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ConfigError(f"dropout_rate must be in [0, 1), got {self.dropout_rate}")

    @classmethod
    def desk(cls, **overrides: Any) -> "NetConfig":
        return replace(cls(), **overrides)

    @classmethod
    def full_scale(cls, **overrides: Any) -> "NetConfig":
        base = cls(
            input_side=100,
            input_channels=3,
            encoder_depth=2,
            base_channels=64,
            decoder_multiplier=4,
            bridge_blocks=3,
            convs_per_stage=2,
            dropout_rate=0.5,
            disc_downsamplings=4,
            disc_base_channels=64,
            feature_channels=256,
            feature_padding=0,
            preset=Preset.FULL,
        )
        return replace(base, **overrides)

    @classmethod
    def from_config(cls, loader: ConfigLoader = default_config) -> "NetConfig":
        name = str(loader.get("net.preset", "desk")).lower()
        try:
            preset = Preset(name)
        except ValueError as e:
            raise ConfigError(f"net.preset must be one of {[p.value for p in Preset]}, got {name!r}") from e
        factory = cls.full_scale if preset is Preset.FULL else cls.desk
        if preset is Preset.FULL:
            return factory()
        return factory(
            input_side=int(loader.get("imgrid.tile_side", 32)),
            input_channels=int(loader.get("net.input_channels", 1)),
            encoder_depth=int(loader.get("net.encoder_depth", 2)),
            base_channels=int(loader.get("net.base_channels", 8)),
            decoder_multiplier=int(loader.get("net.decoder_multiplier", 4)),
            bridge_blocks=int(loader.get("net.bridge_blocks", 3)),
            convs_per_stage=int(loader.get("net.convs_per_stage", 2)),
            dropout_rate=float(loader.get("net.dropout_rate", 0.25)),
            disc_downsamplings=int(loader.get("net.disc_downsamplings", 4)),
            disc_base_channels=int(loader.get("net.disc_base_channels", 8)),
            feature_channels=int(loader.get("net.feature_channels", 16)),
            feature_padding=int(loader.get("net.feature_padding", 1)),
        )

    def with_depth(self, depth: int) -> "NetConfig":
        return replace(self, encoder_depth=depth)

    def require_divisible(self, depth: int) -> None:
        if self.input_side % (2 ** depth):
            raise ConfigError(f"input_side {self.input_side} is not divisible by 2^{depth}")

    def encoder_channels(self, stage: int) -> int:
        return self.base_channels * 2 ** stage

    def decoder_channels(self, stage: int) -> int:
        return self.decoder_multiplier * self.encoder_channels(stage)

    def disc_channels(self, block: int) -> int:
        return min(self.disc_base_channels * 2 ** block, 8 * self.disc_base_channels)

    def disc_spatial(self) -> int:
        """Side of the discriminator feature map."""
        side = self.input_side
        for _ in range(self.disc_downsamplings):
            side = (side + 2 - DISC_KERNEL) // 2 + 1
        return (side + 2 * self.feature_padding - FEATURE_KERNEL) + 1

    def feature_dim(self) -> int:
        """Length D of the flattened discriminator feature."""
        spatial = self.disc_spatial()
        if spatial < 1 or self.feature_channels < 1:
            raise ConfigError(f"Discriminator configuration yields no feature map (side {spatial})")
        return self.feature_channels * spatial * spatial

    def summary(self) -> Dict[str, Any]:
        """Structural facts reported by the presets."""
        return {
            "preset": self.preset.value,
            "encoder_style": "vgg-conv3x3-stacks",
            "encoder_depth": self.encoder_depth,
            "decoder_multiplier": self.decoder_multiplier,
            "bridge_blocks": self.bridge_blocks,
            "disc_downsamplings": self.disc_downsamplings,
            "feature_dim": self.feature_dim(),
        }

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["preset"] = self.preset.value
        return data
