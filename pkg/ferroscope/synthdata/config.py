"""
Synthetic corpus configuration.
"""

from dataclasses import dataclass, field, replace
from typing import Any, Dict, Tuple

from ferroscope.utils.config_loader import ConfigLoader
from ferroscope.utils.config_loader import config as default_config
from ferroscope.utils.errors import ConfigError

NORMAL = "normal"
BACKGROUND = "background"
DEFECT_CLASSES = ("rolled_in_scale", "inclusion", "scratch", "patch")
SYNTH_CLASSES = (NORMAL,) + DEFECT_CLASSES + (BACKGROUND,)


def _pair(value: Any, name: str) -> Tuple[float, float]:
    try:
        low, high = (float(v) for v in value)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"{name} must be a [low, high] pair, got {value!r}") from e
    if low > high:
        raise ConfigError(f"{name} low {low} exceeds high {high}")
    return low, high


@dataclass(frozen=True)
class CorpusConfig:
    tile_side: int = 32
    counts: Dict[str, int] = field(default_factory=lambda: {name: 300 for name in SYNTH_CLASSES})
    seed: int = 7
    gan_normal: int = 512
    holdout_normal: int = 128
    holdout_defect: int = 128
    strips: int = 6
    strip_height: int = 32
    strip_width: int = 200
    streak_components: Tuple[int, int] = (3, 6)
    noise_amplitude: float = 4.0
    base_level: Tuple[float, float] = (112.0, 144.0)
    defect_contrast: Tuple[float, float] = (40.0, 90.0)

    def __post_init__(self) -> None:
        if self.tile_side < 8:
            raise ConfigError(f"tile_side must be >= 8, got {self.tile_side}")
        unknown = sorted(set(self.counts) - set(SYNTH_CLASSES))
        if unknown:
            raise ConfigError(f"Cannot synthesize classes {unknown}; known: {list(SYNTH_CLASSES)}")
        if any(int(v) < 0 for v in self.counts.values()):
            raise ConfigError("Class counts must be >= 0")
        if min(self.gan_normal, self.holdout_normal, self.holdout_defect, self.strips) < 0:
            raise ConfigError("Set sizes must be >= 0")
        low, high = self.streak_components
        if not 1 <= low <= high:
            raise ConfigError(f"streak_components must satisfy 1 <= low <= high, got {self.streak_components}")
        if self.noise_amplitude < 0:
            raise ConfigError("noise_amplitude must be >= 0")
        if self.strip_height < 1 or self.strip_width < 1:
            raise ConfigError("Strip dimensions must be positive")

    def with_counts(self, **counts: int) -> "CorpusConfig":
        merged = dict(self.counts)
        merged.update(counts)
        return replace(self, counts=merged)

    @classmethod
    def from_config(cls, loader: ConfigLoader = default_config) -> "CorpusConfig":
        defaults = cls()
        counts = loader.get("synth.counts") or defaults.counts
        streaks = _pair(loader.get("synth.streak_components", defaults.streak_components), "streak_components")
        return cls(
            tile_side=int(loader.get("imgrid.tile_side", defaults.tile_side)),
            counts={str(k): int(v) for k, v in counts.items()},
            seed=loader.seed(defaults.seed),
            gan_normal=int(loader.get("synth.gan_normal", defaults.gan_normal)),
            holdout_normal=int(loader.get("synth.holdout_normal", defaults.holdout_normal)),
            holdout_defect=int(loader.get("synth.holdout_defect", defaults.holdout_defect)),
            strips=int(loader.get("synth.strips", defaults.strips)),
            strip_height=int(loader.get("synth.strip_height", defaults.strip_height)),
            strip_width=int(loader.get("synth.strip_width", defaults.strip_width)),
            streak_components=(int(streaks[0]), int(streaks[1])),
            noise_amplitude=float(loader.get("synth.noise_amplitude", defaults.noise_amplitude)),
            base_level=_pair(loader.get("synth.base_level", defaults.base_level), "base_level"),
            defect_contrast=_pair(loader.get("synth.defect_contrast", defaults.defect_contrast), "defect_contrast"),
        )
