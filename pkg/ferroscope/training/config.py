"""
Training configuration and the per-run training report.
"""

import os
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Union

import psutil
import yaml

from ferroscope.tensorcore import AdamHyper
from ferroscope.utils.config_loader import ConfigLoader
from ferroscope.utils.config_loader import config as default_config
from ferroscope.utils.errors import ConfigError
from ferroscope.utils.fileio import atomic_write_text


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 4
    epochs: int = 8
    learning_rate: float = 2e-4
    beta1: float = 0.5
    beta2: float = 0.999
    seed: int = 0
    split_ratio: float = 0.8
    lambda_adv: float = 1.0
    lambda_rec: float = 100.0

    def __post_init__(self) -> None:
        if not 0.0 < self.split_ratio < 1.0:
            raise ConfigError(f"split_ratio must be in (0, 1), got {self.split_ratio}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.epochs < 0:
            raise ConfigError(f"epochs must be >= 0, got {self.epochs}")
        if self.learning_rate <= 0:
            raise ConfigError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.lambda_adv < 0 or self.lambda_rec < 0:
            raise ConfigError("Loss weights must be non-negative")
        if self.lambda_adv == 0 and self.lambda_rec == 0:
            raise ConfigError("lambda_adv and lambda_rec cannot both be zero")

    @property
    def adam(self) -> AdamHyper:
        return AdamHyper(lr=self.learning_rate, beta1=self.beta1, beta2=self.beta2)

    def with_overrides(self, **overrides: Any) -> "TrainConfig":
        return replace(self, **{k: v for k, v in overrides.items() if v is not None})

    @classmethod
    def from_config(cls, section: str, loader: ConfigLoader = default_config) -> "TrainConfig":
        """Build from ``train.<section>`` (``classifier`` or ``gan``)."""
        if section not in ("classifier", "gan"):
            raise ConfigError(f"Unknown training section: {section!r}")
        prefix = f"train.{section}"
        defaults = cls()
        return cls(
            batch_size=int(loader.get(f"{prefix}.batch_size", defaults.batch_size)),
            epochs=int(loader.get(f"{prefix}.epochs", defaults.epochs)),
            learning_rate=float(loader.get(f"{prefix}.learning_rate", defaults.learning_rate)),
            beta1=float(loader.get(f"{prefix}.beta1", defaults.beta1)),
            beta2=float(loader.get(f"{prefix}.beta2", defaults.beta2)),
            seed=loader.seed(),
            split_ratio=float(loader.get(f"{prefix}.split_ratio", defaults.split_ratio)),
            lambda_adv=float(loader.get(f"{prefix}.lambda_adv", defaults.lambda_adv)),
            lambda_rec=float(loader.get(f"{prefix}.lambda_rec", defaults.lambda_rec)),
        )


def resident_mb() -> float:
    return psutil.Process(os.getpid()).memory_info().rss / (1024 * 1024)


@dataclass
class TrainReport:
    """Per-epoch losses and metrics of one training run.

    Every list in ``losses`` and ``epoch_metrics`` holds exactly one entry
    per completed epoch.
    """

    kind: str
    seed: int
    epochs: int
    losses: Dict[str, List[float]] = field(default_factory=dict)
    epoch_metrics: Dict[str, List[float]] = field(default_factory=dict)
    metrics: Dict[str, Any] = field(default_factory=dict)
    wall_seconds: float = 0.0
    peak_rss_mb: float = 0.0
    warnings: List[str] = field(default_factory=list)

    def record(self, losses: Dict[str, float], metrics: Dict[str, float] = None) -> None:
        for name, value in losses.items():
            self.losses.setdefault(name, []).append(float(value))
        for name, value in (metrics or {}).items():
            self.epoch_metrics.setdefault(name, []).append(float(value))
        self.peak_rss_mb = max(self.peak_rss_mb, resident_mb())

    @property
    def completed_epochs(self) -> int:
        return max((len(v) for v in self.losses.values()), default=0)

    def records(self) -> List[Dict[str, float]]:
        """One flat record per epoch."""
        out = []
        for i in range(self.completed_epochs):
            entry: Dict[str, float] = {"epoch": i + 1}
            entry.update({k: v[i] for k, v in self.losses.items()})
            entry.update({k: v[i] for k, v in self.epoch_metrics.items() if i < len(v)})
            out.append(entry)
        return out

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": self.kind,
            "seed": self.seed,
            "epochs": self.epochs,
            "wall_seconds": round(self.wall_seconds, 3),
            "peak_rss_mb": round(self.peak_rss_mb, 1),
            "warnings": list(self.warnings),
            "metrics": plain(self.metrics),
            "history": self.records(),
        }

    def write(self, path: Union[str, os.PathLike]) -> None:
        atomic_write_text(path, yaml.safe_dump(self.to_dict(), sort_keys=False))


def plain(value: Any) -> Any:
    """Convert numpy scalars/arrays nested in dicts and lists to YAML-safe Python types."""
    if isinstance(value, dict):
        return {str(k): plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [plain(v) for v in value]
    if hasattr(value, "tolist"):
        return value.tolist()
    return value
