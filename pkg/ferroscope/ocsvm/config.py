"""
One-class SVM parameters read from the ``ocsvm`` config section.
"""

from dataclasses import dataclass, replace
from typing import Any, Optional

from ferroscope.ocsvm.solver import DEFAULT_MAX_ITER, DEFAULT_TOL
from ferroscope.utils.config_loader import ConfigLoader
from ferroscope.utils.config_loader import config as default_config
from ferroscope.utils.errors import ConfigError


@dataclass(frozen=True)
class OcsvmParams:
    nu: float = 0.1
    gamma: Optional[float] = None
    tol: float = DEFAULT_TOL
    max_iter: int = DEFAULT_MAX_ITER
    standardize: bool = True
    recalibrate: bool = False

    def __post_init__(self) -> None:
        if not 0.0 < self.nu <= 1.0:
            raise ConfigError(f"ocsvm.nu must be in (0, 1], got {self.nu}")
        if self.gamma is not None and self.gamma < 0:
            raise ConfigError(f"ocsvm.gamma must be >= 0 or null, got {self.gamma}")
        if self.tol <= 0 or self.max_iter < 1:
            raise ConfigError("ocsvm.tol must be positive and ocsvm.max_iter >= 1")

    def with_overrides(self, **overrides: Any) -> "OcsvmParams":
        return replace(self, **{k: v for k, v in overrides.items() if v is not None})

    @classmethod
    def from_config(cls, loader: ConfigLoader = default_config) -> "OcsvmParams":
        gamma = loader.get("ocsvm.gamma")
        return cls(
            nu=float(loader.get("ocsvm.nu", 0.1)),
            gamma=None if gamma is None else float(gamma),
            tol=float(loader.get("ocsvm.tol", DEFAULT_TOL)),
            max_iter=int(loader.get("ocsvm.max_iter", DEFAULT_MAX_ITER)),
            standardize=bool(loader.get("ocsvm.standardize", True)),
            recalibrate=bool(loader.get("ocsvm.recalibrate", False)),
        )
