"""
Anomalous feature (AF) values and the per-image AF map.

AF(U) = norm_score(U) * sum of prob_a(U) over the anomalous classes a, which
lies in [0, 1]; 1 means a tile confidently classified as a defect class and
scored as maximally anomalous.
"""

from dataclasses import dataclass
from typing import List, Optional, Sequence, Union

import numpy as np

from ferroscope.imaging.grid import TileGrid
from ferroscope.nets.catalog import ClassCatalog, catalog_by_name
from ferroscope.nets.inference import ClassProbs
from ferroscope.ocsvm.model import AnomalyScore
from ferroscope.utils.config_loader import ConfigLoader
from ferroscope.utils.config_loader import config as default_config
from ferroscope.utils.errors import ConfigError, InvalidArgumentError, NonFiniteError
from ferroscope.utils.logger import logger

RANGE_SLACK = 1e-6


@dataclass(frozen=True)
class MapParams:
    catalog: ClassCatalog
    display_scale: float = 100.0
    alpha: float = 0.5
    smooth: bool = False
    legend: bool = True
    montage_k: int = 100
    hist_bin_width: float = 0.05

    def __post_init__(self) -> None:
        if not self.catalog.anomalous_set:
            raise ConfigError("anomap needs a non-empty anomalous class set")
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError(f"alpha must be in [0, 1], got {self.alpha}")
        if self.display_scale <= 0 or self.hist_bin_width <= 0 or self.montage_k < 1:
            raise ConfigError("display_scale, hist_bin_width and montage_k must be positive")

    @classmethod
    def from_config(cls, loader: ConfigLoader = default_config) -> "MapParams":
        catalog = catalog_by_name(loader.get("anomap.catalog", "strip_steel"))
        anomalous = loader.get("anomap.anomalous_classes")
        if anomalous:
            if isinstance(anomalous, str):
                anomalous = [a.strip() for a in anomalous.split(",") if a.strip()]
            catalog = catalog.with_anomalous(anomalous)
        return cls(
            catalog=catalog,
            display_scale=float(loader.get("anomap.display_scale", 100)),
            alpha=float(loader.get("anomap.alpha", 0.5)),
            smooth=bool(loader.get("anomap.smooth", False)),
            legend=bool(loader.get("anomap.legend", True)),
            montage_k=int(loader.get("anomap.montage_k", 100)),
            hist_bin_width=float(loader.get("anomap.hist_bin_width", 0.05)),
        )


def _clamp(af: np.ndarray, source_id: str = "") -> np.ndarray:
    """Clip AF values to [0, 1], warning when the excess is beyond floating-point noise."""
    excess = max(float(-af.min()), float(af.max() - 1.0), 0.0) if af.size else 0.0
    if excess > RANGE_SLACK:
        logger.warning("AF values outside [0, 1] clamped", source_id=source_id, excess=excess)
    return np.clip(af, 0.0, 1.0)


def _norm(score: Union[AnomalyScore, float]) -> float:
    return score.norm_score if isinstance(score, AnomalyScore) else float(score)


def anomalous_feature(probs: Union[ClassProbs, np.ndarray], score: Union[AnomalyScore, float], catalog: ClassCatalog) -> float:
    if not catalog.anomalous_set:
        raise ConfigError("Anomalous class set is empty")
    p = probs.probs if isinstance(probs, ClassProbs) else np.asarray(probs, dtype=np.float64)
    if p.shape != (catalog.size,):
        raise InvalidArgumentError(f"{p.size} probabilities for a {catalog.size}-class catalog")
    mass = float(p[sorted(catalog.anomalous_set)].sum())
    return float(_clamp(np.array([_norm(score) * mass]))[0])


def anomalous_features(
    probs: np.ndarray, norm_scores: Sequence[float], catalog: ClassCatalog, source_id: str = ""
) -> np.ndarray:
    """Vectorized AF for (B, K) probabilities and B norm scores."""
    if not catalog.anomalous_set:
        raise ConfigError("Anomalous class set is empty")
    probs = np.asarray(probs, dtype=np.float64)
    norm_scores = np.asarray(norm_scores, dtype=np.float64)
    if probs.ndim != 2 or probs.shape[1] != catalog.size or probs.shape[0] != norm_scores.size:
        raise InvalidArgumentError(f"Probabilities {probs.shape} do not match {norm_scores.size} scores and {catalog.size} classes")
    mass = probs[:, sorted(catalog.anomalous_set)].sum(axis=1)
    return _clamp(norm_scores * mass, source_id)


@dataclass(frozen=True)
class AnomalousFeatureMap:
    grid: TileGrid
    af: np.ndarray
    display_scale: float = 100.0
    source_id: str = ""
    background: Optional[np.ndarray] = None

    @property
    def cells(self) -> np.ndarray:
        """AF values as a (rows, cols) array."""
        return self.af.reshape(self.grid.rows, self.grid.cols)

    @property
    def peak(self) -> float:
        return float(self.af.max()) if self.af.size else 0.0

    def display_values(self) -> np.ndarray:
        return self.af * self.display_scale


def build_map(
    grid: TileGrid,
    values: Sequence[float],
    display_scale: float = 100.0,
    source_id: str = "",
    background: Optional[Sequence[bool]] = None,
) -> AnomalousFeatureMap:
    """Assemble per-tile AF values, given in tiling (row-major) order, into a map.

    Values outside [0, 1] are clamped; a warning is logged when the excess is
    beyond floating-point noise.
    """
    af = np.asarray(values, dtype=np.float64).ravel()
    if af.size != grid.count:
        raise InvalidArgumentError(f"{af.size} AF values for a {grid.rows}x{grid.cols} grid")
    if not np.all(np.isfinite(af)):
        raise NonFiniteError("AF values must be finite", name="af")
    mask = None
    if background is not None:
        mask = np.asarray(background, dtype=bool).ravel()
        if mask.size != grid.count:
            raise InvalidArgumentError(f"{mask.size} background flags for {grid.count} tiles")
    return AnomalousFeatureMap(grid, _clamp(af, source_id), float(display_scale), source_id, mask)


def background_flags(argmax: Sequence[int], catalog: ClassCatalog) -> List[bool]:
    return [int(a) in catalog.background_set for a in argmax]
