"""
Class catalogs: ordered class names plus the anomalous, region-of-interest
and background index sets the anomaly map needs.
"""

from dataclasses import dataclass
from typing import FrozenSet, Iterable, Sequence, Tuple

from ferroscope.utils.errors import ConfigError


@dataclass(frozen=True)
class ClassCatalog:
    names: Tuple[str, ...]
    anomalous_set: FrozenSet[int]
    roi_set: FrozenSet[int]
    background_set: FrozenSet[int] = frozenset()

    def __post_init__(self) -> None:
        k = len(self.names)
        if len(set(self.names)) != k:
            raise ConfigError(f"Duplicate class names in catalog: {self.names}")
        for label, subset in (("anomalous", self.anomalous_set), ("roi", self.roi_set), ("background", self.background_set)):
            if any(not 0 <= i < k for i in subset):
                raise ConfigError(f"{label} set {sorted(subset)} outside the {k}-class catalog")
        if self.anomalous_set & self.background_set:
            raise ConfigError("Anomalous classes cannot also be background classes")

    @property
    def size(self) -> int:
        return len(self.names)

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError as e:
            raise ConfigError(f"Unknown class name {name!r}; catalog has {list(self.names)}") from e

    def indices(self, names: Iterable[str]) -> FrozenSet[int]:
        return frozenset(self.index(n) for n in names)

    def with_anomalous(self, names: Sequence[str]) -> "ClassCatalog":
        """Same catalog with a different anomalous class set."""
        return ClassCatalog(self.names, self.indices(names), self.roi_set, self.background_set)

    @classmethod
    def from_names(
        cls,
        names: Sequence[str],
        anomalous: Sequence[str],
        background: Sequence[str] = (),
    ) -> "ClassCatalog":
        names = tuple(names)
        bg = frozenset(names.index(n) for n in background)
        roi = frozenset(i for i in range(len(names)) if i not in bg)
        return cls(names, frozenset(names.index(n) for n in anomalous), roi, bg)


def strip_steel() -> ClassCatalog:
    """Six-class strip steel catalog: normal, four defect families, background."""
    return ClassCatalog.from_names(
        ["normal", "rolled_in_scale", "inclusion", "scratch", "patch", "background"],
        anomalous=["rolled_in_scale", "inclusion", "scratch", "patch"],
        background=["background"],
    )


def painted_steel() -> ClassCatalog:
    """Seven-class painted steel (bridge inspection) catalog."""
    return ClassCatalog.from_names(
        [
            "normal_paint",
            "corrosion",
            "concrete",
            "mixed_concrete_background",
            "mixed_concrete_paint",
            "dark",
            "background",
        ],
        anomalous=["corrosion"],
        background=["background"],
    )


CATALOGS = {"strip_steel": strip_steel, "painted_steel": painted_steel}


def catalog_by_name(name: str) -> ClassCatalog:
    if name not in CATALOGS:
        raise ConfigError(f"Unknown catalog {name!r}; choose from {sorted(CATALOGS)}")
    return CATALOGS[name]()
