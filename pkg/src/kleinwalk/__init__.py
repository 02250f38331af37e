"""kleinwalk: Kleinian group random walks and boundary measures."""

from .errors import (
    ConfigError,
    DomainError,
    KleinwalkError,
    RangeError,
    UnsupportedGroupError,
)
from .moebius import AnalysisParams, MoebiusMap
from .groups import GroupSpec, OrbitTable, Word, load_preset

__all__ = [
    "AnalysisParams",
    "ConfigError",
    "DomainError",
    "GroupSpec",
    "KleinwalkError",
    "MoebiusMap",
    "OrbitTable",
    "RangeError",
    "UnsupportedGroupError",
    "Word",
    "load_preset",
]
