"""Physics post-processing: measures to maps, curves, efficiency maps and KPIs."""

from .curves import CharacteristicCurves, LimitCurve, characteristic_curves, limit_curve
from .effmap import EfficiencyMap, efficiency_difference, efficiency_map
from .kpi import KPI_NAMES, KpiVector, PostResult, classical_postprocess, kpis, postprocess
from .maps import MAP_NAMES, DqMaps, build_maps, classical_maps, voltage_magnitude
from .transforms import park_transform

__all__ = [
    "CharacteristicCurves", "DqMaps", "EfficiencyMap", "KPI_NAMES", "KpiVector", "LimitCurve", "MAP_NAMES",
    "PostResult", "build_maps", "characteristic_curves", "classical_maps", "classical_postprocess",
    "efficiency_difference", "efficiency_map", "kpis", "limit_curve", "park_transform", "postprocess",
    "voltage_magnitude",
]
