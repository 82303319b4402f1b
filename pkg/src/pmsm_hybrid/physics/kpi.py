"""KPI vector z1..z7 and the measures-to-KPIs pipeline."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..analytic import DEFAULT_RANGES, DesignParams, MachineModel, SystemParams, mass_and_cost, simulate_many
from ..dataset import OperatingPointGrid
from .curves import LimitCurve, limit_curve
from .maps import DqMaps, build_maps

KPI_NAMES = ("z1", "z2", "z3", "z4", "z5", "z6", "z7")
KPI_UNITS = {"z1": "Nm", "z2": "W", "z3": "W", "z4": "Nm", "z5": "euro", "z6": "kg", "z7": "Nm"}
KPI_LABELS = {
    "z1": "max torque on limit curve",
    "z2": "max shaft power",
    "z3": "shaft power at max speed",
    "z4": "max torque ripple on limit curve",
    "z5": "material cost",
    "z6": "mass of active parts",
    "z7": "torque ripple deviation on limit curve",
}


@dataclass(frozen=True)
class KpiVector:
    z1: float
    z2: float
    z3: float
    z4: float
    z5: float
    z6: float
    z7: float

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, k) for k in KPI_NAMES])

    @classmethod
    def from_array(cls, values) -> "KpiVector":
        return cls(*(float(v) for v in values))

    def to_record(self) -> dict:
        return {k: {"value": getattr(self, k), "unit": KPI_UNITS[k], "label": KPI_LABELS[k]} for k in KPI_NAMES}


def kpis(maps: DqMaps, curve: LimitCurve, mass_cost: dict) -> KpiVector:
    """KPIs from a limit curve sampled up to max speed (last sample).

    Torque and power KPIs are floored at zero: a map whose best feasible
    torque is negative cannot deliver motor torque at all.
    """
    ok = curve.feasible
    ripple = curve.ripple[ok]
    return KpiVector(
        z1=max(0.0, float(curve.torque[ok].max())) if ok.any() else 0.0,
        z2=max(0.0, float(curve.shaft_power[ok].max())) if ok.any() else 0.0,
        z3=max(0.0, float(curve.shaft_power[-1])) if ok[-1] else 0.0,
        z4=float(ripple.max()) if ripple.size else 0.0,
        z5=float(mass_cost["total_cost"]),
        z6=float(mass_cost["total_mass"]),
        z7=float(ripple.std()) if ripple.size else 0.0,
    )


@dataclass(frozen=True, eq=False)
class PostResult:
    maps: DqMaps
    curve: LimitCurve
    kpis: KpiVector
    mass_cost: dict


def postprocess(p: DesignParams, s: SystemParams, torque, flux, losses, grid: OperatingPointGrid,
                speeds=None, model: MachineModel | None = None, resistance: float | None = None,
                ranges=DEFAULT_RANGES) -> PostResult:
    """Measures of one design (true or predicted) -> maps, limit curve, KPIs."""
    model = model or MachineModel(i_sat=s.max_current)
    maps = build_maps(torque, flux, losses, grid, pole_pairs=s.pole_pairs,
                      resistance=p.stator_resistance if resistance is None else resistance,
                      loss_reference_frequency=model.loss_reference_frequency)
    curve = limit_curve(maps, s, speeds)
    mc = mass_and_cost(p, s, ranges)
    return PostResult(maps, curve, kpis(maps, curve, mc), mc)


def classical_postprocess(p: DesignParams, s: SystemParams, grid: OperatingPointGrid, speeds=None,
                          model: MachineModel | None = None, n_steps: int = 15, resistance: float | None = None,
                          ranges=DEFAULT_RANGES) -> PostResult:
    """Forward model then post-processing: the reference path."""
    model = model or MachineModel(i_sat=s.max_current)
    torque, flux, losses = simulate_many(p, s, grid.points, n_steps, model, ranges)
    return postprocess(p, s, torque, flux, losses, grid, speeds, model, resistance, ranges)
