"""Limit curve and speed characteristics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import kernels
from ..analytic import SystemParams
from .maps import DqMaps, electrical_speed, mechanical_speed, voltage_limit

DEFAULT_N_SPEEDS = 41
COARSE_POINTS = 61
REFINE_LEVELS = 3
REFINE_POINTS = 11


def default_speeds(s: SystemParams, n: int = DEFAULT_N_SPEEDS) -> np.ndarray:
    return np.linspace(0.0, s.max_speed, n)


@dataclass(frozen=True, eq=False)
class LimitCurve:
    """Maximum feasible mean torque per speed; infeasible speeds carry zeros."""

    speed: np.ndarray  # rpm
    torque: np.ndarray  # Nm
    shaft_power: np.ndarray  # W
    current: np.ndarray  # A
    alpha: np.ndarray  # deg
    ripple: np.ndarray  # Nm, peak-to-peak at the chosen OP
    feasible: np.ndarray  # bool

    COLUMNS = ("speed_rpm", "torque_nm", "shaft_power_w", "current_a", "alpha_deg", "ripple_nm", "feasible")

    def as_columns(self) -> np.ndarray:
        return np.column_stack([self.speed, self.torque, self.shaft_power, self.current,
                                self.alpha, self.ripple, self.feasible.astype(np.float64)])


def _candidates(axis_nodes, hi, n):
    return np.union1d(np.linspace(axis_nodes[0], hi, n), axis_nodes[axis_nodes <= hi])


def limit_curve(maps: DqMaps, s: SystemParams, speeds=None, coarse: int = COARSE_POINTS,
                levels: int = REFINE_LEVELS, npts: int = REFINE_POINTS) -> LimitCurve:
    """Per speed, the maximal mean torque subject to I <= max_current and |u| <= dc/sqrt(3).

    Coarse lattice of ``coarse x coarse`` points (plus the map nodes), then
    ``levels`` local refinements of ``npts x npts`` around the incumbent.
    """
    speeds = default_speeds(s) if speeds is None else np.asarray(speeds, dtype=np.float64)
    i_hi = min(s.max_current, maps.amps[-1])
    cand_i = _candidates(maps.amps, i_hi, coarse)
    cand_a = _candidates(maps.angles, maps.angles[-1], coarse)
    grid_i = np.repeat(cand_i, len(cand_a))
    grid_a = np.tile(cand_a, len(cand_i))
    step_i = (i_hi - maps.amps[0]) / (coarse - 1)
    step_a = (maps.angles[-1] - maps.angles[0]) / (coarse - 1)
    cur, alpha, torque, found = kernels.limit_search(
        maps.amps, maps.angles, maps.table("torque", "psi_d", "psi_q"), grid_i, grid_a,
        electrical_speed(speeds, maps.pole_pairs), maps.resistance, voltage_limit(s.dc_voltage),
        s.max_current, step_i, step_a, levels, npts)
    ripple = maps.evaluate(np.nan_to_num(cur), np.nan_to_num(alpha), ("torque_ripple",))["torque_ripple"]
    torque = np.where(found, torque, 0.0)
    return LimitCurve(
        speed=speeds,
        torque=torque,
        shaft_power=torque * mechanical_speed(speeds),
        current=np.where(found, cur, 0.0),
        alpha=np.where(found, alpha, 0.0),
        ripple=np.where(found, ripple, 0.0),
        feasible=found,
    )


@dataclass(frozen=True, eq=False)
class CharacteristicCurves:
    speed: np.ndarray
    max_torque: np.ndarray
    shaft_power: np.ndarray
    open_circuit_voltage: np.ndarray
    short_circuit_current: np.ndarray
    short_circuit_alpha: np.ndarray

    COLUMNS = ("speed_rpm", "max_torque_nm", "shaft_power_w", "open_circuit_voltage_v",
               "short_circuit_current_a", "short_circuit_alpha_deg")

    def as_columns(self) -> np.ndarray:
        return np.column_stack([self.speed, self.max_torque, self.shaft_power, self.open_circuit_voltage,
                                self.short_circuit_current, self.short_circuit_alpha])


def open_circuit_voltage(maps: DqMaps, speeds) -> np.ndarray:
    psi = np.hypot(maps["psi_d"][0, 0], maps["psi_q"][0, 0])
    return electrical_speed(speeds, maps.pole_pairs) * psi


def short_circuit_current(maps: DqMaps, speeds, i_max=None, n_scan: int = 91, iters_i: int = 60,
                          iters_a: int = 50):
    """(I, alpha) solving u_d = u_q = 0 per speed; NaN where no root lies in the map hull."""
    i_max = maps.amps[-1] if i_max is None else min(i_max, maps.amps[-1])
    return kernels.short_circuit(maps.amps, maps.angles, maps.table("psi_d", "psi_q"),
                                 electrical_speed(speeds, maps.pole_pairs), maps.resistance,
                                 i_max, n_scan, iters_i, iters_a)


def characteristic_curves(maps: DqMaps, s: SystemParams, speeds=None,
                          curve: LimitCurve | None = None) -> CharacteristicCurves:
    speeds = default_speeds(s) if speeds is None else np.asarray(speeds, dtype=np.float64)
    curve = curve if curve is not None and np.array_equal(curve.speed, speeds) else limit_curve(maps, s, speeds)
    i_sc, a_sc = short_circuit_current(maps, speeds)
    return CharacteristicCurves(speeds, curve.torque, curve.shaft_power,
                                open_circuit_voltage(maps, speeds), i_sc, a_sc)
