"""Loss-minimal efficiency map over the (speed, torque) plane, motor quadrant."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import kernels
from ..analytic import SystemParams
from .curves import LimitCurve, limit_curve
from .maps import DqMaps, electrical_speed, mechanical_speed, voltage_limit

ALPHA_STEP = 1.0  # deg between candidate rays
REFINE_LEVELS = 2
REFINE_POINTS = 11


@dataclass(frozen=True, eq=False)
class EfficiencyMap:
    """Cell arrays are (n_torque, n_speed). Infeasible cells hold NaN.

    ``approximate`` flags feasible cells where no loss-minimal OP delivering
    exactly the demanded torque was found; those fall back to the limit-curve
    OP at that speed.
    """

    speed: np.ndarray
    torque: np.ndarray
    efficiency: np.ndarray
    feasible: np.ndarray
    no_load: np.ndarray
    approximate: np.ndarray
    current: np.ndarray
    alpha: np.ndarray
    p_shaft: np.ndarray
    p_copper: np.ndarray
    p_hyst: np.ndarray
    p_eddy: np.ndarray

    @property
    def p_iron(self) -> np.ndarray:
        return self.p_hyst + self.p_eddy

    @property
    def p_in(self) -> np.ndarray:
        return self.p_shaft + self.p_copper + self.p_iron

    COLUMNS = ("speed_rpm", "torque_nm", "efficiency", "feasible", "no_load", "approximate",
               "current_a", "alpha_deg", "p_shaft_w", "p_copper_w", "p_hyst_w", "p_eddy_w")

    def as_rows(self) -> np.ndarray:
        sp, tq = np.meshgrid(self.speed, self.torque)
        cols = [sp, tq, self.efficiency, self.feasible, self.no_load, self.approximate, self.current,
                self.alpha, self.p_shaft, self.p_copper, self.p_hyst, self.p_eddy]
        return np.column_stack([np.asarray(c, dtype=np.float64).ravel() for c in cols])


def default_speed_axis(s: SystemParams, n: int = 40) -> np.ndarray:
    return np.linspace(s.max_speed / n, s.max_speed, n)


def default_torque_axis(curve: LimitCurve, n: int = 40) -> np.ndarray:
    return np.linspace(0.0, float(curve.torque.max()), n)


def efficiency_map(maps: DqMaps, s: SystemParams, speeds=None, torques=None,
                   curve: LimitCurve | None = None) -> EfficiencyMap:
    """Efficiency at the minimal-loss feasible OP of every (torque, speed) cell.

    A cell is infeasible exactly where its torque exceeds the limit curve at
    that speed. Iron power is E_hyst f_e + E_eddy f_e^2 / f_ref; copper
    power is 1.5 R I^2.
    """
    speeds = np.asarray(default_speed_axis(s) if speeds is None else speeds, dtype=np.float64)
    if curve is None or not np.array_equal(curve.speed, speeds):
        curve = limit_curve(maps, s, speeds)
    if torques is None:
        torques = default_torque_axis(curve)
    torques = np.asarray(torques, dtype=np.float64)

    shape = (len(torques), len(speeds))
    tq, sp_idx = np.meshgrid(torques, np.arange(len(speeds)), indexing="ij")
    feasible = curve.feasible[sp_idx] & (tq <= curve.torque[sp_idx]) & (tq >= 0.0)
    no_load = feasible & (tq == 0.0)
    loaded = feasible & ~no_load

    omega_e = electrical_speed(speeds, maps.pole_pairs)
    f_e = omega_e / (2.0 * np.pi)
    current = np.full(shape, np.nan)
    alpha = np.full(shape, np.nan)
    approximate = np.zeros(shape, dtype=bool)

    cells = np.nonzero(loaded)
    cand = np.union1d(np.arange(maps.angles[0], maps.angles[-1] + 0.5 * ALPHA_STEP, ALPHA_STEP), maps.angles)
    cand = cand[cand <= maps.angles[-1]]
    cur, alp, _, _, _, found = kernels.min_loss_search(
        maps.amps, maps.angles, _loss_table(maps), cand, tq[cells], omega_e[sp_idx[cells]], f_e[sp_idx[cells]],
        maps.resistance, voltage_limit(s.dc_voltage), maps.loss_reference_frequency,
        ALPHA_STEP, REFINE_LEVELS, REFINE_POINTS)
    fall = ~found
    cur = np.where(fall, curve.current[sp_idx[cells]], cur)
    alp = np.where(fall, curve.alpha[sp_idx[cells]], alp)
    current[cells] = cur
    alpha[cells] = alp
    approximate[cells] = fall
    current[no_load] = 0.0
    alpha[no_load] = 0.0

    f_cell = f_e[sp_idx]
    e_eddy, e_hyst = maps.iron_energy(np.where(feasible, current, 0.0), np.where(feasible, alpha, 0.0))
    p_copper = 1.5 * maps.resistance * current * current
    p_hyst = e_hyst * f_cell
    p_eddy = e_eddy * f_cell * f_cell / maps.loss_reference_frequency
    p_shaft = tq * mechanical_speed(speeds)[sp_idx]
    nan = np.where(feasible, 0.0, np.nan)
    p_copper, p_hyst, p_eddy, p_shaft = (x + nan for x in (p_copper, p_hyst, p_eddy, p_shaft))
    p_in = p_shaft + p_copper + p_hyst + p_eddy
    with np.errstate(invalid="ignore", divide="ignore"):
        eff = np.where(p_shaft > 0.0, p_shaft / np.where(p_in > 0.0, p_in, 1.0), 0.0)
    eff = eff + nan
    return EfficiencyMap(speeds, torques, eff, feasible, no_load, approximate, current, alpha,
                         p_shaft, p_copper, p_hyst, p_eddy)


def _loss_table(maps: DqMaps) -> np.ndarray:
    """(torque, psi_d, psi_q, total eddy energy, total hysteresis energy)."""
    return np.ascontiguousarray(np.stack([
        maps["torque"], maps["psi_d"], maps["psi_q"],
        maps["eddy_rotor"] + maps["eddy_stator"], maps["hyst_rotor"] + maps["hyst_stator"]]))


def efficiency_difference(a: EfficiencyMap, b: EfficiencyMap) -> tuple[np.ndarray, np.ndarray]:
    """|a - b| on cells feasible in both maps (0 elsewhere) and the mask of cells whose feasibility differs."""
    if a.efficiency.shape != b.efficiency.shape:
        raise ValueError("efficiency maps must share their axes")
    both = a.feasible & b.feasible
    diff = np.where(both, np.abs(np.where(both, a.efficiency, 0.0) - np.where(both, b.efficiency, 0.0)), 0.0)
    return diff, a.feasible != b.feasible
