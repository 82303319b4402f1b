"""Operating-point maps over the (I, alpha) lattice and the steady-state voltage."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .. import kernels
from ..analytic import DEFAULT_RANGES, MachineModel, electrical_angles, simulate_many
from ..dataset import OperatingPointGrid
from ..errors import ShapeError
from .transforms import dq_means

MAP_NAMES = ("torque", "psi_d", "psi_q", "torque_ripple",
             "eddy_rotor", "eddy_stator", "hyst_rotor", "hyst_stator")


@dataclass(frozen=True, eq=False)
class DqMaps:
    """Per-OP scalars on an amplitude x angle lattice.

    ``values[m, i, j]`` holds map ``MAP_NAMES[m]`` at ``amps[i]``,
    ``angles[j]``. Row 0 is the zero-current point replicated across angles.
    """

    amps: np.ndarray
    angles: np.ndarray
    values: np.ndarray
    pole_pairs: int
    resistance: float
    loss_reference_frequency: float

    def __getitem__(self, name: str) -> np.ndarray:
        return self.values[MAP_NAMES.index(name)]

    def table(self, *names: str) -> np.ndarray:
        idx = [MAP_NAMES.index(n) for n in names]
        return np.ascontiguousarray(self.values[idx])

    def evaluate(self, current, alpha, names=MAP_NAMES) -> dict[str, np.ndarray]:
        """Bilinear values at (current, alpha); alpha mirrored about 180 deg, queries clamped."""
        out = kernels.bilinear(self.amps, self.angles, self.table(*names),
                               np.asarray(current, dtype=np.float64), np.asarray(alpha, dtype=np.float64))
        return dict(zip(names, out))

    def iron_energy(self, current, alpha) -> tuple[np.ndarray, np.ndarray]:
        """(eddy, hysteresis) energy per electrical period."""
        v = self.evaluate(current, alpha, MAP_NAMES[4:])
        return v["eddy_rotor"] + v["eddy_stator"], v["hyst_rotor"] + v["hyst_stator"]


def build_maps(torque, flux, losses, grid: OperatingPointGrid, *, pole_pairs: int,
               resistance: float, loss_reference_frequency: float = MachineModel().loss_reference_frequency) -> DqMaps:
    """Reduce per-OP waveforms (n_op, T), (n_op, 3, T) and losses (n_op, 4) to maps."""
    torque = np.asarray(torque, dtype=np.float64)
    flux = np.asarray(flux, dtype=np.float64)
    losses = np.asarray(losses, dtype=np.float64)
    n_op = len(grid)
    if torque.ndim != 2 or torque.shape[0] != n_op:
        raise ShapeError(f"torque must be ({n_op}, T), got {torque.shape}")
    n_steps = torque.shape[1]
    if flux.shape != (n_op, 3, n_steps):
        raise ShapeError(f"flux must be ({n_op}, 3, {n_steps}), got {flux.shape}")
    if losses.shape != (n_op, 4):
        raise ShapeError(f"losses must be ({n_op}, 4), got {losses.shape}")

    psi_d, psi_q = dq_means(flux, electrical_angles(n_steps))
    per_op = np.column_stack([torque.mean(axis=1), psi_d, psi_q,
                              torque.max(axis=1) - torque.min(axis=1), losses])
    amps = np.array((0.0,) + grid.amplitudes)
    angles = np.array(grid.angles)
    na = len(angles)
    values = np.empty((len(MAP_NAMES), len(amps), na))
    values[:, 0, :] = per_op[0][:, None]
    lattice = per_op[1:].reshape(len(amps) - 1, na, len(MAP_NAMES))
    values[:, 1:, :] = lattice.transpose(2, 0, 1)
    return DqMaps(amps, angles, np.ascontiguousarray(values), int(pole_pairs), float(resistance),
                  float(loss_reference_frequency))


def electrical_speed(speed_rpm, pole_pairs: int):
    return 2.0 * np.pi * (np.asarray(speed_rpm, dtype=np.float64) / 60.0) * pole_pairs


def mechanical_speed(speed_rpm):
    return 2.0 * np.pi * np.asarray(speed_rpm, dtype=np.float64) / 60.0


def voltage_limit(dc_voltage: float) -> float:
    return dc_voltage / math.sqrt(3.0)


def voltage_components(maps: DqMaps, current, alpha, speed_rpm):
    v = maps.evaluate(current, alpha, ("psi_d", "psi_q"))
    a = np.deg2rad(np.asarray(alpha, dtype=np.float64))
    i_d = -np.asarray(current, dtype=np.float64) * np.sin(a)
    i_q = np.asarray(current, dtype=np.float64) * np.cos(a)
    omega = electrical_speed(speed_rpm, maps.pole_pairs)
    u_d = maps.resistance * i_d - omega * v["psi_q"]
    u_q = maps.resistance * i_q + omega * v["psi_d"]
    return u_d, u_q


def voltage_magnitude(maps: DqMaps, op, speed_rpm):
    """Phase voltage amplitude at operating point ``op`` and mechanical speed in rpm."""
    u_d, u_q = voltage_components(maps, op.current, op.alpha, speed_rpm)
    return np.sqrt(u_d * u_d + u_q * u_q)


def classical_maps(p, s, grid: OperatingPointGrid, model: MachineModel | None = None,
                   n_steps: int = 15, ranges=DEFAULT_RANGES) -> DqMaps:
    """Maps built from forward-model measures of one design."""
    model = model or MachineModel(i_sat=s.max_current)
    torque, flux, losses = simulate_many(p, s, grid.points, n_steps, model, ranges)
    return build_maps(torque, flux, losses, grid, pole_pairs=s.pole_pairs,
                      resistance=p.stator_resistance, loss_reference_frequency=model.loss_reference_frequency)
