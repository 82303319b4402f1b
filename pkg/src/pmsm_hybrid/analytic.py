"""Analytical double-V PMSM forward model.

Stands in for a magneto-static FE solve: maps a design and an operating
point to the intermediate measures (torque waveform, three coil flux
linkages, four iron-loss energies per electrical period).

Closed forms
------------
Magnet air-gap flux density::

    B_g = B_r * h_m / (h_m + mu_r * g)

PM flux linkage (linear in remanence)::

    psi_pm = k_w * N * c_conc * B_g * (4 * w_m * l_stk)

Inductances (tau_p = pi * D / (2 * p) is the pole pitch)::

    L_md  = c_d * mu0 * (k_w N)^2 * l_stk * tau_p / (g + h_m / mu_r)
    L_sig = mu0 * (k_w N)^2 * l_stk * (0.5 + 0.03 * h_th[mm])
    L_d   = L_md + L_sig
    L_q   = L_md * (1 + saliency * (0.6 + 0.05 * (w_m[mm] - 8))) + L_sig

Current convention: i_d = -I sin(alpha), i_q = I cos(alpha). The d-axis flux
saturates with current, psi_d = (psi_pm + L_d i_d) / (1 + k_sat (I/I_sat)^2),
psi_q = L_q i_q. Mean torque is the unsaturated dq expression
1.5 p (psi_pm i_q + (L_d - L_q) i_d i_q); slot ripple adds harmonics 6 and 12
of the electrical angle with amplitudes proportional to I and 1/g.

Iron losses use the two-term Jordan split with a loss flux density

    B^2 = B_g^2 (psi_d,e^2 + psi_q^2 + c_a (L_d I)^2) / psi_pm^2

softly capped at B_sat, where psi_d,e uses |sin(alpha)| so the losses are
even in alpha and c_a weighs the tooth flux of the armature reaction, which
does not cancel against the magnet flux under field weakening::

    E_hyst = k_h * B^2 * m_iron
    E_eddy = k_e * B^2 * f_ref * m_iron

each split 60 % stator / 40 % rotor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from typing import Mapping

import numpy as np

from .errors import ParamRangeError

MU0 = 4e-7 * math.pi
MU_R_MAGNET = 1.05
WINDING_FACTOR = 0.933
FLUX_CONCENTRATION = 0.85
D_AXIS_COUPLING = 0.6
MAGNETS_PER_POLE = 4
SHAFT_RATIO = 0.35
SLOT_DEPTH_EXTRA = 20.0  # mm below the tooth head
YOKE_HEIGHT = 18.0  # mm
SLOT_FRACTION = 0.45
COPPER_FILL = 0.45
END_WINDING_FACTOR = 1.6

NAMED_FIELDS = (
    "air_gap",
    "magnet_height",
    "magnet_width",
    "tooth_head_height",
    "rotor_outer_diameter",
    "stack_length",
    "magnet_remanence",
    "lamination_loss_coeff_hyst",
    "lamination_loss_coeff_eddy",
    "winding_turns",
    "stator_resistance",
)

#: Default [min, max] per named field. The first five are the reference
#: geometry ranges; the rest are chosen to give a plausible traction machine.
DEFAULT_RANGES: dict[str, tuple[float, float]] = {
    "air_gap": (0.50, 2.00),  # mm
    "magnet_height": (2.23, 7.00),  # mm
    "magnet_width": (8.00, 25.00),  # mm
    "tooth_head_height": (12.00, 20.00),  # mm
    "rotor_outer_diameter": (159.00, 165.00),  # mm
    "stack_length": (120.0, 180.0),  # mm
    "magnet_remanence": (1.15, 1.35),  # T
    "lamination_loss_coeff_hyst": (0.015, 0.040),  # J / (T^2 kg) per period
    "lamination_loss_coeff_eddy": (2.0e-5, 8.0e-5),  # J / (T^2 Hz kg) per period
    "winding_turns": (6.0, 10.0),  # effective series turns per phase
    "stator_resistance": (0.004, 0.012),  # ohm
}

NUISANCE_RANGE = (0.0, 1.0)
DEFAULT_INPUT_DIM = 35

LOSS_NAMES = ("eddy_rotor", "eddy_stator", "hyst_rotor", "hyst_stator")
PARTS = ("stator_lamination", "rotor_lamination", "magnets", "copper")


@dataclass(frozen=True)
class DesignParams:
    """One machine design; lengths in mm.

    ``nuisance`` pads the parameter vector to the configured input dimension.
    The forward model never reads it.
    """

    air_gap: float
    magnet_height: float
    magnet_width: float
    tooth_head_height: float
    rotor_outer_diameter: float
    stack_length: float
    magnet_remanence: float
    lamination_loss_coeff_hyst: float
    lamination_loss_coeff_eddy: float
    winding_turns: float
    stator_resistance: float
    nuisance: tuple[float, ...] = ()

    @property
    def dim(self) -> int:
        return len(NAMED_FIELDS) + len(self.nuisance)

    def to_vector(self) -> np.ndarray:
        named = [getattr(self, name) for name in NAMED_FIELDS]
        return np.array(named + list(self.nuisance), dtype=np.float64)

    @classmethod
    def from_vector(cls, vec) -> "DesignParams":
        vec = [float(v) for v in vec]
        n = len(NAMED_FIELDS)
        if len(vec) < n:
            raise ValueError(f"need at least {n} entries, got {len(vec)}")
        return cls(*vec[:n], nuisance=tuple(vec[n:]))

    @classmethod
    def midrange(cls, ranges: Mapping[str, tuple[float, float]] = DEFAULT_RANGES,
                 dim: int = DEFAULT_INPUT_DIM) -> "DesignParams":
        named = [0.5 * (ranges[k][0] + ranges[k][1]) for k in NAMED_FIELDS]
        pad = (0.5 * (NUISANCE_RANGE[0] + NUISANCE_RANGE[1]),) * (dim - len(NAMED_FIELDS))
        return cls(*named, nuisance=pad)

    def replace(self, **changes) -> "DesignParams":
        return replace(self, **changes)


def parameter_names(dim: int = DEFAULT_INPUT_DIM) -> list[str]:
    """Names of the entries of ``DesignParams.to_vector`` for a given dimension."""
    if dim < len(NAMED_FIELDS):
        raise ValueError(f"dim must be >= {len(NAMED_FIELDS)}")
    return list(NAMED_FIELDS) + [f"nuisance_{i:02d}" for i in range(dim - len(NAMED_FIELDS))]


@dataclass(frozen=True)
class SystemParams:
    dc_voltage: float = 640.0
    pole_pairs: int = 4
    slots_per_pole_per_phase: int = 2
    max_current: float = 1336.40
    max_speed: float = 20000.0
    material_unit_prices: Mapping[str, float] = field(default_factory=lambda: {
        "stator_lamination": 2.0,
        "rotor_lamination": 2.0,
        "magnets": 85.0,
        "copper": 9.5,
    })
    material_densities: Mapping[str, float] = field(default_factory=lambda: {
        "stator_lamination": 7650.0,
        "rotor_lamination": 7650.0,
        "magnets": 7500.0,
        "copper": 8900.0,
    })

    def __post_init__(self):
        for name in ("dc_voltage", "max_current", "max_speed"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        for name in ("pole_pairs", "slots_per_pole_per_phase"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ValueError(f"{name} must be an integer >= 1")
        for part in PARTS:
            if self.material_densities.get(part, 0.0) <= 0:
                raise ValueError(f"density for {part} must be > 0")
            if self.material_unit_prices.get(part, -1.0) < 0:
                raise ValueError(f"unit price for {part} must be >= 0")

    def to_dict(self) -> dict:
        out = {f.name: getattr(self, f.name) for f in fields(self)}
        out["material_unit_prices"] = dict(self.material_unit_prices)
        out["material_densities"] = dict(self.material_densities)
        return out

    @classmethod
    def from_dict(cls, d: Mapping) -> "SystemParams":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown system parameters: {sorted(unknown)}")
        return cls(**d)


@dataclass(frozen=True)
class MachineModel:
    """Knobs of the synthetic model that are not design parameters.

    ``saliency=0`` gives a surface-type machine (L_q == L_d); ``ripple=0``
    switches the slot harmonics off.
    """

    k_sat: float = 0.15
    i_sat: float = 1336.40
    saliency: float = 1.0
    ripple: float = 1.0
    stator_loss_fraction: float = 0.6
    loss_reference_frequency: float = 200.0  # Hz
    b_sat: float = 2.0  # T
    armature_loss_weight: float = 0.25
    ripple_orders: tuple[int, int] = (6, 12)

    def to_dict(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d["ripple_orders"] = list(self.ripple_orders)
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> "MachineModel":
        d = dict(d)
        if "ripple_orders" in d:
            d["ripple_orders"] = tuple(d["ripple_orders"])
        return cls(**d)


@dataclass(frozen=True)
class OperatingPoint:
    current: float
    alpha: float  # degrees

    def validate(self, max_current: float) -> None:
        if not 0.0 <= self.current <= max_current:
            raise ValueError(f"current {self.current} outside [0, {max_current}]")
        if not 0.0 <= self.alpha < 360.0:
            raise ValueError(f"alpha {self.alpha} outside [0, 360)")


@dataclass(frozen=True, eq=False)
class IntermediateMeasures:
    """Per-OP outputs; losses ordered as ``LOSS_NAMES`` in J per period."""

    torque: np.ndarray  # (n_steps,)
    flux: np.ndarray  # (3, n_steps)
    losses: np.ndarray  # (4,)

    @property
    def n_steps(self) -> int:
        return self.torque.shape[0]

    def loss(self, name: str) -> float:
        return float(self.losses[LOSS_NAMES.index(name)])

    def __eq__(self, other):
        if not isinstance(other, IntermediateMeasures):
            return NotImplemented
        return (np.array_equal(self.torque, other.torque)
                and np.array_equal(self.flux, other.flux)
                and np.array_equal(self.losses, other.losses))


@dataclass(frozen=True)
class LumpedParams:
    psi_pm: float  # Wb
    L_d: float  # H
    L_q: float  # H
    ripple_harmonics: tuple[tuple[int, float], ...]  # (order, Nm per A)
    b_gap: float  # T


def check_ranges(p: DesignParams, ranges: Mapping[str, tuple[float, float]] = DEFAULT_RANGES) -> None:
    for name in NAMED_FIELDS:
        lo, hi = ranges[name]
        v = getattr(p, name)
        if not (lo <= v <= hi) or not math.isfinite(v):
            raise ParamRangeError(name, v, lo, hi)


def derive_lumped_parameters(p: DesignParams, s: SystemParams,
                             model: MachineModel = MachineModel(),
                             ranges: Mapping[str, tuple[float, float]] = DEFAULT_RANGES) -> LumpedParams:
    check_ranges(p, ranges)
    g = p.air_gap * 1e-3
    hm = p.magnet_height * 1e-3
    wm = p.magnet_width * 1e-3
    length = p.stack_length * 1e-3
    diameter = p.rotor_outer_diameter * 1e-3
    turns = WINDING_FACTOR * p.winding_turns

    b_gap = p.magnet_remanence * hm / (hm + MU_R_MAGNET * g)
    psi_pm = turns * FLUX_CONCENTRATION * b_gap * (MAGNETS_PER_POLE * wm * length)

    pole_pitch = math.pi * diameter / (2 * s.pole_pairs)
    base = MU0 * turns**2 * length
    l_md = D_AXIS_COUPLING * base * pole_pitch / (g + hm / MU_R_MAGNET)
    l_sigma = base * (0.5 + 0.03 * p.tooth_head_height)
    saliency = model.saliency * (0.6 + 0.05 * (p.magnet_width - 8.0))
    l_d = l_md + l_sigma
    l_q = l_md * (1.0 + saliency) + l_sigma

    torque_per_amp = 1.5 * s.pole_pairs * psi_pm / p.air_gap  # air gap in mm, 1 mm reference
    dh = p.tooth_head_height - 16.0
    a6 = model.ripple * 0.03 * torque_per_amp * (1.0 + 0.04 * dh)
    a12 = model.ripple * 0.012 * torque_per_amp * (1.0 - 0.03 * dh)
    o1, o2 = model.ripple_orders
    return LumpedParams(psi_pm, l_d, l_q, ((o1, a6), (o2, a12)), b_gap)


def electrical_angles(n_steps: int) -> np.ndarray:
    """Sample angles of one electrical period, endpoint excluded."""
    return 2.0 * np.pi * np.arange(n_steps) / n_steps


def dq_currents(current, alpha_deg):
    a = np.deg2rad(alpha_deg)
    return -current * np.sin(a), current * np.cos(a)


def mean_torque(lp: LumpedParams, pole_pairs: int, current, alpha_deg):
    """Closed-form dq torque (unsaturated)."""
    i_d, i_q = dq_currents(current, alpha_deg)
    return 1.5 * pole_pairs * (lp.psi_pm * i_q + (lp.L_d - lp.L_q) * i_d * i_q)


def saturation_factor(model: MachineModel, current):
    return 1.0 / (1.0 + model.k_sat * (np.asarray(current, dtype=float) / model.i_sat) ** 2)


def dq_flux(lp: LumpedParams, model: MachineModel, current, alpha_deg):
    i_d, i_q = dq_currents(current, alpha_deg)
    return (lp.psi_pm + lp.L_d * i_d) * saturation_factor(model, current), lp.L_q * i_q


def inverse_park(psi_d, psi_q, theta):
    """Coil flux waveforms from dq flux, coil 1 aligned with theta = 0.

    psi_d, psi_q broadcast against a trailing time axis ``theta``; returns an
    array with a coil axis of length 3 inserted before time.
    """
    psi_d = np.asarray(psi_d, dtype=float)[..., None, None]
    psi_q = np.asarray(psi_q, dtype=float)[..., None, None]
    shifted = theta[None, :] - (2.0 * np.pi / 3.0) * np.arange(3)[:, None]
    return psi_d * np.cos(shifted) - psi_q * np.sin(shifted)


def _simulate_arrays(p, s, currents, alphas, n_steps, model, ranges):
    """Vectorized core. Returns torque (n, T), flux (n, 3, T), losses (n, 4)."""
    if n_steps < 2:
        raise ValueError("n_steps must be >= 2")
    lp = derive_lumped_parameters(p, s, model, ranges)
    currents = np.asarray(currents, dtype=float)
    alphas = np.asarray(alphas, dtype=float)
    theta = electrical_angles(n_steps)
    a_rad = np.deg2rad(alphas)

    t_mean = mean_torque(lp, s.pole_pairs, currents, alphas)
    ripple = np.zeros((currents.shape[0], n_steps))
    phase_mult = (2.0, -1.0)
    for (order, amp), mult in zip(lp.ripple_harmonics, phase_mult):
        ripple += (amp * currents)[:, None] * np.cos(order * theta[None, :] + mult * a_rad[:, None])
    ripple -= ripple.mean(axis=1, keepdims=True)
    torque = t_mean[:, None] + ripple

    psi_d, psi_q = dq_flux(lp, model, currents, alphas)
    flux = inverse_park(psi_d, psi_q, theta)

    sat = saturation_factor(model, currents)
    psi_d_even = (lp.psi_pm - lp.L_d * currents * np.abs(np.sin(a_rad))) * sat
    armature = model.armature_loss_weight * (lp.L_d * currents) ** 2
    b2 = lp.b_gap**2 * (psi_d_even**2 + psi_q**2 + armature) / lp.psi_pm**2
    b2 = b2 / (1.0 + b2 / model.b_sat**2)
    iron = mass_and_cost(p, s, ranges)["mass_per_part"]
    m_iron = iron["stator_lamination"] + iron["rotor_lamination"]
    e_hyst = p.lamination_loss_coeff_hyst * b2 * m_iron
    e_eddy = p.lamination_loss_coeff_eddy * b2 * model.loss_reference_frequency * m_iron
    fs = model.stator_loss_fraction
    losses = np.stack([(1 - fs) * e_eddy, fs * e_eddy, (1 - fs) * e_hyst, fs * e_hyst], axis=1)
    return torque, flux, losses


def simulate(p: DesignParams, s: SystemParams, op: OperatingPoint, n_steps: int = 15,
             model: MachineModel = MachineModel(),
             ranges: Mapping[str, tuple[float, float]] = DEFAULT_RANGES) -> IntermediateMeasures:
    op.validate(s.max_current)
    torque, flux, losses = _simulate_arrays(p, s, [op.current], [op.alpha], n_steps, model, ranges)
    return IntermediateMeasures(torque[0], flux[0], losses[0])


def simulate_many(p: DesignParams, s: SystemParams, ops, n_steps: int = 15,
                  model: MachineModel = MachineModel(),
                  ranges: Mapping[str, tuple[float, float]] = DEFAULT_RANGES):
    """Simulate one design at many operating points.

    Returns ``(torque, flux, losses)`` arrays of shapes (n_op, n_steps),
    (n_op, 3, n_steps) and (n_op, 4).
    """
    for op in ops:
        op.validate(s.max_current)
    return _simulate_arrays(p, s, [op.current for op in ops], [op.alpha for op in ops],
                            n_steps, model, ranges)


def mass_and_cost(p: DesignParams, s: SystemParams,
                  ranges: Mapping[str, tuple[float, float]] = DEFAULT_RANGES) -> dict:
    """Active-part masses (kg) and material cost (euro).

    Geometry: annular rotor with a shaft bore of ``SHAFT_RATIO * D``, 4 * 2p
    rectangular magnets of w_m x h_m, annular stator whose slot ring
    (tooth head + 20 mm deep) is ``SLOT_FRACTION`` open and holds copper at
    ``COPPER_FILL``, with end windings adding ``END_WINDING_FACTOR - 1`` of
    the active length.
    """
    check_ranges(p, ranges)
    length = p.stack_length * 1e-3
    d_r = p.rotor_outer_diameter * 1e-3
    d_shaft = SHAFT_RATIO * d_r
    d_si = d_r + 2 * p.air_gap * 1e-3
    h_slot = (p.tooth_head_height + SLOT_DEPTH_EXTRA) * 1e-3
    d_slot = d_si + 2 * h_slot
    d_so = d_slot + 2 * YOKE_HEIGHT * 1e-3

    v_mag = MAGNETS_PER_POLE * 2 * s.pole_pairs * (p.magnet_width * 1e-3) * (p.magnet_height * 1e-3) * length
    v_rotor = math.pi / 4 * (d_r**2 - d_shaft**2) * length - v_mag
    v_slots = SLOT_FRACTION * math.pi / 4 * (d_slot**2 - d_si**2) * length
    v_stator = math.pi / 4 * (d_so**2 - d_si**2) * length - v_slots
    v_copper = COPPER_FILL * v_slots * END_WINDING_FACTOR

    volumes = {
        "stator_lamination": v_stator,
        "rotor_lamination": v_rotor,
        "magnets": v_mag,
        "copper": v_copper,
    }
    masses = {k: v * s.material_densities[k] for k, v in volumes.items()}
    total_mass = sum(masses[k] for k in PARTS)
    total_cost = sum(masses[k] * s.material_unit_prices[k] for k in PARTS)
    return {"mass_per_part": masses, "total_mass": total_mass, "total_cost": total_cost}
