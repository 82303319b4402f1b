"""Named network sizes.

``paper`` keeps the depth, branch layout and relative widths of the large
reference network but scales every hidden width by ``WIDTH_SCALE`` so
the total parameter count is about 2.3 million. ``full-width`` uses the
unscaled widths (about 17.5 million parameters as dense layers).
"""

from __future__ import annotations

from ..errors import ConfigurationError
from .network import Branch, NetTopology, hybrid_topology

REFERENCE_COMMON = (1590, 1410, 810, 210)
REFERENCE_LOSS_TORQUE = (1530, 1210, 900, 880, 750, 660, 610, 580, 550, 530)
REFERENCE_FLUX = (322, 278, 240)
WIDTH_SCALE = 0.36


def _scaled(widths, k):
    return tuple(max(1, round(w * k)) for w in widths)


PRESETS = {
    "desk": ((64, 48, 32), (48, 32), (24, 16)),
    "paper": (_scaled(REFERENCE_COMMON, WIDTH_SCALE), _scaled(REFERENCE_LOSS_TORQUE, WIDTH_SCALE),
              _scaled(REFERENCE_FLUX, WIDTH_SCALE)),
    "full-width": (REFERENCE_COMMON, REFERENCE_LOSS_TORQUE, REFERENCE_FLUX),
}


def _lookup(preset: str):
    try:
        return PRESETS[preset]
    except KeyError:
        raise ConfigurationError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}") from None


def hybrid_preset(preset: str, input_dim: int, n_steps: int = 15, activation: str = "elu") -> NetTopology:
    common, lt, flux = _lookup(preset)
    return hybrid_topology(input_dim, common, lt, flux, n_steps, 4, activation)


def direct_preset(preset: str, input_dim: int, n_kpis: int = 7, activation: str = "elu") -> NetTopology:
    """Single trunk with one ``kpi`` head; the head reuses the loss/torque branch widths."""
    common, lt, _ = _lookup(preset)
    return NetTopology(input_dim, common, (Branch("kpi", lt, n_kpis),), activation)
