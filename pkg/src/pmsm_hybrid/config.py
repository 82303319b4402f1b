"""Run configuration: TOML file + command-line overrides over built-in defaults."""

from __future__ import annotations

import copy
import json
import os
import sys
from dataclasses import fields
from pathlib import Path

from .analytic import MachineModel, SystemParams
from .errors import ConfigurationError
from .surrogate.presets import PRESETS
from .surrogate.training import TrainConfig

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

OUT_ENV = "PMSM_HYBRID_OUT"

DEFAULTS = {
    "seed": 0,
    "paths": {"out": "runs", "dataset": "", "hybrid_checkpoint": "", "direct_checkpoint": ""},
    "system": SystemParams().to_dict(),
    "model": MachineModel().to_dict(),
    "grid": {"n_amplitudes": 4, "n_angles": 9},
    "dataset": {"n_designs": 500, "dim": 35, "n_steps": 15, "workers": 1},
    "network": {"preset": "desk", "activation": "elu"},
    "train": {k: v for k, v in TrainConfig().to_dict().items() if k != "seed"},
    "curves": {"n_speeds": 41},
    "effmap": {"n_speed": 40, "n_torque": 40},
    "compare": {"fractions": [0.05, 0.10, 0.25, 0.50, 0.75, 1.00]},
    "plots": {"enabled": True},
}
# model.i_sat follows system.max_current unless set explicitly
DEFAULTS["model"]["i_sat"] = None


def _merge(base: dict, override: dict, where: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        path = f"{where}.{key}" if where else key
        if key not in base:
            raise ConfigurationError(f"unknown config key {path!r}")
        if isinstance(base[key], dict) and key not in ("material_unit_prices", "material_densities"):
            if not isinstance(value, dict):
                raise ConfigurationError(f"config key {path!r} must be a table")
            out[key] = _merge(base[key], value, path)
        else:
            out[key] = value
    return out


def load_file(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(str(path))
    try:
        with path.open("rb") as fh:
            return tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigurationError(f"{path}: {exc}") from None


def resolve(file_values: dict | None = None, overrides: dict | None = None) -> dict:
    """Defaults <- file <- overrides (flags). Unknown keys raise ``ConfigurationError``."""
    cfg = _merge(DEFAULTS, file_values or {})
    cfg = _merge(cfg, overrides or {})
    validate(cfg)
    return cfg


def validate(cfg: dict) -> None:
    if cfg["network"]["preset"] not in PRESETS:
        raise ConfigurationError(f"network.preset must be one of {sorted(PRESETS)}")
    try:
        system_params(cfg)
        machine_model(cfg)
        train_config(cfg)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigurationError):
            raise
        raise ConfigurationError(str(exc)) from None
    fr = cfg["compare"]["fractions"]
    if not fr or any(not 0.0 < float(f) <= 1.0 for f in fr):
        raise ConfigurationError("compare.fractions must be non-empty values in (0, 1]")


def system_params(cfg: dict) -> SystemParams:
    return SystemParams.from_dict(cfg["system"])


def machine_model(cfg: dict) -> MachineModel:
    m = dict(cfg["model"])
    if m.get("i_sat") is None:
        m["i_sat"] = float(cfg["system"]["max_current"])
    known = {f.name for f in fields(MachineModel)}
    return MachineModel.from_dict({k: v for k, v in m.items() if k in known})


def train_config(cfg: dict) -> TrainConfig:
    return TrainConfig.from_dict({**cfg["train"], "seed": int(cfg["seed"])})


def out_root(cfg: dict, flag: str | None) -> Path:
    """--out flag, then the config file, then the environment default, then ./runs."""
    if flag:
        return Path(flag)
    if cfg["paths"]["out"] != DEFAULTS["paths"]["out"]:
        return Path(cfg["paths"]["out"])
    return Path(os.environ.get(OUT_ENV, DEFAULTS["paths"]["out"]))


def dumps(cfg: dict) -> str:
    return json.dumps(cfg, indent=2, sort_keys=True) + "\n"
