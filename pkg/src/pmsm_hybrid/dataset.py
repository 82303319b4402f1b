"""Design sampling, operating-point grid, dataset generation and persistence."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.stats import qmc

from . import _binio
from .analytic import (
    DEFAULT_INPUT_DIM,
    DEFAULT_RANGES,
    NAMED_FIELDS,
    NUISANCE_RANGE,
    DesignParams,
    IntermediateMeasures,
    MachineModel,
    OperatingPoint,
    SystemParams,
    parameter_names,
    simulate_many,
)
from .errors import ConfigurationError, FormatError, ModelError

MAGIC = b"PMSMDS\x00\x01"
SCHEMA_VERSION = 1

DEFAULT_N_AMPLITUDES = 4
DEFAULT_N_ANGLES = 9
DEFAULT_N_STEPS = 15


@dataclass(frozen=True)
class OperatingPointGrid:
    """Zero-current point followed by an amplitude-major (I, alpha) lattice."""

    points: tuple[OperatingPoint, ...]

    def __post_init__(self):
        pts = self.points
        zeros = [p for p in pts if p.current == 0.0]
        if len(zeros) != 1 or pts[0].current != 0.0:
            raise ConfigurationError("grid needs exactly one zero-current point, placed first")
        amps, angles = self.amplitudes, self.angles
        if len(amps) * len(angles) != len(pts) - 1:
            raise ConfigurationError("non-zero points do not form an amplitude x angle lattice")
        for k, p in enumerate(pts[1:]):
            if p.current != amps[k // len(angles)] or p.alpha != angles[k % len(angles)]:
                raise ConfigurationError("lattice points out of amplitude-major order")
        if angles[0] < 0.0 or angles[-1] > 180.0:
            raise ConfigurationError("angles must lie within [0, 180] degrees")

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    @property
    def amplitudes(self) -> tuple[float, ...]:
        return tuple(sorted({p.current for p in self.points[1:]}))

    @property
    def angles(self) -> tuple[float, ...]:
        return tuple(sorted({p.alpha for p in self.points[1:]}))

    @property
    def currents_array(self) -> np.ndarray:
        return np.array([p.current for p in self.points])

    @property
    def alphas_array(self) -> np.ndarray:
        return np.array([p.alpha for p in self.points])

    def to_dict(self) -> dict:
        return {"amplitudes": list(self.amplitudes), "angles": list(self.angles)}

    @classmethod
    def from_lattice(cls, amplitudes: Sequence[float], angles: Sequence[float]) -> "OperatingPointGrid":
        pts = [OperatingPoint(0.0, 0.0)]
        pts += [OperatingPoint(float(i), float(a)) for i in amplitudes for a in angles]
        return cls(tuple(pts))


def build_grid(max_current: float, n_amplitudes: int = DEFAULT_N_AMPLITUDES,
               n_angles: int = DEFAULT_N_ANGLES, n_op: int | None = None) -> OperatingPointGrid:
    """Zero-current point plus ``n_amplitudes x n_angles`` lattice.

    Amplitudes are linearly spaced in (0, max_current], angles in [0, 180].
    """
    if n_amplitudes < 1 or n_angles < 1:
        raise ConfigurationError("n_amplitudes and n_angles must be >= 1")
    if n_op is not None and 1 + n_amplitudes * n_angles != n_op:
        raise ConfigurationError(
            f"1 + {n_amplitudes} x {n_angles} = {1 + n_amplitudes * n_angles} != N_OP = {n_op}")
    if not max_current > 0:
        raise ConfigurationError("max_current must be > 0")
    amps = [max_current * k / n_amplitudes for k in range(1, n_amplitudes + 1)]
    amps[-1] = float(max_current)
    angles = [0.0] if n_angles == 1 else [180.0 * k / (n_angles - 1) for k in range(n_angles)]
    return OperatingPointGrid.from_lattice(amps, angles)


def full_ranges(ranges: Mapping[str, tuple[float, float]] | None, dim: int) -> list[tuple[float, float]]:
    ranges = dict(DEFAULT_RANGES if ranges is None else ranges)
    names = parameter_names(dim)
    out = []
    for name in names:
        lo, hi = ranges.get(name, NUISANCE_RANGE if name.startswith("nuisance_") else (None, None))
        if lo is None:
            raise ConfigurationError(f"no range configured for {name}")
        lo, hi = float(lo), float(hi)
        if not (math.isfinite(lo) and math.isfinite(hi)) or hi < lo:
            raise ConfigurationError(f"empty or invalid range for {name}: [{lo}, {hi}]")
        out.append((lo, hi))
    return out


def sample_designs(n: int, ranges: Mapping[str, tuple[float, float]] | None = None, seed: int = 0,
                   dim: int = DEFAULT_INPUT_DIM) -> list[DesignParams]:
    """Latin-hypercube sample of ``n`` designs; every field gets one value per stratum."""
    if n < 1:
        raise ConfigurationError("n must be >= 1")
    bounds = np.array(full_ranges(ranges, dim))
    unit = qmc.LatinHypercube(d=dim, rng=np.random.default_rng(seed)).random(n)
    lo, hi = bounds[:, 0], bounds[:, 1]
    values = lo + unit * (hi - lo)
    values = np.clip(values, lo, hi)
    return [DesignParams.from_vector(row) for row in values]


def split_counts(n: int) -> tuple[int, int, int]:
    """(train, val, test) sizes: ~90/5/5 with rounding toward test.

    Reproduces 40390/2243/2244 for 44877 designs.
    """
    if n < 3:
        raise ConfigurationError("need at least 3 designs to split")
    n_val = max(1, math.floor(0.05 * n))
    n_train = min(math.ceil(0.9 * n), n - n_val - 1)
    return n_train, n_val, n - n_train - n_val


def make_split(n: int, seed: int) -> dict[str, np.ndarray]:
    n_train, n_val, _ = split_counts(n)
    perm = np.random.default_rng(seed).permutation(n)
    return {
        "train": np.sort(perm[:n_train]),
        "val": np.sort(perm[n_train:n_train + n_val]),
        "test": np.sort(perm[n_train + n_val:]),
    }


@dataclass(eq=False)
class Dataset:
    """Designs and their per-OP measures, stored as dense arrays.

    params: (n, d); torque: (n, n_op, T); flux: (n, n_op, 3, T); losses: (n, n_op, 4).
    """

    params: np.ndarray
    torque: np.ndarray
    flux: np.ndarray
    losses: np.ndarray
    system: SystemParams
    grid: OperatingPointGrid
    split: dict[str, np.ndarray]
    model: MachineModel = field(default_factory=MachineModel)
    ranges: dict[str, tuple[float, float]] = field(default_factory=lambda: dict(DEFAULT_RANGES))
    seed: int = 0

    def __len__(self):
        return self.params.shape[0]

    @property
    def dim(self) -> int:
        return self.params.shape[1]

    @property
    def n_steps(self) -> int:
        return self.torque.shape[2]

    @property
    def param_names(self) -> list[str]:
        return parameter_names(self.dim)

    def design(self, i: int) -> DesignParams:
        return DesignParams.from_vector(self.params[i])

    def measures(self, i: int, j: int) -> IntermediateMeasures:
        return IntermediateMeasures(self.torque[i, j], self.flux[i, j], self.losses[i, j])

    def design_measures(self, i: int) -> list[IntermediateMeasures]:
        return [self.measures(i, j) for j in range(len(self.grid))]

    def subset(self, indices) -> "Dataset":
        """Designs at ``indices``; the split is remapped and keeps its partition."""
        indices = np.asarray(indices, dtype=np.int64)
        pos = {int(k): n for n, k in enumerate(indices)}
        split = {name: np.array([pos[int(k)] for k in idx if int(k) in pos], dtype=np.int64)
                 for name, idx in self.split.items()}
        return Dataset(self.params[indices], self.torque[indices], self.flux[indices],
                       self.losses[indices], self.system, self.grid, split, self.model,
                       dict(self.ranges), self.seed)

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (all(np.array_equal(getattr(self, k), getattr(other, k))
                    for k in ("params", "torque", "flux", "losses"))
                and all(np.array_equal(self.split[k], other.split[k]) for k in ("train", "val", "test"))
                and self.system.to_dict() == other.system.to_dict()
                and self.grid == other.grid and self.model == other.model
                and {k: tuple(v) for k, v in self.ranges.items()} == {k: tuple(v) for k, v in other.ranges.items()}
                and self.seed == other.seed)


def _simulate_design(args):
    idx, vec, system, grid_points, n_steps, model, ranges = args
    try:
        return simulate_many(DesignParams.from_vector(vec), system, grid_points, n_steps, model, ranges)
    except Exception as exc:  # noqa: BLE001 - re-raised with the design index
        raise ModelError(idx, exc) from exc


def generate(n_designs: int, seed: int = 0, system: SystemParams | None = None,
             grid: OperatingPointGrid | None = None, model: MachineModel | None = None,
             ranges: Mapping[str, tuple[float, float]] | None = None, dim: int = DEFAULT_INPUT_DIM,
             n_steps: int = DEFAULT_N_STEPS, workers: int = 1) -> Dataset:
    system = system or SystemParams()
    grid = grid or build_grid(system.max_current)
    model = model or MachineModel(i_sat=system.max_current)
    ranges = dict(DEFAULT_RANGES if ranges is None else ranges)
    designs = sample_designs(n_designs, ranges, seed, dim)
    params = np.stack([d.to_vector() for d in designs])
    jobs = [(i, params[i], system, grid.points, n_steps, model, ranges) for i in range(n_designs)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_simulate_design, jobs, chunksize=16))
    else:
        results = [_simulate_design(j) for j in jobs]
    torque = np.stack([r[0] for r in results])
    flux = np.stack([r[1] for r in results])
    losses = np.stack([r[2] for r in results])
    split = make_split(n_designs, seed)
    return Dataset(params, torque, flux, losses, system, grid, split, model,
                   {k: tuple(v) for k, v in ranges.items()}, seed)


def to_bytes(ds: Dataset) -> bytes:
    meta = {
        "kind": "pmsm-dataset",
        "n_designs": len(ds),
        "dim": ds.dim,
        "n_op": len(ds.grid),
        "n_steps": ds.n_steps,
        "seed": ds.seed,
        "param_names": ds.param_names,
        "system": ds.system.to_dict(),
        "grid": ds.grid.to_dict(),
        "model": ds.model.to_dict(),
        "ranges": {k: list(v) for k, v in ds.ranges.items()},
    }
    arrays = {
        "params": ds.params,
        "torque": ds.torque,
        "flux": ds.flux,
        "losses": ds.losses,
        "split_train": ds.split["train"],
        "split_val": ds.split["val"],
        "split_test": ds.split["test"],
    }
    return _binio.dumps(MAGIC, SCHEMA_VERSION, meta, arrays)


def from_bytes(blob: bytes) -> Dataset:
    header, arrays = _binio.loads(blob, MAGIC, SCHEMA_VERSION)
    try:
        return Dataset(
            params=arrays["params"],
            torque=arrays["torque"],
            flux=arrays["flux"],
            losses=arrays["losses"],
            system=SystemParams.from_dict(header["system"]),
            grid=OperatingPointGrid.from_lattice(header["grid"]["amplitudes"], header["grid"]["angles"]),
            split={k: arrays[f"split_{k}"] for k in ("train", "val", "test")},
            model=MachineModel.from_dict(header["model"]),
            ranges={k: tuple(v) for k, v in header["ranges"].items()},
            seed=int(header["seed"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"inconsistent dataset header: {exc}") from None


def save(ds: Dataset, path) -> None:
    _binio.write(path, to_bytes(ds))


def load(path) -> Dataset:
    return from_bytes(_binio.read(path))
