"""Training loop, dataset-to-tensor plumbing and inference for both network kinds."""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Callable

import numpy as np

from ..analytic import DesignParams, IntermediateMeasures
from ..dataset import Dataset, OperatingPointGrid
from ..errors import ConfigurationError, NumericError, ShapeError, TrainingError
from .network import HYBRID_BRANCHES, LOSSES, SurrogateNet, build_net, total_loss
from .optim import OPTIMIZERS, Optimizer
from .presets import direct_preset, hybrid_preset


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 2.6e-4
    batch_size: int = 132
    max_epochs: int = 300
    patience: int = 10
    loss: str = "mae"
    optimizer: str = "adam"
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        for name in ("learning_rate", "batch_size", "max_epochs", "patience", "epsilon"):
            if not getattr(self, name) > 0:
                raise ConfigurationError(f"{name} must be > 0")
        if self.patience >= self.max_epochs:
            raise ConfigurationError("patience must be < max_epochs")
        if self.loss not in LOSSES:
            raise ConfigurationError(f"loss must be one of {LOSSES}")
        if self.optimizer not in OPTIMIZERS:
            raise ConfigurationError(f"optimizer must be one of {OPTIMIZERS}")
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise ConfigurationError("betas must lie in [0, 1)")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigurationError(f"unknown training keys: {sorted(unknown)}")
        return cls(**d)


@dataclass
class FitResult:
    net: SurrogateNet
    history: list[tuple[int, float, float]]  # (epoch, train_loss, val_loss)
    best_epoch: int
    stopped_early: bool


def fit(net: SurrogateNet, train: tuple, val: tuple, config: TrainConfig,
        on_epoch: Callable[[int, float, float], None] | None = None) -> FitResult:
    """Mini-batch training with early stopping on validation loss.

    ``train`` and ``val`` are ``(x, {branch: y})`` in raw units. Normalizers
    are fitted on ``train`` only. Returns a copy of the network holding the
    weights of the best validation epoch.
    """
    x_tr, y_tr = train
    x_va, y_va = val
    if len(x_tr) == 0 or len(x_va) == 0:
        raise ConfigurationError("train and validation sets must be non-empty")
    net = net.copy()
    net.fit_normalizers(x_tr, y_tr)
    xn_tr, yn_tr = net.normalize_inputs(x_tr), net.normalize_outputs(y_tr)
    xn_va, yn_va = net.normalize_inputs(x_va), net.normalize_outputs(y_va)
    opt = Optimizer(config.optimizer, net.params, config.learning_rate, config.beta1, config.beta2,
                    config.epsilon)
    rng = np.random.default_rng(config.seed)
    n = xn_tr.shape[0]
    history: list[tuple[int, float, float]] = []
    best_val = math.inf
    best_params = [p.copy() for p in net.params]
    best_epoch = 0
    since_best = 0
    stopped_early = False
    for epoch in range(1, config.max_epochs + 1):
        order = rng.permutation(n)
        seen = 0.0
        try:
            for s in range(0, n, config.batch_size):
                idx = order[s:s + config.batch_size]
                value, grads = net.backward(xn_tr[idx], {k: v[idx] for k, v in yn_tr.items()}, config.loss)
                opt.step(net.params, grads)
                seen += value * len(idx)
            val_loss = total_loss(config.loss, net.predict_normalized(xn_va), yn_va)
        except NumericError as exc:
            raise TrainingError(f"epoch {epoch}: {exc}", history) from exc
        train_loss = seen / n
        history.append((epoch, train_loss, val_loss))
        if on_epoch is not None:
            on_epoch(epoch, train_loss, val_loss)
        if not (math.isfinite(val_loss) and math.isfinite(train_loss)):
            raise TrainingError(f"epoch {epoch}: non-finite loss", history)
        if val_loss < best_val:
            best_val = val_loss
            best_params = [p.copy() for p in net.params]
            best_epoch = epoch
            since_best = 0
        else:
            since_best += 1
            if since_best >= config.patience:
                stopped_early = True
                break
    net.params = best_params
    return FitResult(net, history, best_epoch, stopped_early)


def write_history_csv(path, history) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["epoch", "train_loss", "val_loss"])
        for epoch, tr, va in history:
            w.writerow([epoch, repr(float(tr)), repr(float(va))])


# hybrid network: one sample per (design, OP)

def hybrid_inputs(params: np.ndarray, grid: OperatingPointGrid) -> np.ndarray:
    """Rows ``[p, I, alpha]`` ordered design-major, OP-minor."""
    params = np.atleast_2d(np.asarray(params, dtype=np.float64))
    n, n_op = params.shape[0], len(grid)
    ops = np.column_stack([grid.currents_array, grid.alphas_array])
    return np.concatenate([np.repeat(params, n_op, axis=0), np.tile(ops, (n, 1))], axis=1)


def hybrid_targets(ds: Dataset, indices) -> dict[str, np.ndarray]:
    idx = np.asarray(indices, dtype=np.int64)
    n_steps = ds.n_steps
    out = {"loss": ds.losses[idx].reshape(-1, 4), "torque": ds.torque[idx].reshape(-1, n_steps)}
    for k in range(3):
        out[f"flux{k + 1}"] = ds.flux[idx][:, :, k, :].reshape(-1, n_steps)
    return out


def hybrid_data(ds: Dataset, indices) -> tuple[np.ndarray, dict[str, np.ndarray]]:
    idx = np.asarray(indices, dtype=np.int64)
    return hybrid_inputs(ds.params[idx], ds.grid), hybrid_targets(ds, idx)


def build_hybrid_net(input_dim: int, preset: str = "desk", n_steps: int = 15, activation: str = "elu",
                     seed: int = 0) -> SurrogateNet:
    """Network over ``input_dim`` = design dimension + 2 (current, angle)."""
    return build_net(hybrid_preset(preset, input_dim, n_steps, activation), seed)


def train_hybrid(ds: Dataset, config: TrainConfig, preset: str = "desk", train_idx=None,
                 on_epoch=None) -> FitResult:
    train_idx = ds.split["train"] if train_idx is None else train_idx
    net = build_hybrid_net(ds.dim + 2, preset, ds.n_steps, seed=config.seed)
    return fit(net, hybrid_data(ds, train_idx), hybrid_data(ds, ds.split["val"]), config, on_epoch)


def predict_arrays(net: SurrogateNet, params, grid: OperatingPointGrid):
    """Predicted (torque, flux, losses) with shapes (n, n_op, T), (n, n_op, 3, T), (n, n_op, 4).

    Loss energies are clamped at zero.
    """
    params = np.atleast_2d(np.asarray(params, dtype=np.float64))
    if params.shape[1] + 2 != net.topology.input_dim:
        raise ShapeError(f"network expects {net.topology.input_dim - 2} design parameters, got {params.shape[1]}")
    n, n_op = params.shape[0], len(grid)
    y = net.predict(hybrid_inputs(params, grid))
    n_steps = y["torque"].shape[1]
    torque = y["torque"].reshape(n, n_op, n_steps)
    flux = np.stack([y[f"flux{k + 1}"].reshape(n, n_op, n_steps) for k in range(3)], axis=2)
    losses = np.maximum(y["loss"].reshape(n, n_op, 4), 0.0)
    return torque, flux, losses


def clamp_count(net: SurrogateNet, params, grid: OperatingPointGrid) -> int:
    """How many predicted loss energies would be negative before clamping."""
    y = net.predict(hybrid_inputs(params, grid))
    return int(np.count_nonzero(y["loss"] < 0.0))


def predict_measures(net: SurrogateNet, p: DesignParams, grid: OperatingPointGrid) -> list[IntermediateMeasures]:
    vec = p.to_vector()
    if vec.shape[0] + 2 != net.topology.input_dim:
        raise ShapeError(f"design vector has {vec.shape[0]} entries, network expects {net.topology.input_dim - 2}")
    torque, flux, losses = predict_arrays(net, vec[None, :], grid)
    return [IntermediateMeasures(torque[0, j], flux[0, j], losses[0, j]) for j in range(len(grid))]


# direct network: one sample per design

def build_direct_net(input_dim: int, n_kpis: int = 7, preset: str = "desk", activation: str = "elu",
                     seed: int = 0) -> SurrogateNet:
    return build_net(direct_preset(preset, input_dim, n_kpis, activation), seed)


def train_direct(params: np.ndarray, kpis: np.ndarray, split: dict, config: TrainConfig,
                 preset: str = "desk", train_idx=None, on_epoch=None) -> FitResult:
    """Fit design parameters -> KPI vectors with the shared training loop."""
    params = np.asarray(params, dtype=np.float64)
    kpis = np.asarray(kpis, dtype=np.float64)
    train_idx = split["train"] if train_idx is None else np.asarray(train_idx)
    net = build_direct_net(params.shape[1], kpis.shape[1], preset, seed=config.seed)
    val_idx = split["val"]
    return fit(net, (params[train_idx], {"kpi": kpis[train_idx]}),
               (params[val_idx], {"kpi": kpis[val_idx]}), config, on_epoch)


def predict_kpis(net: SurrogateNet, params) -> np.ndarray:
    return net.predict(np.atleast_2d(np.asarray(params, dtype=np.float64)))["kpi"]


__all__ = [
    "FitResult", "HYBRID_BRANCHES", "TrainConfig", "build_direct_net", "build_hybrid_net", "clamp_count", "fit",
    "hybrid_data", "hybrid_inputs", "hybrid_targets", "predict_arrays", "predict_kpis", "predict_measures",
    "train_direct", "train_hybrid", "write_history_csv",
]
