"""Error metrics, per-measure reports and the hybrid-versus-direct KPI comparison."""

from __future__ import annotations

import csv
import math
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .analytic import LOSS_NAMES
from .dataset import Dataset
from .errors import ConfigurationError
from .physics.kpi import KPI_NAMES, KPI_UNITS, postprocess
from .surrogate.training import (TrainConfig, predict_arrays, predict_kpis, train_direct, train_hybrid)

DEFAULT_FRACTIONS = (0.05, 0.10, 0.25, 0.50, 0.75, 1.00)
MRE_EPS = 1e-9


class PccUndefinedWarning(RuntimeWarning):
    """Correlation requested for a constant series."""


def mre(pred, truth, eps: float = MRE_EPS) -> float:
    """Mean relative error in percent over samples with |truth| >= eps (NaN if none qualify)."""
    pred = np.asarray(pred, dtype=np.float64).ravel()
    truth = np.asarray(truth, dtype=np.float64).ravel()
    keep = np.abs(truth) >= eps
    if not keep.any():
        return math.nan
    return float(np.mean(np.abs(pred[keep] - truth[keep]) / np.abs(truth[keep])) * 100.0)


def mre_excluded(truth, eps: float = MRE_EPS) -> int:
    return int(np.count_nonzero(np.abs(np.asarray(truth, dtype=np.float64)) < eps))


def mae(pred, truth, step_axis: int | None = None) -> float:
    """Mean absolute error.

    With ``step_axis`` the absolute error is first averaged over the time
    steps of each waveform, then over waveforms.
    """
    err = np.abs(np.asarray(pred, dtype=np.float64) - np.asarray(truth, dtype=np.float64))
    if step_axis is not None:
        err = err.mean(axis=step_axis)
    return float(np.mean(err))


def pcc(pred, truth) -> float:
    """Pearson correlation; NaN with ``PccUndefinedWarning`` when either series is constant."""
    x = np.asarray(pred, dtype=np.float64).ravel()
    y = np.asarray(truth, dtype=np.float64).ravel()
    xc = x - x.mean()
    yc = y - y.mean()
    sx = np.max(np.abs(xc)) if xc.size else 0.0
    sy = np.max(np.abs(yc)) if yc.size else 0.0
    if sx == 0.0 or sy == 0.0 or x.size < 2:
        warnings.warn("correlation undefined for a constant series", PccUndefinedWarning, stacklevel=2)
        return math.nan
    xc = xc / sx
    yc = yc / sy
    r = float(np.dot(xc, yc) / math.sqrt(float(np.dot(xc, xc)) * float(np.dot(yc, yc))))
    return min(1.0, max(-1.0, r))


@dataclass(frozen=True)
class MetricReport:
    quantity: str
    mre: float  # percent
    mae: float  # native units
    pcc: float
    count: int
    excluded: int
    pcc_defined: bool

    def to_dict(self) -> dict:
        return {"quantity": self.quantity, "mre_percent": self.mre, "mae": self.mae, "pcc": self.pcc,
                "count": self.count, "excluded": self.excluded, "pcc_defined": self.pcc_defined}


def metric_report(quantity: str, pred, truth, step_axis: int | None = None, eps: float = MRE_EPS,
                  step_means: bool = True) -> MetricReport:
    """MAE as documented in ``mae``; MRE and PCC on per-waveform step means.

    ``step_means=False`` computes MRE and PCC over the individual steps
    instead, for zero-mean waveforms such as coil flux linkages.
    """
    p = np.asarray(pred, dtype=np.float64)
    t = np.asarray(truth, dtype=np.float64)
    reduce = step_axis is not None and step_means
    pm = p.mean(axis=step_axis) if reduce else p
    tm = t.mean(axis=step_axis) if reduce else t
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", PccUndefinedWarning)
        r = pcc(pm, tm)
    return MetricReport(quantity, mre(pm, tm, eps), mae(p, t, step_axis), r, int(tm.size),
                        mre_excluded(tm, eps), not math.isnan(r))


def evaluate_measures(net, ds: Dataset, indices=None) -> list[MetricReport]:
    """Per intermediate measure on the given designs (test split by default)."""
    idx = ds.split["test"] if indices is None else np.asarray(indices)
    torque, flux, losses = predict_arrays(net, ds.params[idx], ds.grid)
    reports = [metric_report("torque", torque, ds.torque[idx], step_axis=-1)]
    for k in range(3):
        reports.append(metric_report(f"flux{k + 1}", flux[:, :, k], ds.flux[idx][:, :, k], step_axis=-1,
                                     step_means=False))
    for k, name in enumerate(LOSS_NAMES):
        reports.append(metric_report(name, losses[..., k], ds.losses[idx][..., k]))
    return reports


def write_reports_csv(path, reports) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    rows = [r.to_dict() for r in reports]
    with path.open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in r.items()})


# KPI comparison

def classical_kpis(ds: Dataset, indices=None, speeds=None) -> np.ndarray:
    """Reference KPIs (n, 7) from the stored forward-model measures."""
    idx = np.arange(len(ds)) if indices is None else np.asarray(indices)
    return np.stack([postprocess(ds.design(i), ds.system, ds.torque[i], ds.flux[i], ds.losses[i], ds.grid,
                                 speeds, ds.model).kpis.as_array() for i in idx])


def hybrid_kpis(net, ds: Dataset, indices, speeds=None) -> np.ndarray:
    """KPIs from predicted measures pushed through the same post-processing."""
    idx = np.asarray(indices)
    torque, flux, losses = predict_arrays(net, ds.params[idx], ds.grid)
    return np.stack([postprocess(ds.design(i), ds.system, torque[n], flux[n], losses[n], ds.grid,
                                 speeds, ds.model).kpis.as_array() for n, i in enumerate(idx)])


def kpi_metrics(pred: np.ndarray, truth: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-KPI (MRE %, PCC) over designs."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", PccUndefinedWarning)
        m = np.array([mre(pred[:, k], truth[:, k]) for k in range(truth.shape[1])])
        r = np.array([pcc(pred[:, k], truth[:, k]) for k in range(truth.shape[1])])
    return m, r


def fraction_subset(train_idx, fraction: float, seed: int) -> np.ndarray:
    """Nested subsets: the first ceil(fraction * n) of one seeded permutation."""
    if not 0.0 < fraction <= 1.0:
        raise ConfigurationError(f"fraction {fraction} outside (0, 1]")
    train_idx = np.asarray(train_idx)
    k = math.ceil(fraction * len(train_idx) - 1e-9)
    if k < 2:
        raise ConfigurationError(f"fraction {fraction} leaves {k} training designs; need at least 2")
    perm = np.random.default_rng(seed).permutation(len(train_idx))
    return np.sort(train_idx[perm[:k]])


@dataclass
class ComparisonResult:
    fractions: tuple[float, ...]
    kpi_names: tuple[str, ...]
    mre: dict[str, np.ndarray]  # approach -> (n_fractions, 7), percent
    pcc: dict[str, np.ndarray]
    n_train: list[int]
    seconds: list[float]
    seed: int
    predictions: dict = field(default_factory=dict)  # (approach, fraction) -> (n_test, 7)
    truth: np.ndarray | None = None
    nets: dict = field(default_factory=dict)  # (approach, fraction) -> trained SurrogateNet
    train_seconds: dict = field(default_factory=dict)  # (approach, fraction) -> fit wall time

    def rows(self):
        for fi, f in enumerate(self.fractions):
            for approach in ("hybrid", "direct"):
                for k, name in enumerate(self.kpi_names):
                    yield name, f, approach, float(self.mre[approach][fi, k]), float(self.pcc[approach][fi, k])

    def write_csv(self, path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["kpi", "fraction", "approach", "mre", "pcc"])
            for name, f, a, m, r in self.rows():
                w.writerow([name, repr(f), a, repr(m), repr(r)])

    def summary(self) -> dict:
        return {
            "seed": self.seed,
            "fractions": list(self.fractions),
            "n_train": self.n_train,
            "seconds": self.seconds,
            "units": {"mre": "percent", **{k: KPI_UNITS[k] for k in self.kpi_names}},
            "mre": {a: {k: self.mre[a][:, j].tolist() for j, k in enumerate(self.kpi_names)} for a in self.mre},
            "pcc": {a: {k: self.pcc[a][:, j].tolist() for j, k in enumerate(self.kpi_names)} for a in self.pcc},
        }


def compare(ds: Dataset, config: TrainConfig, fractions=DEFAULT_FRACTIONS, preset: str = "desk",
            speeds=None, truth: np.ndarray | None = None, log=None) -> ComparisonResult:
    """Train both approaches on nested training subsets and score KPIs on the test split.

    ``truth`` optionally supplies precomputed classical KPIs for every design.
    """
    fractions = tuple(float(f) for f in fractions)
    subsets = [fraction_subset(ds.split["train"], f, config.seed) for f in fractions]
    truth = classical_kpis(ds, speeds=speeds) if truth is None else np.asarray(truth)
    test = ds.split["test"]
    out = {"hybrid": [], "direct": []}
    corr = {"hybrid": [], "direct": []}
    preds = {}
    nets = {}
    fit_seconds = {}
    seconds = []
    for f, sub in zip(fractions, subsets):
        t0 = time.perf_counter()
        hyb = train_hybrid(ds, config, preset, train_idx=sub)
        t1 = time.perf_counter()
        z_h = hybrid_kpis(hyb.net, ds, test, speeds)
        t2 = time.perf_counter()
        dire = train_direct(ds.params, truth, ds.split, config, preset, train_idx=sub)
        fit_seconds[("hybrid", f)] = t1 - t0
        fit_seconds[("direct", f)] = time.perf_counter() - t2
        nets[("hybrid", f)] = hyb.net
        nets[("direct", f)] = dire.net
        z_d = predict_kpis(dire.net, ds.params[test])
        for name, z in (("hybrid", z_h), ("direct", z_d)):
            m, r = kpi_metrics(z, truth[test])
            out[name].append(m)
            corr[name].append(r)
            preds[(name, f)] = z
        seconds.append(time.perf_counter() - t0)
        if log is not None:
            log(f"fraction {f:g}: {len(sub)} designs, {seconds[-1]:.1f} s")
    return ComparisonResult(fractions, KPI_NAMES, {k: np.array(v) for k, v in out.items()},
                            {k: np.array(v) for k, v in corr.items()}, [len(s) for s in subsets], seconds,
                            config.seed, preds, truth[test], nets, fit_seconds)
