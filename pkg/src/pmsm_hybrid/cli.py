"""Command-line entry point: generate, train, evaluate, kpi, effmap, compare.

Every command writes into a fresh run directory ``<out>/<command>-<timestamp>-seed<seed>``
holding the resolved configuration and all numeric outputs. Failures print one
JSON object to stderr and exit with a command-independent code.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import config as cfgmod
from . import dataset as dsmod
from . import plots
from .analytic import DesignParams, simulate_many
from .errors import ConfigurationError, ParamRangeError, PersistenceError, ShapeError
from .evaluation import classical_kpis, compare, evaluate_measures, hybrid_kpis, write_reports_csv
from .physics import characteristic_curves, efficiency_map, postprocess
from .physics.effmap import efficiency_difference
from .physics.export import write_curve_csv, write_effmap_csv, write_json, write_kpi_json, write_table_csv
from .physics.kpi import KPI_NAMES
from .surrogate import checkpoint
from .surrogate.training import predict_arrays, train_direct, train_hybrid, write_history_csv

EXIT_OK = 0
EXIT_OTHER = 1
EXIT_CONFIG = 2
EXIT_MISSING = 3
EXIT_FORMAT = 4


def _run_dir(cfg: dict, args, command: str) -> Path:
    root = cfgmod.out_root(cfg, args.out)
    stamp = datetime.now(timezone.utc).strftime("%Y%m%d-%H%M%S")
    base = root / f"{command}-{stamp}-seed{cfg['seed']}"
    path, k = base, 1
    while path.exists():
        path = base.with_name(f"{base.name}-{k}")
        k += 1
    path.mkdir(parents=True)
    (path / "config.json").write_text(cfgmod.dumps(cfg))
    return path


def _require(path_str: str, what: str) -> Path:
    if not path_str:
        raise ConfigurationError(f"no {what} given (flag or config paths)")
    path = Path(path_str)
    if not path.exists():
        raise FileNotFoundError(f"{what} not found: {path}")
    return path


def _log(msg: str) -> None:
    print(msg, file=sys.stderr)


def _design(ds, choice: str, design_file: str | None):
    """(DesignParams, index or None) from an index, 'midrange', or a JSON file of named values."""
    if design_file:
        values = json.loads(_require(design_file, "design file").read_text())
        base = DesignParams.midrange(dim=ds.dim if ds is not None else 35)
        try:
            return base.replace(**values), None
        except TypeError as exc:
            raise ConfigurationError(f"design file: {exc}") from None
    if choice == "midrange":
        return DesignParams.midrange(dim=ds.dim if ds is not None else 35), None
    if ds is None:
        raise ConfigurationError("a dataset is required to select a design by index")
    idx = int(ds.split["test"][0]) if choice == "first-test" else int(choice)
    if not 0 <= idx < len(ds):
        raise ConfigurationError(f"design index {idx} outside [0, {len(ds)})")
    return ds.design(idx), idx


def cmd_generate(cfg, args, run: Path) -> dict:
    d = cfg["dataset"]
    s = cfgmod.system_params(cfg)
    grid = dsmod.build_grid(s.max_current, cfg["grid"]["n_amplitudes"], cfg["grid"]["n_angles"])
    ds = dsmod.generate(int(d["n_designs"]), int(cfg["seed"]), s, grid, cfgmod.machine_model(cfg),
                        dim=int(d["dim"]), n_steps=int(d["n_steps"]), workers=int(d["workers"]))
    dsmod.save(ds, run / "dataset.bin")
    return {"dataset": str(run / "dataset.bin"), "n_designs": len(ds), "n_samples": len(ds) * len(grid)}


def cmd_train(cfg, args, run: Path) -> dict:
    ds = dsmod.load(_require(cfg["paths"]["dataset"], "dataset"))
    tc = cfgmod.train_config(cfg)
    preset = cfg["network"]["preset"]
    if args.mode == "hybrid":
        res = train_hybrid(ds, tc, preset)
    else:
        truth = classical_kpis(ds, speeds=_speeds(cfg, ds))
        write_table_csv(run / "kpis_classical.csv", KPI_NAMES, truth)
        res = train_direct(ds.params, truth, ds.split, tc, preset)
    ckpt = run / f"{args.mode}.ckpt"
    checkpoint.save(ckpt, res.net, kind=args.mode, config=tc.to_dict(), seed=tc.seed, epoch=res.best_epoch)
    write_history_csv(run / "history.csv", res.history)
    if cfg["plots"]["enabled"]:
        plots.training_curve(run / "history.svg", res.history, f"{args.mode} network")
    return {"checkpoint": str(ckpt), "best_epoch": res.best_epoch, "epochs": len(res.history),
            "n_params": res.net.n_params}


def _load_net(path_str: str, what: str, kind: str):
    net, meta = checkpoint.load(_require(path_str, what))
    if meta["kind"] != kind:
        raise ShapeError(f"{what} holds a {meta['kind']} network, expected {kind}")
    return net


def cmd_evaluate(cfg, args, run: Path) -> dict:
    ds = dsmod.load(_require(cfg["paths"]["dataset"], "dataset"))
    net = _load_net(cfg["paths"]["hybrid_checkpoint"], "hybrid checkpoint", "hybrid")
    reports = evaluate_measures(net, ds)
    write_reports_csv(run / "metrics.csv", reports)
    write_json(run / "metrics.json", {"split": "test", "reports": [r.to_dict() for r in reports]})
    return {"metrics": str(run / "metrics.csv")}


def _speeds(cfg, ds=None):
    s = cfgmod.system_params(cfg) if ds is None else ds.system
    return np.linspace(0.0, s.max_speed, int(cfg["curves"]["n_speeds"]))


def _measures(ds, cfg, p, idx):
    """Oracle measures for a design: stored ones when it comes from the dataset."""
    if ds is not None and idx is not None:
        return ds.torque[idx], ds.flux[idx], ds.losses[idx]
    s = ds.system if ds is not None else cfgmod.system_params(cfg)
    grid = ds.grid if ds is not None else dsmod.build_grid(s.max_current, cfg["grid"]["n_amplitudes"],
                                                           cfg["grid"]["n_angles"])
    return simulate_many(p, s, grid.points, int(cfg["dataset"]["n_steps"]), cfgmod.machine_model(cfg))


def _context(cfg):
    path = cfg["paths"]["dataset"]
    ds = dsmod.load(_require(path, "dataset")) if path else None
    s = ds.system if ds is not None else cfgmod.system_params(cfg)
    grid = ds.grid if ds is not None else dsmod.build_grid(s.max_current, cfg["grid"]["n_amplitudes"],
                                                           cfg["grid"]["n_angles"])
    model = ds.model if ds is not None else cfgmod.machine_model(cfg)
    return ds, s, grid, model


def cmd_kpi(cfg, args, run: Path) -> dict:
    ds, s, grid, model = _context(cfg)
    p, idx = _design(ds, args.design, args.design_file)
    speeds = _speeds(cfg, ds)
    out = {}
    variants = {"classical": _measures(ds, cfg, p, idx)}
    if cfg["paths"]["hybrid_checkpoint"]:
        net = _load_net(cfg["paths"]["hybrid_checkpoint"], "hybrid checkpoint", "hybrid")
        t, f, l_ = predict_arrays(net, p.to_vector()[None, :], grid)
        variants["hybrid"] = (t[0], f[0], l_[0])
    series = {}
    for name, (t, f, l_) in variants.items():
        res = postprocess(p, s, t, f, l_, grid, speeds, model)
        cc = characteristic_curves(res.maps, s, speeds, res.curve)
        write_kpi_json(run / f"kpis_{name}.json", res.kpis, design_index=idx, variant=name)
        write_curve_csv(run / f"limit_curve_{name}.csv", res.curve)
        write_table_csv(run / f"characteristics_{name}.csv", cc.COLUMNS, cc.as_columns())
        out[name] = {k: getattr(res.kpis, k) for k in KPI_NAMES}
        tag = "" if name == "classical" else " (pred)"
        series[f"torque [Nm]{tag}"] = cc.max_torque
        series[f"power [kW]{tag}"] = cc.shaft_power / 1e3
        series[f"open-circuit [V]{tag}"] = cc.open_circuit_voltage
        series[f"short-circuit [A]{tag}"] = cc.short_circuit_current
    if cfg["plots"]["enabled"]:
        plots.line_plot(run / "curves.svg", speeds, series, "speed (rpm)", "value", "characteristic curves")
    return out


def cmd_effmap(cfg, args, run: Path) -> dict:
    ds, s, grid, model = _context(cfg)
    p, idx = _design(ds, args.design, args.design_file)
    e = cfg["effmap"]
    speeds = np.linspace(s.max_speed / e["n_speed"], s.max_speed, int(e["n_speed"]))
    ref = postprocess(p, s, *_measures(ds, cfg, p, idx), grid, speeds, model)
    torques = np.linspace(0.0, float(ref.curve.torque.max()), int(e["n_torque"]))
    em_c = efficiency_map(ref.maps, s, speeds, torques, ref.curve)
    write_effmap_csv(run / "effmap_classical.csv", em_c)
    result = {"feasible_cells": int(em_c.feasible.sum()), "approximate_cells": int(em_c.approximate.sum())}
    if cfg["plots"]["enabled"]:
        plots.heatmap(run / "effmap_classical.svg", speeds, torques, em_c.efficiency, "speed (rpm)", "torque (Nm)",
                      "efficiency (reference)", 0.0, 1.0, "efficiency")
    if cfg["paths"]["hybrid_checkpoint"]:
        net = _load_net(cfg["paths"]["hybrid_checkpoint"], "hybrid checkpoint", "hybrid")
        t, f, l_ = predict_arrays(net, p.to_vector()[None, :], grid)
        hyb = postprocess(p, s, t[0], f[0], l_[0], grid, speeds, model)
        em_h = efficiency_map(hyb.maps, s, speeds, torques, hyb.curve)
        diff, mismatch = efficiency_difference(em_h, em_c)
        write_effmap_csv(run / "effmap_hybrid.csv", em_h)
        sp, tq = np.meshgrid(speeds, torques)
        write_table_csv(run / "effmap_difference.csv", ("speed_rpm", "torque_nm", "abs_difference"),
                        np.column_stack([sp.ravel(), tq.ravel(), diff.ravel()]))
        i, j = np.unravel_index(int(np.argmax(diff)), diff.shape)
        result.update({"max_difference": float(diff.max()), "max_at_torque": float(torques[i]),
                       "max_at_speed": float(speeds[j]), "feasibility_mismatch_cells": int(mismatch.sum())})
        if cfg["plots"]["enabled"]:
            plots.heatmap(run / "effmap_hybrid.svg", speeds, torques, em_h.efficiency, "speed (rpm)",
                          "torque (Nm)", "efficiency (hybrid)", 0.0, 1.0, "efficiency")
            plots.heatmap(run / "effmap_difference.svg", speeds, torques, diff, "speed (rpm)", "torque (Nm)",
                          "|hybrid - reference|", label="abs. difference")
    write_json(run / "effmap_summary.json", result)
    return result


def cmd_compare(cfg, args, run: Path) -> dict:
    ds = dsmod.load(_require(cfg["paths"]["dataset"], "dataset"))
    res = compare(ds, cfgmod.train_config(cfg), cfg["compare"]["fractions"], cfg["network"]["preset"],
                  _speeds(cfg, ds), log=_log)
    res.write_csv(run / "comparison.csv")
    write_json(run / "comparison.json", res.summary())
    if cfg["plots"]["enabled"]:
        panels = {k: {"hybrid": res.mre["hybrid"][:, j], "direct": res.mre["direct"][:, j]}
                  for j, k in enumerate(res.kpi_names)}
        plots.small_multiples(run / "comparison.svg", res.fractions, panels)
    return {"comparison": str(run / "comparison.csv")}


COMMANDS = {
    "generate": cmd_generate,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "kpi": cmd_kpi,
    "effmap": cmd_effmap,
    "compare": cmd_compare,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML configuration file")
    common.add_argument("--seed", type=int, help="master seed (sampling, split, initialization, batching)")
    common.add_argument("--out", help=f"output root (default: config paths.out, ${cfgmod.OUT_ENV}, ./runs)")
    common.add_argument("--preset", choices=sorted(cfgmod.PRESETS), help="network size preset")
    common.add_argument("--no-plots", action="store_true", help="skip SVG output")

    parser = argparse.ArgumentParser(prog="pmsm-hybrid", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", parents=[common], help="sample designs and run the forward model")
    p.add_argument("--n-designs", type=int, help="number of designs")
    p.add_argument("--dim", type=int, help="design vector dimension (named fields + nuisance)")
    p.add_argument("--workers", type=int, help="worker processes")

    training = argparse.ArgumentParser(add_help=False)
    training.add_argument("--max-epochs", type=int)
    training.add_argument("--patience", type=int)
    training.add_argument("--learning-rate", type=float)
    training.add_argument("--batch-size", type=int)

    p = sub.add_parser("train", parents=[common, training], help="train the hybrid or the direct network")
    p.add_argument("mode", choices=("hybrid", "direct"))
    p.add_argument("--dataset", help="dataset file")

    p = sub.add_parser("evaluate", parents=[common], help="per-measure metrics on the test split")
    p.add_argument("--dataset", help="dataset file")
    p.add_argument("--checkpoint", help="hybrid checkpoint")

    for name, text in (("kpi", "KPIs and characteristic curves of one design"),
                       ("effmap", "efficiency maps of one design")):
        p = sub.add_parser(name, parents=[common], help=text)
        p.add_argument("--dataset", help="dataset file (optional with --design midrange)")
        p.add_argument("--checkpoint", help="hybrid checkpoint; adds the predicted variant")
        p.add_argument("--design", default="first-test",
                       help="dataset index, 'first-test' (default) or 'midrange'")
        p.add_argument("--design-file", help="JSON object of named design values over the mid-range design")

    p = sub.add_parser("compare", parents=[common, training],
                       help="hybrid vs direct KPI errors over training fractions")
    p.add_argument("--dataset", help="dataset file")
    p.add_argument("--fractions", type=float, nargs="+", help="training fractions in (0, 1]")
    return parser


def _overrides(args) -> dict:
    o: dict = {}

    def put(section, key, value):
        if value is not None:
            o.setdefault(section, {})[key] = value

    if args.seed is not None:
        o["seed"] = args.seed
    put("network", "preset", args.preset)
    if args.no_plots:
        put("plots", "enabled", False)
    put("paths", "dataset", getattr(args, "dataset", None))
    ckpt = getattr(args, "checkpoint", None)
    put("paths", "hybrid_checkpoint", ckpt)
    put("dataset", "n_designs", getattr(args, "n_designs", None))
    put("dataset", "dim", getattr(args, "dim", None))
    put("dataset", "workers", getattr(args, "workers", None))
    put("train", "max_epochs", getattr(args, "max_epochs", None))
    put("train", "patience", getattr(args, "patience", None))
    put("train", "learning_rate", getattr(args, "learning_rate", None))
    put("train", "batch_size", getattr(args, "batch_size", None))
    fr = getattr(args, "fractions", None)
    if fr is not None:
        put("compare", "fractions", fr)
    return o


def _fail(kind: str, message: str, code: int) -> int:
    print(json.dumps({"error": kind, "message": message, "exit_code": code}), file=sys.stderr)
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        file_values = cfgmod.load_file(args.config) if args.config else {}
        cfg = cfgmod.resolve(file_values, _overrides(args))
        run = _run_dir(cfg, args, args.command if args.command != "train" else f"train-{args.mode}")
        t0 = time.perf_counter()
        result = COMMANDS[args.command](cfg, args, run)
        result = {"run_dir": str(run), "seconds": round(time.perf_counter() - t0, 3), **result}
        print(json.dumps(result, indent=2, default=float))
        return EXIT_OK
    except (ConfigurationError, ParamRangeError) as exc:
        return _fail(type(exc).__name__, str(exc), EXIT_CONFIG)
    except FileNotFoundError as exc:
        return _fail("FileNotFoundError", str(exc), EXIT_MISSING)
    except (PersistenceError, ShapeError) as exc:
        return _fail(type(exc).__name__, str(exc), EXIT_FORMAT)
    except Exception as exc:  # noqa: BLE001 - every failure is reported as JSON
        return _fail(type(exc).__name__, str(exc), EXIT_OTHER)


if __name__ == "__main__":
    sys.exit(main())
