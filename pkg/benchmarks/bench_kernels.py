"""Time the compiled and pure-Python post-processing kernels on one design.

    python benchmarks/bench_kernels.py [--repeat 5]

Prints a table of best-of-N wall times per kernel and backend, and checks
that both backends return the same numbers.
"""

import argparse
import time

import numpy as np

from pmsm_hybrid import kernels
from pmsm_hybrid.analytic import DesignParams, MachineModel, SystemParams
from pmsm_hybrid.dataset import build_grid
from pmsm_hybrid.physics import classical_maps
from pmsm_hybrid.physics.curves import default_speeds, limit_curve, short_circuit_current
from pmsm_hybrid.physics.effmap import default_speed_axis, default_torque_axis, efficiency_map


def _best(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def _use(backend):
    for name in ("bilinear", "limit_search", "min_loss_search", "short_circuit"):
        setattr(kernels, name, getattr(backend, name))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    if kernels.compiled_backend is None:
        raise SystemExit("compiled backend not built; run `pip install -e . --no-build-isolation` first")

    s = SystemParams()
    maps = classical_maps(DesignParams.midrange(), s, build_grid(s.max_current),
                          MachineModel(i_sat=s.max_current))
    speeds = default_speeds(s)
    curve = limit_curve(maps, s, speeds)
    e_speeds = default_speed_axis(s)
    e_torques = default_torque_axis(curve)
    rng = np.random.default_rng(0)
    q_cur = rng.uniform(0, s.max_current, 100_000)
    q_alpha = rng.uniform(0, 360, 100_000)

    cases = {
        "bilinear (1e5 queries)": lambda: kernels.bilinear(maps.amps, maps.angles, maps.values, q_cur, q_alpha),
        "limit curve (41 speeds)": lambda: limit_curve(maps, s, speeds).torque,
        "short circuit (41 speeds)": lambda: short_circuit_current(maps, speeds)[0],
        "efficiency map (40x40)": lambda: efficiency_map(maps, s, e_speeds, e_torques).efficiency,
    }
    rows = []
    original = kernels.backend
    try:
        for label, fn in cases.items():
            timings = {}
            results = {}
            for name, be in (("cython", kernels.compiled_backend), ("python", kernels.python_backend)):
                _use(be)
                timings[name], results[name] = _best(fn, args.repeat)
            same = np.allclose(results["cython"], results["python"], rtol=1e-12, atol=1e-12, equal_nan=True)
            rows.append((label, timings["cython"], timings["python"], same))
    finally:
        _use(original)

    print(f"{'kernel':28s} {'cython ms':>10s} {'python ms':>10s} {'speedup':>8s}  agree")
    for label, tc, tp, same in rows:
        print(f"{label:28s} {1e3 * tc:10.2f} {1e3 * tp:10.2f} {tp / tc:8.1f}  {same}")


if __name__ == "__main__":
    main()
