"""Freeze the classical-path outputs used as golden fixtures.

Run from the repository root after an intentional model change::

    python tests/fixtures/regenerate.py
"""

import json
from pathlib import Path

from pmsm_hybrid.analytic import DesignParams, MachineModel, SystemParams
from pmsm_hybrid.dataset import build_grid
from pmsm_hybrid.physics import characteristic_curves, classical_postprocess
from pmsm_hybrid.physics.export import write_curve_csv, write_table_csv

HERE = Path(__file__).parent


def golden_designs():
    mid = DesignParams.midrange()
    corner = mid.replace(air_gap=0.6, magnet_height=6.5, magnet_width=22.0, winding_turns=9.5,
                         stator_resistance=0.011, stack_length=170.0)
    return {"midrange": mid, "corner": corner}


def compute(design):
    s = SystemParams()
    model = MachineModel(i_sat=s.max_current)
    grid = build_grid(s.max_current)
    res = classical_postprocess(design, s, grid, model=model)
    chars = characteristic_curves(res.maps, s, curve=res.curve)
    return res, chars


def main():
    for name, design in golden_designs().items():
        res, chars = compute(design)
        record = {"design": design.to_vector().tolist(), "kpis": res.kpis.as_array().tolist()}
        (HERE / f"{name}_kpis.json").write_text(json.dumps(record, indent=2) + "\n")
        write_curve_csv(HERE / f"{name}_limit_curve.csv", res.curve)
        write_table_csv(HERE / f"{name}_characteristics.csv", chars.COLUMNS, chars.as_columns())
        print(name, res.kpis)


if __name__ == "__main__":
    main()
