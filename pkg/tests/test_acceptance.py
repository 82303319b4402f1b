"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

The slow criteria (4 to 7) share one benchmark run: 500 designs at seed 2024,
desk topology, trained once per fraction of the training split.
"""

import json
import math
import time
from pathlib import Path

import numpy as np
import pytest

import oracles
from acceptance_log import record
from pmsm_hybrid import dataset as dsmod
from pmsm_hybrid import plots
from pmsm_hybrid.analytic import DesignParams, MachineModel, SystemParams, derive_lumped_parameters
from pmsm_hybrid.dataset import build_grid, generate
from pmsm_hybrid.errors import ChecksumError, FormatError, TruncatedFileError, VersionError
from pmsm_hybrid.evaluation import DEFAULT_FRACTIONS, compare, evaluate_measures, hybrid_kpis, mae, mre, pcc
from pmsm_hybrid.physics import characteristic_curves, classical_postprocess, efficiency_map, postprocess
from pmsm_hybrid.physics.effmap import default_speed_axis, efficiency_difference
from pmsm_hybrid.physics.export import read_table_csv
from pmsm_hybrid.physics.maps import electrical_speed
from pmsm_hybrid.surrogate import checkpoint
from pmsm_hybrid.surrogate.network import ACTIVATIONS, LOSSES, Branch, NetTopology, build_net
from pmsm_hybrid.surrogate.training import TrainConfig, build_hybrid_net, hybrid_data, predict_arrays

FIXTURES = Path(__file__).parent / "fixtures"
BENCH_SEED = 2024
BENCH_DESIGNS = 500
BENCH_CONFIG = TrainConfig(seed=BENCH_SEED, patience=30, batch_size=64, max_epochs=300)
LOW_TORQUE_SHARE = 0.25


def _close(a, b, rtol, atol=0.0):
    """Elementwise |a - b| <= atol + rtol |b|, with NaN equal to NaN."""
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    both_nan = np.isnan(a) & np.isnan(b)
    ok = np.abs(a - b) <= atol + rtol * np.abs(b)
    return bool(np.all(both_nan | ok))


# 1 ---------------------------------------------------------------------------

def test_criterion_01_gradients_match_finite_differences():
    t0 = time.perf_counter()
    rng = np.random.default_rng(101)
    worst = 0.0
    ok = True
    for act in ACTIVATIONS:
        for loss in LOSSES:
            topo = NetTopology(6, (9, 7), (Branch("p", (5,), 3), Branch("q", (4, 3), 2),
                                           Branch("w", (6,), 5, spectral=True)), act)
            net = build_net(topo, seed=int(rng.integers(1 << 30)))
            for p in net.params:
                p += rng.normal(scale=0.2, size=p.shape)
            x = rng.normal(size=(7, 6))
            y = {b.name: rng.normal(size=(7, b.output_dim)) for b in topo.branches}
            _, grads = net.backward(x, y, loss)
            numeric = oracles.central_difference(lambda: net.backward(x, y, loss)[0], net.params)
            for g, n in zip(grads, numeric):
                n = np.array(n)
                ratio = np.abs(g.ravel() - n) / (1e-7 + 1e-4 * np.abs(n))
                worst = max(worst, float(ratio.max()))
                ok &= bool((ratio <= 1.0).all())
    seconds = time.perf_counter() - t0
    ok &= seconds < 10.0
    record(1, ok, f"12 activation x loss nets, worst error/tolerance {worst:.3f}, {seconds:.1f} s")
    assert ok


# 2 ---------------------------------------------------------------------------

def test_criterion_02_classical_golden_fixtures():
    import sys
    sys.path.insert(0, str(FIXTURES))
    from regenerate import compute, golden_designs

    t0 = time.perf_counter()
    ok = True
    for name, design in golden_designs().items():
        frozen = json.loads((FIXTURES / f"{name}_kpis.json").read_text())
        assert frozen["design"] == design.to_vector().tolist()
        res, chars = compute(design)
        ok &= _close(res.kpis.as_array(), frozen["kpis"], 1e-12)
        _, curve = read_table_csv(FIXTURES / f"{name}_limit_curve.csv")
        ok &= _close(res.curve.as_columns(), curve, 1e-12, 1e-12)
        _, ch = read_table_csv(FIXTURES / f"{name}_characteristics.csv")
        ok &= _close(chars.as_columns(), ch, 1e-12, 1e-12)
    seconds = time.perf_counter() - t0
    ok &= seconds < 5.0
    record(2, ok, f"KPIs, limit curves and characteristics of 2 designs within 1e-12, {seconds:.2f} s")
    assert ok


# 3 ---------------------------------------------------------------------------

def test_criterion_03_closed_form_kpi_oracle():
    t0 = time.perf_counter()
    s = SystemParams()
    model = MachineModel(saliency=0.0, ripple=0.0, k_sat=0.0, i_sat=s.max_current)
    p = DesignParams.midrange()
    lp = derive_lumped_parameters(p, s, model)
    assert lp.L_d == lp.L_q
    i_sc = lp.psi_pm / lp.L_d
    assert i_sc <= s.max_current
    res = classical_postprocess(p, s, build_grid(s.max_current), model=model, resistance=0.0)
    ch = characteristic_curves(res.maps, s, curve=res.curve)

    z1_ref = 1.5 * s.pole_pairs * lp.psi_pm * s.max_current
    z1_err = abs(res.kpis.z1 - z1_ref) / z1_ref
    slope = np.polyfit(ch.speed, ch.open_circuit_voltage, 1)[0]
    slope_ref = lp.psi_pm * electrical_speed(1.0, s.pole_pairs)
    slope_err = abs(slope - slope_ref) / slope_ref
    sc_err = abs(ch.short_circuit_current[-1] - i_sc) / i_sc
    seconds = time.perf_counter() - t0
    ok = z1_err <= 0.005 and slope_err <= 0.01 and sc_err <= 0.01 and seconds < 10.0
    record(3, ok, f"z1 err {z1_err:.2e}, open-circuit slope err {slope_err:.2e}, "
                  f"short-circuit err {sc_err:.2e}, {seconds:.1f} s")
    assert ok


# shared benchmark ----------------------------------------------------------

@pytest.fixture(scope="module")
def bench(tmp_path_factory):
    ds = generate(BENCH_DESIGNS, seed=BENCH_SEED)
    t0 = time.perf_counter()
    result = compare(ds, BENCH_CONFIG, DEFAULT_FRACTIONS, "desk")
    sweep_seconds = time.perf_counter() - t0
    out = tmp_path_factory.mktemp("acceptance")
    panels = {k: {"hybrid": result.mre["hybrid"][:, j], "direct": result.mre["direct"][:, j]}
              for j, k in enumerate(result.kpi_names)}
    svg = out / "comparison.svg"
    plots.small_multiples(svg, result.fractions, panels)
    result.write_csv(out / "comparison.csv")
    return {"ds": ds, "result": result, "sweep_seconds": sweep_seconds, "svg": svg,
            "net": result.nets[("hybrid", 1.0)]}


# 4 ---------------------------------------------------------------------------

def test_criterion_04_desk_hybrid_benchmark(bench):
    ds, net = bench["ds"], bench["net"]
    test = ds.split["test"]
    train_s = bench["result"].train_seconds[("hybrid", 1.0)]
    reports = {r.quantity: r for r in evaluate_measures(net, ds, test)}
    t_range = np.ptp(ds.torque[test])
    torque_share = reports["torque"].mae / t_range
    flux_share = max(reports[f"flux{k + 1}"].mae / np.ptp(ds.flux[test][:, :, k]) for k in range(3))
    loss_mre = max(reports[n].mre for n in ("eddy_rotor", "eddy_stator", "hyst_rotor", "hyst_stator"))
    ok = torque_share <= 0.02 and flux_share <= 0.02 and loss_mre <= 10.0 and train_s <= 600.0
    record(4, ok, f"torque MAE {100 * torque_share:.3f}% of range, flux MAE {100 * flux_share:.3f}% of range, "
                  f"worst loss MRE {loss_mre:.2f}%, training {train_s:.0f} s")
    assert ok


# 5 ---------------------------------------------------------------------------

def test_criterion_05_hybrid_kpi_fidelity(bench):
    res = bench["result"]
    fi = res.fractions.index(1.0)
    m, r = res.mre["hybrid"][fi], res.pcc["hybrid"][fi]
    k = {name: j for j, name in enumerate(res.kpi_names)}
    pcc_ok = all(r[k[z]] >= 0.98 for z in ("z1", "z2", "z5", "z6"))
    mre_ok = m[k["z1"]] <= 5.0 and m[k["z2"]] <= 5.0
    ok = pcc_ok and mre_ok
    record(5, ok, "hybrid PCC z1/z2/z5/z6 = " + "/".join(f"{r[k[z]]:.4f}" for z in ("z1", "z2", "z5", "z6"))
                  + f", MRE z1 {m[k['z1']]:.2f}%, z2 {m[k['z2']]:.2f}%")
    assert ok


# 6 ---------------------------------------------------------------------------

def test_criterion_06_hybrid_beats_direct_on_ripple_kpis(bench):
    res = bench["result"]
    fi = res.fractions.index(1.0)
    k = {name: j for j, name in enumerate(res.kpi_names)}
    h, d = res.mre["hybrid"][fi], res.mre["direct"][fi]
    ripple_ok = h[k["z4"]] <= d[k["z4"]] and h[k["z7"]] <= d[k["z7"]]
    sweep_ok = bench["sweep_seconds"] <= 3600.0 and bench["svg"].stat().st_size > 0
    ok = ripple_ok and sweep_ok
    record(6, ok, f"MRE z4 hybrid {h[k['z4']]:.2f}% vs direct {d[k['z4']]:.2f}%, "
                  f"z7 hybrid {h[k['z7']]:.2f}% vs direct {d[k['z7']]:.2f}%, "
                  f"sweep {bench['sweep_seconds'] / 60:.1f} min, report {bench['svg'].name}")
    assert ok


# 7 ---------------------------------------------------------------------------

def test_criterion_07_efficiency_map_properties(bench):
    ds, net = bench["ds"], bench["net"]
    i = int(ds.split["test"][0])
    s, p = ds.system, ds.design(i)
    speeds = default_speed_axis(s)
    ref = postprocess(p, s, ds.torque[i], ds.flux[i], ds.losses[i], ds.grid, speeds, ds.model)
    torques = np.linspace(0.0, float(ref.curve.torque.max()), 40)
    t, f, loss = predict_arrays(net, p.to_vector()[None, :], ds.grid)
    hyb = postprocess(p, s, t[0], f[0], loss[0], ds.grid, speeds, ds.model)
    em_c = efficiency_map(ref.maps, s, speeds, torques, ref.curve)
    em_h = efficiency_map(hyb.maps, s, speeds, torques, hyb.curve)

    books = True
    in_range = True
    for em in (em_c, em_h):
        cells = em.feasible & ~em.no_load
        p_in = em.p_shaft + em.p_copper + em.p_hyst + em.p_eddy
        books &= _close(em.p_in[cells], p_in[cells], 1e-9)
        books &= _close(em.efficiency[cells] * p_in[cells], em.p_shaft[cells], 1e-9)
        eff = em.efficiency[em.feasible]
        in_range &= bool(((eff >= 0.0) & (eff <= 1.0)).all())
    diff, mismatch = efficiency_difference(em_h, em_c)
    finite = bool(np.isfinite(diff).all())
    r, c = np.unravel_index(int(np.argmax(diff)), diff.shape)
    low = torques[r] <= LOW_TORQUE_SHARE * torques[-1]
    ok = books and in_range and finite and low
    record(7, ok, f"bookkeeping {books}, efficiency in [0,1] {in_range}, difference finite {finite}, "
                  f"max |diff| {diff.max():.4f} at {torques[r]:.0f} of {torques[-1]:.0f} Nm, "
                  f"{speeds[c]:.0f} rpm; {int(mismatch.sum())} cells differ in feasibility")
    assert ok


# 8 ---------------------------------------------------------------------------

def test_criterion_08_metric_oracles():
    rng = np.random.default_rng(8)
    worst = 0.0
    exact = True
    for _ in range(1000):
        n = int(rng.integers(3, 60))
        truth = rng.normal(scale=10.0 ** rng.uniform(-3, 3), size=n)
        truth[rng.random(n) < 0.1] = 0.0
        pred = truth + rng.normal(scale=np.abs(truth).mean() + 1e-3, size=n)
        worst = max(worst, abs(mae(pred, truth) - oracles.mae(pred, truth)) / oracles.mae(pred, truth))
        worst = max(worst, abs(mre(pred, truth) - oracles.mre(pred, truth)) / oracles.mre(pred, truth))
        worst = max(worst, abs(pcc(pred, truth) - oracles.pcc(pred, truth)))
        a = 2.0 ** int(rng.integers(-30, 30))
        exact &= pcc(a * pred, truth) == pcc(pred, truth) and pcc(pred, a * truth) == pcc(pred, truth)
        g = float(rng.uniform(1e-3, 1e3))
        worst = max(worst, abs(pcc(g * pred, truth) - pcc(pred, truth)))
    ok = worst <= 1e-12 and exact
    record(8, ok, f"1000 batches, worst deviation {worst:.1e}, power-of-two scalings exact {exact}")
    assert ok


# 9 ---------------------------------------------------------------------------

def test_criterion_09_full_scale_topology():
    net = build_hybrid_net(37, "paper", seed=9)
    ds = generate(3, seed=9)
    x, y = hybrid_data(ds, [0, 1, 2])
    net.fit_normalizers(x, y)
    loss, grads = net.backward(net.normalize_inputs(x), net.normalize_outputs(y), "mae")
    finite = math.isfinite(loss) and all(np.isfinite(g).all() for g in grads)
    ok = 2.2e6 <= net.n_params <= 2.4e6 and finite and len(grads) == len(net.params)
    record(9, ok, f"full-scale preset: {net.n_params:,} parameters, one forward+backward on {len(x)} rows, "
                  f"loss {loss:.3f}")
    assert ok


# 10 --------------------------------------------------------------------------

def test_criterion_10_persistence(tmp_path):
    ds = generate(10, seed=10)
    dsmod.save(ds, tmp_path / "d.bin")
    back = dsmod.load(tmp_path / "d.bin")
    ds_ok = back == ds and dsmod.to_bytes(back) == (tmp_path / "d.bin").read_bytes()

    net = build_hybrid_net(37, "desk", seed=10)
    net.fit_normalizers(*hybrid_data(ds, range(10)))
    checkpoint.save(tmp_path / "n.ckpt", net, kind="hybrid", seed=10, epoch=1)
    net2, _ = checkpoint.load(tmp_path / "n.ckpt")
    ck_ok = all(a.tobytes() == b.tobytes() for a, b in zip(net.params, net2.params))
    ck_ok &= checkpoint.to_bytes(net2, kind="hybrid", seed=10, epoch=1) == (tmp_path / "n.ckpt").read_bytes()

    blob = (tmp_path / "d.bin").read_bytes()
    kinds = {}
    for label, bad, err in [
        ("magic", b"NOTMAGIC" + blob[8:], FormatError),
        ("truncated", blob[:-100], TruncatedFileError),
        ("flipped", blob[:-50] + bytes([blob[-50] ^ 0x10]) + blob[-49:], ChecksumError),
        ("version", blob.replace(b'"schema_version": 1', b'"schema_version": 9'), VersionError),
    ]:
        try:
            dsmod.from_bytes(bad)
            kinds[label] = False
        except err:
            kinds[label] = True
    ok = ds_ok and ck_ok and all(kinds.values())
    record(10, ok, f"dataset bit-exact {ds_ok}, checkpoint bit-exact {ck_ok}, corruption kinds {kinds}")
    assert ok
