import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from pmsm_hybrid.errors import ConfigurationError
from pmsm_hybrid.evaluation import (PccUndefinedWarning, compare, fraction_subset, kpi_metrics, mae,
                                    metric_report, mre, mre_excluded, pcc)
from pmsm_hybrid.surrogate.training import TrainConfig

series = st.lists(st.floats(-1e3, 1e3, allow_nan=False), min_size=3, max_size=40)


def test_mre_known_values():
    assert mre([1.1, 1.8], [1.0, 2.0]) == pytest.approx(10.0)
    assert mre([5.0, 2.0], [0.0, 1.0]) == pytest.approx(100.0)
    assert mre_excluded([0.0, 1.0, 1e-12]) == 2
    assert math.isnan(mre([1.0], [0.0]))


def test_mae_over_waveforms():
    pred = np.array([[1.0, 3.0], [0.0, 0.0]])
    truth = np.array([[2.0, 2.0], [0.0, 4.0]])
    assert mae(pred, truth) == 1.5
    assert mae(pred, truth, step_axis=-1) == 1.5
    rep = metric_report("t", pred, truth, step_axis=-1)
    assert rep.count == 2 and rep.mre == pytest.approx(50.0)


def test_pcc_constant_series_warns():
    with pytest.warns(PccUndefinedWarning):
        assert math.isnan(pcc([1.0, 1.0, 1.0], [1.0, 2.0, 3.0]))


@settings(max_examples=200, deadline=None)
@given(series, st.integers(0, 2**31))
def test_metrics_match_brute_force(xs, seed):
    truth = np.array(xs)
    pred = truth + np.random.default_rng(seed).normal(scale=10.0, size=truth.size)
    assert mae(pred, truth) == pytest.approx(oracles.mae(pred, truth), rel=1e-12, abs=1e-12)
    if (np.abs(truth) >= 1e-9).any():
        assert mre(pred, truth) == pytest.approx(oracles.mre(pred, truth), rel=1e-12)
    if np.ptp(truth) > 1e-6 and np.ptp(pred) > 1e-6:
        assert pcc(pred, truth) == pytest.approx(oracles.pcc(pred, truth), abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(series, st.integers(-20, 20), st.floats(-1e3, 1e3))
def test_pcc_invariant_under_power_of_two_scaling(xs, e, shift):
    x = np.array(xs)
    y = x ** 2 - x
    if np.ptp(x) == 0 or np.ptp(y) == 0:
        return
    assert pcc(x * 2.0 ** e, y) == pcc(x, y)
    scaled = x * 2.0 ** e
    # a shift costs digits only when it dwarfs the spread of the series
    if abs(shift) <= 1e3 * np.ptp(scaled):
        assert pcc(scaled + shift, y) == pytest.approx(pcc(x, y), abs=1e-12)


def test_kpi_metrics_shapes(rng):
    t = rng.uniform(1, 2, size=(10, 7))
    m, r = kpi_metrics(t * 1.01, t)
    np.testing.assert_allclose(m, 1.0, rtol=1e-10)
    np.testing.assert_allclose(r, 1.0)


def test_fraction_subsets_are_nested():
    idx = np.arange(100, 300)
    a = fraction_subset(idx, 0.1, 3)
    b = fraction_subset(idx, 0.5, 3)
    assert len(a) == 20 and len(b) == 100 and set(a) <= set(b)
    with pytest.raises(ConfigurationError):
        fraction_subset(idx, 0.001, 3)
    with pytest.raises(ConfigurationError):
        fraction_subset(idx, 1.5, 3)


def test_compare_small_run(small_ds, tmp_path):
    res = compare(small_ds, TrainConfig(max_epochs=2, patience=1), fractions=(0.5, 1.0))
    assert res.mre["hybrid"].shape == (2, 7) and res.n_train == [11, 22]
    res.write_csv(tmp_path / "c.csv")
    lines = (tmp_path / "c.csv").read_text().splitlines()
    assert lines[0] == "kpi,fraction,approach,mre,pcc" and len(lines) == 1 + 2 * 2 * 7
    summary = res.summary()
    assert summary["units"]["mre"] == "percent"
    assert set(res.nets) == {(a, f) for a in ("hybrid", "direct") for f in (0.5, 1.0)}
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert np.isfinite(res.mre["direct"]).all()
