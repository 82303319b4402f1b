import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from pmsm_hybrid import kernels
from pmsm_hybrid.physics import classical_maps
from pmsm_hybrid.physics.curves import limit_curve, short_circuit_current
from pmsm_hybrid.physics.effmap import efficiency_map

BACKENDS = [kernels.python_backend]
if kernels.compiled_backend is not None:
    BACKENDS.append(kernels.compiled_backend)
needs_compiled = pytest.mark.skipif(kernels.compiled_backend is None, reason="compiled backend not built")

AMPS = np.array([0.0, 100.0, 250.0, 600.0])
ANGLES = np.array([0.0, 45.0, 90.0, 135.0, 180.0])
TABLE = np.random.default_rng(0).normal(size=(2, 4, 5))


@pytest.mark.parametrize("be", BACKENDS, ids=lambda b: b.__name__.rsplit(".", 1)[-1])
@settings(max_examples=200, deadline=None)
@given(st.floats(-50.0, 700.0), st.floats(-400.0, 800.0))
def test_bilinear_matches_scalar_oracle(be, cur, alpha):
    got = be.bilinear(AMPS, ANGLES, TABLE, np.array([cur]), np.array([alpha]))
    for m in range(2):
        ref = oracles.bilinear(AMPS.tolist(), ANGLES.tolist(), TABLE[m].tolist(), cur, alpha)
        assert got[m, 0] == pytest.approx(ref, rel=1e-12, abs=1e-12)


@pytest.mark.parametrize("be", BACKENDS, ids=lambda b: b.__name__.rsplit(".", 1)[-1])
def test_bilinear_reproduces_nodes(be):
    ci, ca = np.meshgrid(AMPS, ANGLES, indexing="ij")
    got = be.bilinear(AMPS, ANGLES, TABLE, ci.ravel(), ca.ravel())
    np.testing.assert_array_equal(got, TABLE.reshape(2, -1))


@settings(max_examples=100, deadline=None)
@given(st.floats(0.0, 600.0), st.floats(0.0, 180.0))
def test_bilinear_mirror_symmetry(cur, alpha):
    a = kernels.bilinear(AMPS, ANGLES, TABLE, np.array([cur]), np.array([alpha]))
    b = kernels.bilinear(AMPS, ANGLES, TABLE, np.array([cur]), np.array([360.0 - alpha]))
    np.testing.assert_allclose(a, b, rtol=0, atol=1e-12)


@pytest.fixture(scope="module")
def maps(midrange, system, grid, model):
    return classical_maps(midrange, system, grid, model)


@needs_compiled
def test_limit_search_backends_agree(maps, system, monkeypatch):
    curves = []
    for be in BACKENDS:
        monkeypatch.setattr(kernels, "limit_search", be.limit_search)
        monkeypatch.setattr(kernels, "bilinear", be.bilinear)
        curves.append(limit_curve(maps, system))
    for name in ("torque", "current", "alpha", "ripple"):
        np.testing.assert_allclose(getattr(curves[0], name), getattr(curves[1], name), rtol=1e-12, atol=1e-9)
    np.testing.assert_array_equal(curves[0].feasible, curves[1].feasible)


@needs_compiled
def test_short_circuit_backends_agree(maps, monkeypatch):
    speeds = np.linspace(0.0, 20000.0, 9)
    out = []
    for be in BACKENDS:
        monkeypatch.setattr(kernels, "short_circuit", be.short_circuit)
        out.append(short_circuit_current(maps, speeds))
    for a, b in zip(*out):
        np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-9)


@needs_compiled
def test_min_loss_search_backends_agree(maps, system, monkeypatch):
    speeds = np.linspace(1000.0, 20000.0, 6)
    curve = limit_curve(maps, system, speeds)
    torques = np.linspace(0.0, curve.torque.max(), 7)
    out = []
    for be in BACKENDS:
        monkeypatch.setattr(kernels, "min_loss_search", be.min_loss_search)
        out.append(efficiency_map(maps, system, speeds, torques, curve))
    np.testing.assert_allclose(out[0].efficiency, out[1].efficiency, rtol=1e-12, atol=1e-12)
    np.testing.assert_array_equal(out[0].approximate, out[1].approximate)


def test_best_feasible_picks_max_torque_first_on_ties():
    torque = np.array([1.0, 3.0, 3.0, 5.0])
    zeros = np.zeros(4)
    cur = np.array([1.0, 1.0, 1.0, 1000.0])
    k = kernels.python_backend.best_feasible(torque, zeros, zeros, cur, zeros, np.ones(4), 1.0, 0.0, 10.0)
    assert k == 1
    assert kernels.python_backend.best_feasible(torque, zeros, zeros, cur * 100, zeros, np.ones(4),
                                                1.0, 0.0, 10.0) == -1
