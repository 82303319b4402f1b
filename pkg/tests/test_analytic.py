import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from pmsm_hybrid.analytic import (
    DEFAULT_RANGES, NAMED_FIELDS, DesignParams, MachineModel, OperatingPoint, SystemParams,
    derive_lumped_parameters, dq_flux, inverse_park, mass_and_cost, mean_torque, parameter_names,
    simulate, simulate_many,
)
from pmsm_hybrid.errors import ParamRangeError


def _named(p):
    return {k: getattr(p, k) for k in NAMED_FIELDS}


unit = st.floats(0.0, 1.0, allow_nan=False)


@st.composite
def designs(draw):
    vals = [lo + draw(unit) * (hi - lo) for lo, hi in (DEFAULT_RANGES[k] for k in NAMED_FIELDS)]
    return DesignParams(*vals, nuisance=(0.5,) * 24)


def test_lumped_parameters_match_closed_form(midrange, system):
    lp = derive_lumped_parameters(midrange, system)
    psi, ld, lq = oracles.lumped(_named(midrange), system.pole_pairs)
    assert lp.psi_pm == pytest.approx(psi, rel=1e-13)
    assert lp.L_d == pytest.approx(ld, rel=1e-13)
    assert lp.L_q == pytest.approx(lq, rel=1e-13)


def test_masses_match_closed_form(midrange, system):
    mc = mass_and_cost(midrange, system)
    ref = oracles.masses(_named(midrange), system.pole_pairs)
    for part, m in ref.items():
        assert mc["mass_per_part"][part] == pytest.approx(m, rel=1e-13)
    assert mc["total_mass"] == pytest.approx(sum(ref.values()), rel=1e-13)
    price = system.material_unit_prices
    assert mc["total_cost"] == pytest.approx(sum(ref[k] * price[k] for k in ref), rel=1e-13)


def test_mean_torque_matches_dq_expression(midrange, system):
    lp = derive_lumped_parameters(midrange, system)
    for cur, a in [(0.0, 0.0), (300.0, 20.0), (1336.4, 45.0), (800.0, 135.0)]:
        ref = oracles.dq_torque(lp.psi_pm, lp.L_d, lp.L_q, system.pole_pairs, cur, a)
        assert float(mean_torque(lp, system.pole_pairs, cur, a)) == pytest.approx(ref, rel=1e-13, abs=1e-12)


def test_waveform_mean_equals_dq_torque(midrange, system, model):
    lp = derive_lumped_parameters(midrange, system, model)
    m = simulate(midrange, system, OperatingPoint(900.0, 30.0), model=model)
    assert m.n_steps == 15
    assert m.torque.mean() == pytest.approx(float(mean_torque(lp, system.pole_pairs, 900.0, 30.0)), rel=1e-12)


def test_flux_waveforms_are_inverse_park_of_dq_flux(midrange, system, model):
    lp = derive_lumped_parameters(midrange, system, model)
    m = simulate(midrange, system, OperatingPoint(500.0, 60.0), n_steps=24, model=model)
    psi_d, psi_q = dq_flux(lp, model, 500.0, 60.0)
    for k in range(24):
        th = 2 * math.pi * k / 24
        for c in range(3):
            ref = psi_d * math.cos(th - 2 * math.pi * c / 3) - psi_q * math.sin(th - 2 * math.pi * c / 3)
            assert m.flux[c, k] == pytest.approx(ref, abs=1e-14)


def test_zero_current_has_no_torque_and_pm_flux(midrange, system, model):
    lp = derive_lumped_parameters(midrange, system, model)
    m = simulate(midrange, system, OperatingPoint(0.0, 0.0), model=model)
    np.testing.assert_allclose(m.torque, 0.0, atol=1e-12)
    assert m.flux[0, 0] == pytest.approx(lp.psi_pm, rel=1e-14)


def test_out_of_range_parameter_raises(midrange, system):
    with pytest.raises(ParamRangeError) as info:
        simulate(midrange.replace(air_gap=5.0), system, OperatingPoint(100.0, 0.0))
    assert info.value.field == "air_gap"


def test_operating_point_validation(midrange, system):
    with pytest.raises(ValueError):
        simulate(midrange, system, OperatingPoint(system.max_current * 1.01, 0.0))
    with pytest.raises(ValueError):
        simulate(midrange, system, OperatingPoint(10.0, 360.0))


def test_vector_round_trip_and_names(midrange):
    v = midrange.to_vector()
    assert v.shape == (35,)
    assert DesignParams.from_vector(v) == midrange
    assert len(parameter_names(35)) == 35
    with pytest.raises(ValueError):
        DesignParams.from_vector(v[:5])


def test_system_and_model_dict_round_trip(system, model):
    assert SystemParams.from_dict(system.to_dict()) == system
    assert MachineModel.from_dict(model.to_dict()) == model
    with pytest.raises(ValueError):
        SystemParams.from_dict({"warp": 1})
    with pytest.raises(ValueError):
        SystemParams(dc_voltage=-1.0)


@settings(max_examples=40, deadline=None)
@given(designs(), st.floats(0.0, 1336.4), st.floats(0.0, 180.0))
def test_simulation_is_deterministic_finite_and_lossy(p, cur, alpha):
    s = SystemParams()
    a = simulate(p, s, OperatingPoint(cur, alpha))
    b = simulate(p, s, OperatingPoint(cur, alpha))
    assert a == b
    assert np.isfinite(a.torque).all() and np.isfinite(a.flux).all()
    assert (a.losses >= 0.0).all()


@settings(max_examples=40, deadline=None)
@given(designs(), st.floats(1.0, 1336.4), st.floats(0.0, 180.0))
def test_losses_are_even_in_alpha(p, cur, alpha):
    s = SystemParams()
    t, f, loss = simulate_many(p, s, [OperatingPoint(cur, alpha), OperatingPoint(cur, (360.0 - alpha) % 360.0)])
    np.testing.assert_allclose(loss[0], loss[1], rtol=1e-12)


@settings(max_examples=40, deadline=None)
@given(designs(), st.floats(0.0, 1336.4), st.floats(0.0, 180.0))
def test_coil_fluxes_sum_to_zero(p, cur, alpha):
    m = simulate(p, SystemParams(), OperatingPoint(cur, alpha))
    np.testing.assert_allclose(m.flux.sum(axis=0), 0.0, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(designs(), st.floats(1.0, 1.17))
def test_pm_flux_is_linear_in_remanence(p, k):
    s = SystemParams()
    br = DEFAULT_RANGES["magnet_remanence"][0]
    a = derive_lumped_parameters(p.replace(magnet_remanence=br), s).psi_pm
    b = derive_lumped_parameters(p.replace(magnet_remanence=br * k), s).psi_pm
    assert b == pytest.approx(k * a, rel=1e-12)


def test_surface_machine_has_equal_inductances(midrange, system):
    lp = derive_lumped_parameters(midrange, system, MachineModel(saliency=0.0))
    assert lp.L_d == lp.L_q


def test_ripple_off_gives_flat_torque(midrange, system):
    m = simulate(midrange, system, OperatingPoint(1000.0, 40.0), model=MachineModel(ripple=0.0))
    assert np.ptp(m.torque) == pytest.approx(0.0, abs=1e-9)


def test_inverse_park_shapes():
    th = np.linspace(0, 2 * np.pi, 7, endpoint=False)
    assert inverse_park(np.ones(4), np.zeros(4), th).shape == (4, 3, 7)
