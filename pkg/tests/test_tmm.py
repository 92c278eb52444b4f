from importlib import resources

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from xduce.constants import TWO_PI
from xduce.tmm import (
    FixedParticipation,
    Layer,
    LayerStack,
    LumpedMirror,
    ParallelPlateParticipation,
    default_stack,
    dip_linewidth,
    g_e_from_geometry,
    g_e_per_displacement,
    load_stack,
    resonances,
    stack_rt,
    sweep,
)

G_E_HZ_PER_FM = 3.20389156626506024  # 0.67 * 7.938 GHz / (2 * 830 nm)


@pytest.fixture(scope="module")
def stack():
    return load_stack(resources.files("xduce.data").joinpath("default_stack.yaml").read_text())


@pytest.fixture(scope="module")
def period_sweep(stack):
    return sweep(stack, (1083.0e-9, 1086.2e-9), 401)


def test_stack_validation():
    with pytest.raises(ValueError):
        Layer(0.0)
    with pytest.raises(ValueError):
        LayerStack(LumpedMirror(1e-4), (Layer(1e-3), Layer(1e-3)), LumpedMirror(1e-4))
    with pytest.raises(ValueError):
        LayerStack(LumpedMirror(1e-4), (Layer(1e-7, 2.0, True), Layer(1e-3)), LumpedMirror(1e-4))
    with pytest.raises(ValueError):
        LumpedMirror(0.0)


def test_default_stack_matches_bundled(stack):
    built = default_stack()
    assert built.length == pytest.approx(stack.length, rel=1e-12)
    assert built.movable_index == stack.movable_index == 1


@settings(max_examples=40, deadline=None)
@given(st.floats(1000e-9, 1200e-9), st.floats(-50e-9, 50e-9))
def test_lossless_energy_conservation(lam, x):
    s = default_stack()
    r, t = stack_rt(s, lam, x)
    assert abs(r) ** 2 + abs(t) ** 2 == pytest.approx(1.0, abs=1e-10)


def test_empty_cavity_fsr(stack):
    roots = resonances(stack.without_movable(), (1083.0e-9, 1086.0e-9))
    fsr = np.diff(roots)
    assert np.ptp(fsr) / fsr.mean() < 1e-2
    assert fsr.mean() == pytest.approx(260e-12, rel=0.02)


def test_resonance_near_operating_wavelength(stack):
    roots = resonances(stack, (1084.2e-9, 1084.6e-9))
    assert any(abs(r - 1084.4e-9) < 260e-12 for r in roots)


def test_no_resonance_raises(stack):
    with pytest.raises(ValueError):
        resonances(stack, (1084.40000e-9, 1084.40001e-9))


def test_roots_stable_under_refinement(stack):
    a = np.array(resonances(stack, (1084.0e-9, 1084.8e-9)))
    b = np.array(resonances(stack, (1084.0e-9, 1084.8e-9), points_per_fsr=80))
    assert a.shape == b.shape
    assert np.max(np.abs(a / b - 1)) < 1e-13


def test_membrane_period(period_sweep):
    nulls = period_sweep.wavelength[period_sweep.sign_changes()]
    period = np.diff(nulls[::2])
    assert period == pytest.approx(np.full_like(period, 1.55e-9), rel=0.02)


def test_two_nulls_two_maxima_per_period(period_sweep):
    lam = period_sweep.wavelength
    nulls = lam[period_sweep.sign_changes()]
    start, stop = nulls[0], nulls[2]
    maxima = lam[period_sweep.local_maxima()]
    assert np.count_nonzero((nulls >= start) & (nulls < stop)) == 2
    assert np.count_nonzero((maxima >= start) & (maxima < stop)) == 2


def test_kappa_ext_at_lower_maximum(period_sweep):
    i = period_sweep.lower_maximum()
    assert period_sweep.kappa_ext[i] / TWO_PI == pytest.approx(2.12e6, rel=0.15)


def test_G_o_at_lower_maximum(period_sweep):
    i = period_sweep.lower_maximum()
    assert abs(period_sweep.G_o_hz_per_fm()[i]) == pytest.approx(70.0, rel=0.20)


def test_kappa_sum_roughly_constant(period_sweep):
    k = period_sweep.kappa_sum
    assert (k.max() - k.min()) / k.max() < 0.35
    assert np.all(period_sweep.kappa_ext >= 0) and np.all(period_sweep.kappa_back >= 0)


def test_dip_linewidth_cross_check(stack, period_sweep):
    i = period_sweep.lower_maximum()
    lam = period_sweep.wavelength[i]
    assert dip_linewidth(stack, lam) == pytest.approx(period_sweep.kappa_sum[i], rel=1e-3)


def test_sweep_needs_two_points(stack):
    with pytest.raises(ValueError):
        sweep(stack, (1084e-9, 1085e-9), 1)


def test_sweep_csv(period_sweep):
    text = period_sweep.to_csv()
    assert text.splitlines()[0] == "wavelength_nm,Go_hz_per_fm,kext_hz,kback_hz"
    assert len(text.splitlines()) == 402


def test_g_e_per_displacement():
    G = g_e_per_displacement(0.67, 830e-9, TWO_PI * 7.938e9)
    assert G / TWO_PI * 1e-15 == pytest.approx(G_E_HZ_PER_FM, rel=1e-14)


def test_g_e_from_geometry_default_model(fig2):
    out = g_e_from_geometry(fig2)
    assert out["G_e"] / TWO_PI * 1e-15 == pytest.approx(3.2, rel=0.02)
    assert out["d"] == pytest.approx(830e-9, rel=0.05)
    assert ParallelPlateParticipation()(830e-9) == pytest.approx(0.67, rel=1e-14)


def test_g_e_fixed_p_closed_form(fig2):
    out = g_e_from_geometry(fig2, FixedParticipation(0.67))
    closed = 0.67 * fig2.omega_e * fig2.x_zp_e / (2 * fig2.g_e)
    assert out["d"] == pytest.approx(closed, rel=1e-12)


def test_g_e_no_root(fig2):
    with pytest.raises(ValueError):
        g_e_from_geometry(fig2, bracket=(1e-6, 5e-6))


def test_load_stack_rejects_unknown_keys():
    doc = {"input_mirror": {"transmission": 1e-4}, "back_mirror": {"transmission": 1e-5},
           "layers": [{"thickness": 1e-3}, {"thickness": 1e-7, "index": 2.0, "movable": True, "colour": 1},
                      {"thickness": 1e-4}]}
    with pytest.raises(ValueError):
        load_stack(doc)
