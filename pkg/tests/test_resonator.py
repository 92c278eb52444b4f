import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from xduce.constants import TWO_PI
from xduce.resonator import (
    PumpConfig,
    chi_cavity,
    circulating_power,
    fsr_hz,
    mean_photon_number,
    mixed_power_reflection,
    s_ee_reflection,
    s_oo_power,
    s_oo_reflection,
)

# frozen from a 30-digit evaluation of the closed forms
CHI_ON_SIDEBAND = 1.18772345590966668e-7
SEE_DIP = 0.535395597858417609
SOO_DIP = 0.338828246825573624
NBAR_1NW = 13838947.3294781074
FSR_2P3MM = 65172273478.2608696
PCIRC_LOCK = 2.07899739022711653e-4


def test_chi_on_sideband_is_real():
    k = TWO_PI * 2.68e6
    wm = TWO_PI * 1.451e6
    chi = chi_cavity(k, -wm, wm)
    assert chi.imag == 0
    assert chi.real == pytest.approx(2 / k, rel=1e-15)
    assert chi.real == pytest.approx(CHI_ON_SIDEBAND, rel=1e-14)


def test_chi_decays():
    assert abs(chi_cavity(1.0, 0.0, 1e12)) < 1e-11


@given(st.floats(1.0, 1e8), st.floats(-1e8, 1e8), st.floats(-1e8, 1e8))
def test_chi_conjugate(k, d, w):
    assert np.conj(chi_cavity(k, d, w)) == pytest.approx(1 / (k / 2 + 1j * (w + d)), rel=1e-12)


def test_s_ee_limits(fig2):
    ke = TWO_PI * 1.64e6
    assert s_ee_reflection(fig2, ke, fig2.omega_e + 1e13) == pytest.approx(-1, abs=1e-6)
    assert abs(s_ee_reflection(fig2, ke, fig2.omega_e)) ** 2 == pytest.approx(SEE_DIP, rel=1e-13)
    p = fig2.replace(kappa_e_ext=ke / 2)
    assert abs(s_ee_reflection(p, ke, p.omega_e)) == pytest.approx(0, abs=1e-15)


@settings(max_examples=200)
@given(st.floats(0.01, 1.0), st.floats(-1e8, 1e8))
def test_passive_reflection_bounded(frac, dw):
    from xduce import table1_preset

    p = table1_preset("fig2")
    ke = p.kappa_e_ext / frac
    assert abs(s_ee_reflection(p, ke, p.omega_e + dw)) ** 2 <= 1 + 1e-12


def test_s_oo_power(fig2):
    p = fig2.replace(eps_pc=1.0)
    assert s_oo_power(p, p.omega_o) == pytest.approx(SOO_DIP, rel=1e-13)
    assert s_oo_power(p, p.omega_o + 1e12) == pytest.approx(1.0, abs=1e-8)
    assert s_oo_power(fig2.replace(eps_pc=0.0), fig2.omega_o) == 1.0
    assert mixed_power_reflection(0.0, 0.25) == 0.75
    assert s_oo_reflection(p, p.omega_o) == pytest.approx(2 * 2.12 / 2.68 - 1, rel=1e-13)


def test_bad_linewidths(fig2):
    with pytest.raises(ValueError):
        s_ee_reflection(fig2, 0.0, fig2.omega_e)


def test_photon_numbers(fig2):
    wm = fig2.omega_m
    assert mean_photon_number(PumpConfig(), fig2, "optical") == 0
    pump = PumpConfig(P_e=1e-9, Delta_e=-wm)
    n = mean_photon_number(pump, fig2, "microwave", kappa_e=TWO_PI * 2.0e6)
    assert n == pytest.approx(NBAR_1NW, rel=1e-12)
    n2 = mean_photon_number(PumpConfig(P_e=2e-9, Delta_e=-wm), fig2, "microwave", kappa_e=TWO_PI * 2.0e6)
    assert n2 == pytest.approx(2 * n, rel=1e-14)
    with pytest.raises(ValueError):
        mean_photon_number(pump, fig2, "acoustic")


def test_photon_number_peaks_on_resonance(fig2):
    ds = np.linspace(-5e6, 5e6, 2001)
    ns = [mean_photon_number(PumpConfig(P_o=1e-3, Delta_o=d), fig2, "optical") for d in ds]
    assert ds[int(np.argmax(ns))] == 0.0


def test_negative_power_rejected():
    with pytest.raises(ValueError):
        PumpConfig(P_e=-1.0)


def test_pump_frequency(fig2):
    pump = PumpConfig.red(fig2)
    assert pump.omega_pump_o(fig2) == fig2.omega_o - fig2.omega_m


def test_fsr_and_circulating_power(fig2):
    assert fsr_hz(2.3e-3) == pytest.approx(FSR_2P3MM, rel=1e-14)
    assert circulating_power(fig2.replace(lock=fig2.lock.__class__()), PumpConfig()) == 0
    assert circulating_power(fig2, PumpConfig()) == pytest.approx(PCIRC_LOCK, rel=1e-12)
    with pytest.raises(ValueError):
        fsr_hz(0.0)
