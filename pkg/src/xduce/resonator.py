"""Steady-state linear response of the microwave circuit and the optical cavity."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .constants import C_LIGHT, HBAR
from .params import TransducerParams


@dataclass(frozen=True)
class PumpConfig:
    """Incident pump powers (W) and detunings (rad/s) from the resonances.

    ``Delta = omega_pump - omega_res``, so a red-detuned pump has
    ``Delta < 0`` and ``omega_pump = omega_res + Delta``.
    """

    P_e: float = 0.0
    P_o: float = 0.0
    Delta_e: float = 0.0
    Delta_o: float = 0.0

    def __post_init__(self):
        if self.P_e < 0 or self.P_o < 0:
            raise ValueError("pump powers must be >= 0")

    def omega_pump_e(self, params: TransducerParams) -> float:
        return params.omega_e + self.Delta_e

    def omega_pump_o(self, params: TransducerParams) -> float:
        return params.omega_o + self.Delta_o

    @classmethod
    def red(cls, params: TransducerParams, P_e=0.0, P_o=0.0) -> "PumpConfig":
        """Both pumps at the optimal detuning -omega_m."""
        return cls(P_e=P_e, P_o=P_o, Delta_e=-params.omega_m, Delta_o=-params.omega_m)


def chi_cavity(kappa, Delta, omega):
    """Cavity susceptibility 1/(kappa/2 - i(omega + Delta)), in seconds."""
    return 1.0 / (kappa / 2 - 1j * (np.asarray(omega) + Delta))


def _reflection(kappa_ext, kappa, detuning):
    return kappa_ext / (kappa / 2 - 1j * detuning) - 1.0


def s_ee_reflection(params: TransducerParams, kappa_e: float, omega):
    """Microwave reflection normalized to the off-resonance level.

    ``omega`` is the absolute probe frequency (rad/s); ``kappa_e`` is the
    pump-power-implied total linewidth.
    """
    if params.kappa_e_ext <= 0 or kappa_e <= 0:
        raise ValueError("kappa_e_ext and kappa_e must be > 0")
    return _reflection(params.kappa_e_ext, kappa_e, np.asarray(omega) - params.omega_e)


def s_oo_reflection(params: TransducerParams, omega):
    """Optical reflection of the cavity-modematched part of the beam."""
    return _reflection(params.kappa_o_ext, params.kappa_o, np.asarray(omega) - params.omega_o)


def mixed_power_reflection(s, eps):
    """Power reflection seen by a detector when only a fraction ``eps`` of the beam is modematched."""
    return eps * np.abs(s) ** 2 + (1.0 - eps)


def s_oo_power(params: TransducerParams, omega, eps: float | None = None):
    """Detector-facing optical power reflection, ``eps |S_oo|^2 + 1 - eps`` (default eps_pc)."""
    eps = params.eps_pc if eps is None else eps
    return mixed_power_reflection(s_oo_reflection(params, omega), eps)


def photon_flux(power, omega_pump):
    return power / (HBAR * omega_pump)


def intracavity_photons(power, omega_pump, kappa_ext, kappa, Delta, eps=1.0):
    """|amplitude|^2 = (P/hbar w_p) eps kappa_ext / (kappa^2/4 + Delta^2)."""
    return photon_flux(power, omega_pump) * eps * kappa_ext / (kappa**2 / 4 + Delta**2)


def mean_photon_number(pump: PumpConfig, params: TransducerParams, which: str, kappa_e: float | None = None):
    """Mean intracavity photon number of the ``"microwave"`` or ``"optical"`` mode.

    For the microwave mode the linewidth must be given (``kappa_e``) or is
    taken at the low-power end of the internal-loss table; use
    :func:`xduce.dynamics.microwave_photons` for the self-consistent value.
    """
    if which == "microwave":
        if kappa_e is None:
            kappa_e = params.kappa_e_ext + params.kappa_e_int_table[0][1]
        return intracavity_photons(
            pump.P_e, pump.omega_pump_e(params), params.kappa_e_ext, kappa_e, pump.Delta_e
        )
    if which == "optical":
        return intracavity_photons(
            pump.P_o, pump.omega_pump_o(params), params.kappa_o_ext, params.kappa_o,
            pump.Delta_o, params.eps_pc,
        )
    raise ValueError("which must be 'microwave' or 'optical'")


def fsr_hz(length):
    """Free spectral range c/2L in Hz."""
    if length <= 0:
        raise ValueError("cavity length must be > 0")
    return C_LIGHT / (2 * length)


def circulating_power(params: TransducerParams, pump: PumpConfig) -> float:
    """Intracavity circulating power (W) from the pump and the lock beam."""
    ko = params.kappa_o
    lock = params.lock
    per_power = (
        params.eps_pc * pump.P_o / (ko**2 / 4 + pump.Delta_o**2)
        + params.eps_lock * lock.power / (ko**2 / 4 + lock.detuning**2)
    )
    return fsr_hz(params.cavity_length) * params.kappa_o_ext * per_power
