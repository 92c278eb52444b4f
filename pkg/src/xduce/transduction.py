"""Conversion gain, efficiency, bandwidth and the technical-noise-free added noise."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import OperatingPoint, membrane_occupancy
from .params import TransducerParams


def _require_stable(op: OperatingPoint) -> None:
    if op.Gamma_T <= 0:
        raise ValueError("total damping Gamma_T must be > 0")


def _ratios(params: TransducerParams, op: OperatingPoint) -> tuple[float, float]:
    return params.kappa_e_ext / op.kappa_e, params.kappa_o_ext / params.kappa_o


@dataclass(frozen=True)
class EfficiencyReport:
    eta_up: float
    eta_down: float
    eta_bidirectional: float
    eta_matched: float
    bandwidth: float
    A_e: float
    A_o: float
    kappa_e_ratio: float

    @property
    def eta_t(self) -> float:
        return self.eta_bidirectional

    @property
    def zeta(self) -> float:
        """Efficiency with the microwave external-coupling ratio divided out."""
        return self.eta_bidirectional / self.kappa_e_ratio


def _conversion(params, op, omega, eps):
    _require_stable(op)
    re, ro = _ratios(params, op)
    amp = np.sqrt(op.A_e * op.A_o * re * ro * eps * op.Gamma_e * op.Gamma_o)
    return amp / (op.Gamma_T / 2 - 1j * (np.asarray(omega) - params.omega_m))


def s_oe(params: TransducerParams, op: OperatingPoint, omega):
    """Microwave-to-optical scattering amplitude at sideband frequency ``omega`` (rad/s).

    Output-side modematching enters as ``sqrt(eps_cl)``.
    """
    return _conversion(params, op, omega, params.eps_cl)


def s_eo(params: TransducerParams, op: OperatingPoint, omega):
    """Optical-to-microwave amplitude; input-side modematching enters as ``sqrt(eps_pc)``."""
    return _conversion(params, op, omega, params.eps_pc)


def efficiency(params: TransducerParams, op: OperatingPoint) -> EfficiencyReport:
    """Up, down and bidirectional efficiency at the sideband centre."""
    _require_stable(op)
    re, ro = _ratios(params, op)
    coop = 4 * op.Gamma_e * op.Gamma_o / op.Gamma_T**2
    eta_up = params.eps_cl * re * ro * coop
    eta_down = params.eps_pc * re * ro * coop
    return EfficiencyReport(
        eta_up=eta_up,
        eta_down=eta_down,
        eta_bidirectional=float(np.sqrt(eta_up * eta_down)),
        eta_matched=params.eps * re * ro,
        bandwidth=op.Gamma_T,
        A_e=op.A_e,
        A_o=op.A_o,
        kappa_e_ratio=re,
    )


def added_noise_ideal(params: TransducerParams, op: OperatingPoint, direction: str = "up", n_m: float | None = None):
    """Input-referred added noise without the white technical floor (photons/s/Hz)."""
    _require_stable(op)
    n_m = membrane_occupancy(params, op) if n_m is None else n_m
    re, ro = _ratios(params, op)
    if direction == "up":
        if op.Gamma_e <= 0:
            raise ZeroDivisionError("upconversion added noise needs Gamma_e > 0")
        return n_m * op.Gamma_T / (op.A_e * re * op.Gamma_e)
    if direction == "down":
        if op.Gamma_o <= 0:
            raise ZeroDivisionError("downconversion added noise needs Gamma_o > 0")
        return n_m * op.Gamma_T / (params.eps_pc * op.A_o * ro * op.Gamma_o)
    raise ValueError("direction must be 'up' or 'down'")


def ideal_sideband_density(params: TransducerParams, op: OperatingPoint, side: str, omega, n_m: float | None = None):
    """Output spectrum around the upper (``"+"``) or lower (``"-"``) sideband with no technical noise.

    Normalized at the transducer output, shot noise = 1.
    """
    _require_stable(op)
    n_m = membrane_occupancy(params, op) if n_m is None else n_m
    omega = np.asarray(omega, dtype=float)
    K = params.eps_cl * params.kappa_o_ext / params.kappa_o * op.A_o * op.Gamma_o
    G = op.Gamma_T
    if side == "+":
        d = G**2 / 4 + (omega - params.omega_m) ** 2
        return 1 + K / d * (G * n_m)
    if side == "-":
        d = G**2 / 4 + (omega + params.omega_m) ** 2
        return 1 + K / d * (G * (op.n_min_o / op.A_o * (n_m + 1)))
    raise ValueError("side must be '+' or '-'")
