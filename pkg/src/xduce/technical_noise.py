"""Pump amplitude/phase noise: effective occupancy, white floors, squashed sideband spectra, added noise.

Technical densities ``C`` are two-sided and normalized to the shot noise of
the beam incident on the optical cavity (photons/s/Hz).  They relate to the
one-sided fractional spectra an experimentalist measures (rad^2/Hz) by
``C = 4 * flux * S / 2``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .dynamics import OperatingPoint, gain, membrane_occupancy
from .params import TransducerParams
from .resonator import chi_cavity, photon_flux
from .transduction import efficiency


class CorrelationMode(str, enum.Enum):
    PHASE_ONLY = "phase_only"
    AMPLITUDE_ONLY = "amplitude_only"
    MAX_POSITIVE_CORRELATION = "max_positive_correlation"
    EXPLICIT = "explicit"


def _db_to_linear(db):
    return 10.0 ** (db / 10.0)


@dataclass(frozen=True)
class TechnicalDensities:
    """Shot-noise-normalized two-sided amplitude, phase and cross densities."""

    c_xx: float = 0.0
    c_yy: float = 0.0
    c_xy: float = 0.0

    def __post_init__(self):
        if self.c_xx < 0 or self.c_yy < 0:
            raise ValueError("c_xx and c_yy must be >= 0")
        if self.c_xy**2 > self.c_xx * self.c_yy * (1 + 1e-12) + 1e-300:
            raise ValueError("technical densities violate c_xy^2 <= c_xx*c_yy")

    @property
    def is_zero(self) -> bool:
        return self.c_xx == 0 and self.c_yy == 0 and self.c_xy == 0

    def scaled(self, factor: float) -> "TechnicalDensities":
        return TechnicalDensities(self.c_xx * factor, self.c_yy * factor, self.c_xy * factor)

    @classmethod
    def from_fractional(cls, flux: float, s_amp: float = 0.0, s_phase: float = 0.0, s_cross: float = 0.0):
        """From one-sided fractional densities (rad^2/Hz) and the incident photon flux."""
        f = 4 * flux / 2
        return cls(f * s_amp, f * s_phase, f * s_cross)

    @classmethod
    def from_dbc(
        cls,
        flux: float,
        phase_dbc: float | None = None,
        amp_dbc: float | None = None,
        mode: CorrelationMode | str = CorrelationMode.PHASE_ONLY,
        cross: float = 0.0,
    ):
        """From dBc/Hz levels (10*log10 of one-sided rad^2/Hz).

        ``mode`` decides which levels are used and how the cross term is set;
        ``cross`` is the one-sided cross density for ``explicit`` mode.
        """
        mode = CorrelationMode(mode)
        s_p = 0.0 if phase_dbc is None else _db_to_linear(phase_dbc)
        s_a = 0.0 if amp_dbc is None else _db_to_linear(amp_dbc)
        if mode is CorrelationMode.PHASE_ONLY:
            return cls.from_fractional(flux, 0.0, s_p, 0.0)
        if mode is CorrelationMode.AMPLITUDE_ONLY:
            return cls.from_fractional(flux, s_a, 0.0, 0.0)
        if mode is CorrelationMode.MAX_POSITIVE_CORRELATION:
            return cls.from_fractional(flux, s_a, s_p, math.sqrt(s_a * s_p))
        return cls.from_fractional(flux, s_a, s_p, cross)

    @classmethod
    def from_coefficients(cls, params: TransducerParams, P_o: float, omega_pump: float | None = None):
        """From the per-flux coefficients stored in ``params.tech_noise`` at incident power ``P_o``."""
        omega_pump = params.omega_o - params.omega_m if omega_pump is None else omega_pump
        f = 4 * photon_flux(P_o, omega_pump)
        t = params.tech_noise
        return cls(f * t.c_xx, f * t.c_yy, f * t.c_xy)

    @classmethod
    def from_a_o(
        cls,
        params: TransducerParams,
        op: OperatingPoint,
        a_o: float | None = None,
        mode: CorrelationMode | str = CorrelationMode.PHASE_ONLY,
        amp_to_phase: float = 0.0,
    ):
        """Densities that reproduce ``n_eff_o = a_o * Gamma_o`` at ``op``.

        ``amp_to_phase`` is the linear ratio C_xx/C_yy used by the
        ``max_positive_correlation`` mode.
        """
        a_o = params.tech_noise.a_o if a_o is None else a_o
        mode = CorrelationMode(mode)
        if mode is CorrelationMode.PHASE_ONLY:
            unit = cls(0.0, 1.0, 0.0)
        elif mode is CorrelationMode.AMPLITUDE_ONLY:
            unit = cls(1.0, 0.0, 0.0)
        elif mode is CorrelationMode.MAX_POSITIVE_CORRELATION:
            unit = cls(amp_to_phase, 1.0, math.sqrt(amp_to_phase))
        else:
            raise ValueError("explicit densities cannot be inferred from a single slope")
        per_unit = n_eff_optical(params, op, unit)
        if per_unit <= 0:
            raise ValueError("chosen correlation mode produces no optical heating")
        return unit.scaled(a_o * op.Gamma_o / per_unit)

    def fractional_dbc(self, flux: float) -> dict[str, float]:
        """One-sided fractional levels in dBc/Hz (``-inf`` where zero)."""
        f = 2 * flux

        def db(x):
            return 10 * math.log10(x / f) if x > 0 else -math.inf

        return {"amplitude": db(self.c_xx), "phase": db(self.c_yy)}


@dataclass(frozen=True)
class NoiseSusceptibilities:
    """Amplitude/phase susceptibilities at the optical pump detuning (all complex in s)."""

    kappa: float
    kappa_ext: float
    Delta: float
    omega_m: float

    @property
    def phi(self) -> float:
        return math.atan(2 * self.Delta / self.kappa)

    def chi(self, omega):
        return chi_cavity(self.kappa, self.Delta, omega)

    def B_x(self, omega):
        p = np.exp(1j * self.phi)
        return np.conj(p) * self.chi(omega) + p * np.conj(self.chi(-np.asarray(omega)))

    def B_y(self, omega):
        p = np.exp(1j * self.phi)
        return np.conj(p) * self.chi(omega) - p * np.conj(self.chi(-np.asarray(omega)))

    @property
    def rho(self) -> complex:
        return 1 - self.kappa_ext / (self.kappa / 2 - 1j * self.Delta)

    def B_tilde(self, side: str, C: TechnicalDensities) -> complex:
        """Correlation kernel between membrane motion and pump fluctuations for one sideband."""
        s = _sign(side)
        w = s * self.omega_m
        chi = complex(self.chi(w))
        bx = complex(self.B_x(-w))
        by = complex(self.B_y(-w))
        rho = self.rho
        direct = self.kappa_ext * abs(chi) ** 2 * (bx * (C.c_xx + 1j * C.c_xy) + by * (1j * C.c_xy - C.c_yy))
        reflected = chi.conjugate() * (
            (bx * C.c_xx + 1j * by * C.c_xy) * (1 + rho) + (1j * bx * C.c_xy - by * C.c_yy) * (1 - rho)
        )
        return np.exp(-1j * self.phi) / 4 * (direct - reflected)


def _sign(side: str) -> int:
    if side in ("+", "upper", 1):
        return 1
    if side in ("-", "lower", -1):
        return -1
    raise ValueError("side must be '+' or '-'")


def _detuning(params: TransducerParams, at) -> float:
    d = getattr(at, "Delta_o", None)
    return -params.omega_m if d is None else d


def susceptibilities(params: TransducerParams, at) -> NoiseSusceptibilities:
    """Susceptibilities at the optical detuning carried by ``at`` (a PumpConfig or OperatingPoint)."""
    return NoiseSusceptibilities(params.kappa_o, params.kappa_o_ext, _detuning(params, at), params.omega_m)


def n_eff_optical(params: TransducerParams, at, C: TechnicalDensities) -> float:
    """Effective optical occupancy produced by pump amplitude/phase noise."""
    sus = susceptibilities(params, at)
    k = params.kappa_o
    A_o = gain(k, sus.Delta, params.omega_m)
    bx = complex(sus.B_x(params.omega_m))
    by = complex(sus.B_y(params.omega_m))
    bracket = abs(bx) ** 2 * C.c_xx + abs(by) ** 2 * C.c_yy + 2 * (bx * by.conjugate()).imag * C.c_xy
    return 0.25 * params.eps_pc * params.kappa_o_ext / k * A_o * k**2 / 4 * bracket


def white_floor(params: TransducerParams, at, C: TechnicalDensities, side: str = "+") -> float:
    """Frequency-independent excess noise around one sideband (transducer output, photons/s/Hz).

    ``white_floor(..., "+")`` is the optical output white noise used in the
    added-noise budget.
    """
    sus = susceptibilities(params, at)
    r = sus.rho
    t = params.kappa_o_ext * complex(sus.chi(_sign(side) * params.omega_m)) - 1
    val = (abs(r) ** 2 + abs(t) ** 2) * (C.c_xx + C.c_yy) - 2 * (
        r.conjugate() * t * (C.c_xx + 2j * C.c_xy - C.c_yy)
    ).real
    return 0.25 * params.eps_cl * params.eps_pc * val


def optical_output_white(params: TransducerParams, at, C: TechnicalDensities) -> float:
    return white_floor(params, at, C, "+")


@dataclass(frozen=True)
class SidebandSpectrum:
    """A modeled sideband spectrum.

    ``density = base + floor + amplitude * L + antisym * D`` with
    ``L = (G/2)^2 / ((G/2)^2 + d^2)`` and ``D = (G/2) d / ((G/2)^2 + d^2)``,
    ``d`` the offset from the sideband centre ``omega_c`` and ``G`` the linewidth.
    ``base`` is 1 at the transducer output.
    """

    side: str
    omega: np.ndarray
    density: np.ndarray
    normalization: str
    floor: float
    amplitude: float
    linewidth: float
    antisym: float
    n_m: float
    base: float = 1.0
    substrate: object = None
    omega_c: float = 0.0

    @property
    def center(self) -> str:
        return "upper" if self.side == "+" else "lower"


def sideband_spectrum(
    params: TransducerParams,
    op: OperatingPoint,
    C: TechnicalDensities,
    side: str,
    omega,
    n_m: float | None = None,
) -> SidebandSpectrum:
    """Output spectrum around ``+omega_m`` (``side="+"``) or ``-omega_m`` including noise correlations.

    ``omega`` is the grid in rad/s relative to the optical pump.
    """
    if op.Gamma_T <= 0:
        raise ValueError("total damping Gamma_T must be > 0")
    s = _sign(side)
    side = "+" if s > 0 else "-"
    n_m = membrane_occupancy(params, op) if n_m is None else n_m
    omega = np.asarray(omega, dtype=float)
    sus = susceptibilities(params, op)
    bt = sus.B_tilde(side, C) if not C.is_zero else 0j
    k2 = params.kappa_o**2 / 4
    ep = params.eps_pc
    K = params.eps_cl * params.kappa_o_ext / params.kappa_o * op.A_o * op.Gamma_o
    G = op.Gamma_T
    floor = white_floor(params, op, C, side) if not C.is_zero else 0.0
    delta = omega - s * params.omega_m
    d = G**2 / 4 + delta**2
    if s > 0:
        level = n_m - ep * k2 * bt.real
    else:
        level = op.n_min_o / op.A_o * (n_m + 1) + ep * k2 * bt.real
    if C.is_zero:
        density = 1 + K / d * (G * level)
    else:
        density = 1 + floor + K / d * (G * level - 2 * ep * (omega - s * params.omega_m) * k2 * bt.imag)
    return SidebandSpectrum(
        side=side,
        omega=omega,
        density=density,
        normalization="transducer-output",
        floor=floor,
        amplitude=4 * K * level / G,
        linewidth=G,
        antisym=-4 * K * ep * k2 * bt.imag / G,
        n_m=n_m,
        omega_c=s * params.omega_m,
    )


def squash_correction_ratio(params: TransducerParams, op: OperatingPoint, side: str) -> float:
    """Peak-amplitude change per unit white-floor excess for phase-only noise.

    Both the squash of the Lorentzian amplitude and the white floor are
    linear in the phase density, so their ratio is independent of it.
    Returns ``dQ/dS`` with ``Q = eps_cl eps_pc (k_ext/k) k^2 A_o (G_o/G_T) Re B~``.
    """
    unit = TechnicalDensities(0.0, 1.0, 0.0)
    sus = susceptibilities(params, op)
    dq = (
        params.eps_cl * params.eps_pc * params.kappa_o_ext / params.kappa_o * params.kappa_o**2
        * op.A_o * op.Gamma_o / op.Gamma_T * sus.B_tilde(side, unit).real
    )
    ds = white_floor(params, op, unit, side)
    return dq / ds


def n_eff_microwave(params: TransducerParams, Gamma_e: float) -> float:
    """Effective microwave occupancy ``a_e * Gamma_e + b_e``."""
    if Gamma_e < 0:
        raise ValueError("Gamma_e must be >= 0")
    return params.tech_noise.a_e * Gamma_e + params.tech_noise.b_e


def added_noise_budget(params: TransducerParams, op: OperatingPoint, C: TechnicalDensities) -> dict[str, float]:
    """Upconversion added noise split into additive contributions (photons/s/Hz)."""
    if op.Gamma_e <= 0:
        raise ZeroDivisionError("upconversion added noise needs Gamma_e > 0")
    eff = efficiency(params, op)
    if eff.eta_t <= 0:
        raise ZeroDivisionError("zero transduction efficiency")
    norm = op.A_e * eff.kappa_e_ratio * op.Gamma_e
    return {
        "n_th": params.gamma_m * params.n_th / norm,
        "n_eff_e": op.Gamma_e * op.n_eff_e / norm,
        "n_min_e": op.Gamma_e * op.n_min_e / norm,
        "n_eff_o": op.Gamma_o * op.n_eff_o / norm,
        "n_min_o": op.Gamma_o * op.n_min_o / norm,
        "lock": op.lock_product / norm,
        "white": white_floor(params, op, C, "+") / (op.A_e * op.A_o * eff.eta_t),
    }


def added_noise_full(params: TransducerParams, op: OperatingPoint, C: TechnicalDensities) -> float:
    """Input-referred upconversion added noise including the optical white floor."""
    return float(sum(added_noise_budget(params, op, C).values()))
