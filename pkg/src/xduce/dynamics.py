"""Damping rates, backaction limits, transducer gains and the membrane occupancy."""

from __future__ import annotations

import dataclasses
import warnings
from dataclasses import dataclass

from scipy.optimize import brentq

from .params import TransducerParams, kappa_e_at_power
from .resonator import PumpConfig, intracavity_photons, mean_photon_number


class WeakCouplingWarning(UserWarning):
    """Raised when g*|amplitude| is not small compared with the cavity linewidth."""


def _sideband_factor(kappa, Delta, omega_m):
    """Anti-Stokes minus Stokes Lorentzian weights (per unit g^2 |amplitude|^2)."""
    cool = kappa / (kappa**2 / 4 + (omega_m + Delta) ** 2)
    heat = kappa / (kappa**2 / 4 + (omega_m - Delta) ** 2)
    return cool - heat


def damping_rate(g, n_photon, kappa, Delta, omega_m):
    """Net beamsplitter damping g^2 n (cool - heat); negative for blue detuning."""
    if g * n_photon**0.5 > 0.1 * kappa:
        warnings.warn("weak-coupling condition g|a| << kappa violated", WeakCouplingWarning, stacklevel=3)
    return g**2 * n_photon * _sideband_factor(kappa, Delta, omega_m)


def gamma_opt(params: TransducerParams, pump: PumpConfig) -> float:
    """Optomechanical damping rate (rad/s) for the optical pump in ``pump``."""
    n = mean_photon_number(pump, params, "optical")
    return damping_rate(params.g_o, n, params.kappa_o, pump.Delta_o, params.omega_m)


def microwave_photons(params: TransducerParams, pump: PumpConfig) -> float:
    """Self-consistent intracavity microwave photon number.

    The linewidth depends on the photon number through the internal-loss
    table, so ``n = flux * kappa_ext / (kappa_e(n)^2/4 + Delta^2)`` is
    solved as a scalar fixed point (unique: the right side decreases in n).
    """
    if pump.P_e == 0:
        return 0.0

    def rhs(n):
        ke = kappa_e_at_power(params, n)
        return intracavity_photons(pump.P_e, pump.omega_pump_e(params), params.kappa_e_ext, ke, pump.Delta_e)

    upper = rhs(0.0)
    return brentq(lambda n: n - rhs(n), 0.0, upper, xtol=1e-12 * upper, rtol=1e-14)


def gamma_em(params: TransducerParams, pump: PumpConfig) -> float:
    """Electromechanical damping rate (rad/s), with the power-dependent linewidth applied."""
    n = microwave_photons(params, pump)
    if n == 0:
        return 0.0
    return damping_rate(params.g_e, n, kappa_e_at_power(params, n), pump.Delta_e, params.omega_m)


def photons_for_gamma_e(params: TransducerParams, gamma_e: float, Delta_e: float | None = None) -> float:
    """Microwave photon number that produces damping ``gamma_e`` (inverse of :func:`gamma_em`)."""
    Delta_e = -params.omega_m if Delta_e is None else Delta_e
    if gamma_e <= 0:
        return 0.0

    def excess(n):
        return params.g_e**2 * n * _sideband_factor(kappa_e_at_power(params, n), Delta_e, params.omega_m) - gamma_e

    hi = 1.0
    while excess(hi) < 0:
        hi *= 4
        if hi > 1e30:
            raise ValueError("damping rate unreachable with the given coupling")
    return brentq(excess, 0.0, hi, xtol=1e-12 * hi, rtol=1e-14)


def power_for_gamma_o(params: TransducerParams, gamma_o: float, Delta_o: float | None = None) -> float:
    """Incident optical pump power (W) giving damping ``gamma_o``."""
    Delta_o = -params.omega_m if Delta_o is None else Delta_o
    ref = 1e-6  # W; the rate is linear in power, keep the reference in the weak-coupling regime
    unit = gamma_opt(params, PumpConfig(P_o=ref, Delta_o=Delta_o)) / ref
    return gamma_o / unit


def power_for_gamma_e(params: TransducerParams, gamma_e: float, Delta_e: float | None = None) -> float:
    """Incident microwave pump power (W) giving damping ``gamma_e``."""
    Delta_e = -params.omega_m if Delta_e is None else Delta_e
    n = photons_for_gamma_e(params, gamma_e, Delta_e)
    if n == 0:
        return 0.0
    unit = intracavity_photons(1.0, params.omega_e + Delta_e, params.kappa_e_ext,
                               kappa_e_at_power(params, n), Delta_e)
    return n / unit


def n_min(kappa: float, Delta: float, omega_m: float) -> float:
    """Backaction-limited occupancy ((kappa/2)^2 + (Delta+w_m)^2) / (-4 Delta w_m)."""
    if Delta >= 0:
        raise ValueError("backaction occupancy requires red detuning (Delta < 0)")
    return ((kappa / 2) ** 2 + (Delta + omega_m) ** 2) / (-4 * Delta * omega_m)


def gain(kappa: float, Delta: float, omega_m: float) -> float:
    """Transducer gain factor -((kappa/2)^2 + (Delta-w_m)^2) / (4 Delta w_m); equals 1 + n_min."""
    if Delta >= 0:
        raise ValueError("gain factor requires red detuning (Delta < 0)")
    return -((kappa / 2) ** 2 + (Delta - omega_m) ** 2) / (4 * Delta * omega_m)


@dataclass(frozen=True)
class OperatingPoint:
    """Damping rates and bath occupancies at one pump setting (rates in rad/s)."""

    Gamma_e: float
    Gamma_o: float
    gamma_m: float
    kappa_e: float
    n_min_e: float
    n_min_o: float
    n_e: float
    n_o: float
    gamma_lock: float = 0.0
    lock_product: float = 0.0
    Delta_e: float | None = None
    Delta_o: float | None = None

    def __post_init__(self):
        if min(self.n_min_e, self.n_min_o, self.n_e, self.n_o, self.lock_product) < 0:
            raise ValueError("bath occupancies must be >= 0")

    @property
    def Gamma_T(self) -> float:
        return self.Gamma_e + self.Gamma_o + self.gamma_m + self.gamma_lock

    @property
    def A_e(self) -> float:
        return 1.0 + self.n_min_e

    @property
    def A_o(self) -> float:
        return 1.0 + self.n_min_o

    @property
    def stable(self) -> bool:
        return self.Gamma_T > 0

    @property
    def n_eff_e(self) -> float:
        return self.n_e - self.n_min_e

    @property
    def n_eff_o(self) -> float:
        return self.n_o - self.n_min_o

    def replace(self, **changes) -> "OperatingPoint":
        return dataclasses.replace(self, **changes)


def operating_point(
    params: TransducerParams,
    Gamma_e: float,
    Gamma_o: float,
    kappa_e: float | None = None,
    Delta_e: float | None = None,
    Delta_o: float | None = None,
    include_lock: bool = True,
) -> OperatingPoint:
    """Assemble an :class:`OperatingPoint` from damping rates.

    Bath occupancies are ``n_o = n_min_o + a_o Gamma_o`` and
    ``n_e = n_min_e + a_e Gamma_e + b_e``.  When ``kappa_e`` is omitted it
    follows from the internal-loss table at the photon number needed for
    ``Gamma_e``.
    """
    Delta_e = -params.omega_m if Delta_e is None else Delta_e
    Delta_o = -params.omega_m if Delta_o is None else Delta_o
    if kappa_e is None:
        kappa_e = kappa_e_at_power(params, photons_for_gamma_e(params, Gamma_e, Delta_e))
    tech = params.tech_noise
    nme = n_min(kappa_e, Delta_e, params.omega_m)
    nmo = n_min(params.kappa_o, Delta_o, params.omega_m)
    return OperatingPoint(
        Gamma_e=Gamma_e,
        Gamma_o=Gamma_o,
        gamma_m=params.gamma_m,
        kappa_e=kappa_e,
        n_min_e=nme,
        n_min_o=nmo,
        n_e=nme + tech.a_e * Gamma_e + tech.b_e,
        n_o=nmo + tech.a_o * Gamma_o,
        gamma_lock=params.lock.gamma_lock if include_lock else 0.0,
        lock_product=params.lock.product if include_lock else 0.0,
        Delta_e=Delta_e,
        Delta_o=Delta_o,
    )


def operating_point_from_pumps(params: TransducerParams, pump: PumpConfig, **kw) -> OperatingPoint:
    n = microwave_photons(params, pump)
    kappa_e = kappa_e_at_power(params, n)
    return operating_point(
        params, gamma_em(params, pump), gamma_opt(params, pump), kappa_e=kappa_e,
        Delta_e=pump.Delta_e, Delta_o=pump.Delta_o, **kw,
    )


def bath_terms(params: TransducerParams, op: OperatingPoint) -> dict[str, float]:
    """Rate-weighted bath contributions (rad/s) to the membrane occupancy numerator."""
    return {
        "thermal": params.gamma_m * params.n_th,
        "microwave": op.Gamma_e * op.n_e,
        "optical": op.Gamma_o * op.n_o,
        "lock": op.lock_product,
    }


def membrane_occupancy(params: TransducerParams, op: OperatingPoint) -> float:
    """Membrane phonon occupancy: the damping-weighted average of the coupled baths."""
    if op.Gamma_T <= 0:
        raise ValueError("total damping must be > 0")
    return sum(bath_terms(params, op).values()) / op.Gamma_T
