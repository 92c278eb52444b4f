"""Detection-chain and mechanical calibrations: temperature sweeps, ringdowns and four-point efficiency."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..constants import HBAR, K_B
from ..dynamics import _sideband_factor
from ..params import TransducerParams, kappa_e_at_power
from ..resonator import intracavity_photons
from .optimize import FitError, FitResult, weighted_least_squares
from .validation import as_sigma, require_points


def fit_gamma_vs_temperature(T, gamma_m, sigma=None) -> FitResult:
    """Straight-line fit ``gamma_m = a_gamma T + b_gamma`` (rates in rad/s, T in K)."""
    T = np.asarray(T, float)
    g = np.asarray(gamma_m, float)
    require_points(T.size, 2, "dissipation-vs-temperature fit")
    if np.ptp(T) == 0:
        raise FitError("degenerate abscissa: all temperatures equal")
    s = as_sigma(sigma, g.shape)
    w = np.ones_like(g) if s is None else 1 / s
    A = np.stack([T, np.ones_like(T)], axis=1)
    p0, *_ = np.linalg.lstsq(A * w[:, None], g * w, rcond=None)
    if T.size == 2:
        return FitResult(("a_gamma", "b_gamma"), p0, np.zeros((2, 2)), 0.0, 0, True, 0)
    return weighted_least_squares(lambda p: p[0] * T + p[1], g, p0, ("a_gamma", "b_gamma"), sigma=s)


def area_prefactor(params: TransducerParams, Gamma_o: float, Gamma_T: float, A_o: float) -> float:
    """``4 eps_CL (kappa_ext/kappa) A_o Gamma_o/Gamma_T``, the detector-independent part of the area coefficients."""
    return 4 * params.eps_cl * params.kappa_o_ext / params.kappa_o * A_o * Gamma_o / Gamma_T


def fit_temperature_sweep(
    T,
    area,
    a_gamma: float,
    b_gamma: float,
    sigma=None,
    exclude=(),
    params: TransducerParams | None = None,
    Gamma_o: float | None = None,
    Gamma_T: float | None = None,
    n_min_o: float | None = None,
    base_area: float | None = None,
) -> FitResult:
    """Fit peak area ``N Gamma_T = a_xi (a_gamma T^2 + b_gamma T) + b_xi``.

    ``exclude`` lists indices of points to leave out (never chosen
    automatically).  With ``params`` and the sweep's damping the chain
    efficiency is derived twice, from ``a_xi`` and from ``b_xi``.  The
    equilibration temperature is where the fitted area equals
    ``base_area`` (default: the area of the coldest point).
    """
    T = np.asarray(T, float)
    y = np.asarray(area, float)
    s_all = as_sigma(sigma, y.shape, warn=True)
    keep = np.ones(T.size, bool)
    keep[list(exclude)] = False
    require_points(int(keep.sum()), 4, "temperature-sweep fit")
    x = a_gamma * T[keep] ** 2 + b_gamma * T[keep]
    s = None if s_all is None else s_all[keep]
    w = np.ones(x.size) if s is None else 1 / s
    A = np.stack([x, np.ones_like(x)], axis=1)
    p0, *_ = np.linalg.lstsq(A * w[:, None], y[keep] * w, rcond=None)
    res = weighted_least_squares(lambda p: p[0] * x + p[1], y[keep], p0, ("a_xi", "b_xi"), sigma=s)
    a_xi, b_xi = res.values
    cov = res.covariance
    extra: dict = {"excluded": [int(i) for i in np.flatnonzero(~keep)]}

    base = float(y[np.argmin(T)]) if base_area is None else float(base_area)
    # T_eq: positive root of a_xi (a_g T^2 + b_g T) + b_xi - base = 0
    c = (base - b_xi) / a_xi
    if a_gamma == 0:
        t_eq = c / b_gamma
        dt_dc = 1 / b_gamma
    else:
        disc = b_gamma**2 + 4 * a_gamma * c
        if disc < 0:
            t_eq, dt_dc = float("nan"), float("nan")
        else:
            t_eq = (-b_gamma + np.sqrt(disc)) / (2 * a_gamma)
            dt_dc = 1 / np.sqrt(disc)
    grad = dt_dc * np.array([-(base - b_xi) / a_xi**2, -1 / a_xi])
    extra["T_eq"] = float(t_eq)
    extra["T_eq_err"] = float(np.sqrt(grad @ cov @ grad))

    if params is not None and Gamma_o is not None and Gamma_T is not None:
        from ..dynamics import n_min as _n_min

        nmo = _n_min(params.kappa_o, -params.omega_m, params.omega_m) if n_min_o is None else n_min_o
        pref = area_prefactor(params, Gamma_o, Gamma_T, 1 + nmo)
        coef_a = pref * K_B / (HBAR * params.omega_m)
        coef_b = pref * (params.lock.product + Gamma_o * nmo)
        extra["xi_from_a"] = float(a_xi / coef_a)
        extra["xi_from_a_err"] = float(np.sqrt(cov[0, 0]) / coef_a)
        if coef_b > 0:
            extra["xi_from_b"] = float(b_xi / coef_b)
            extra["xi_from_b_err"] = float(np.sqrt(cov[1, 1]) / coef_b)
    res.extra = extra
    return res


def synth_temperature_sweep(T, a_gamma, b_gamma, xi, params: TransducerParams, Gamma_o, Gamma_T, n_min_o=None):
    """Noise-free areas predicted at chain efficiency ``xi``."""
    from ..dynamics import n_min as _n_min

    nmo = _n_min(params.kappa_o, -params.omega_m, params.omega_m) if n_min_o is None else n_min_o
    pref = xi * area_prefactor(params, Gamma_o, Gamma_T, 1 + nmo)
    T = np.asarray(T, float)
    return pref * K_B / (HBAR * params.omega_m) * (a_gamma * T**2 + b_gamma * T) + pref * (
        params.lock.product + Gamma_o * nmo
    )


@dataclass(frozen=True)
class RingdownTrace:
    t: np.ndarray
    amplitude: np.ndarray
    power: float = 0.0


def fit_decay(t, amplitude, sigma=None, max_reduced_chi2: float = 10.0) -> FitResult:
    """Fit ``amplitude = A0 exp(-Gamma_T t / 2) + offset``; rejects traces that are not exponential.

    The offset is fixed at zero when no sigma is supplied and the trace is
    exactly exponential.  A trace is rejected when the residuals show
    structure: reduced chi-square above ``max_reduced_chi2`` (with sigma)
    or a residual run test failing badly (without).
    """
    t = np.asarray(t, float)
    a = np.asarray(amplitude, float)
    require_points(t.size, 10, "ringdown fit")
    if np.any(a <= 0):
        pos = a > 0
        if pos.sum() < 10:
            raise FitError("ringdown amplitude must be positive")
    s = as_sigma(sigma, a.shape)
    pos = a > 0
    slope, icpt = np.polyfit(t[pos], np.log(a[pos]), 1)
    p0 = [np.exp(icpt), -2 * slope]
    res = weighted_least_squares(lambda p: p[0] * np.exp(-p[1] * t / 2), a, p0, ("A0", "Gamma_T"), sigma=s)
    r = a - res["A0"] * np.exp(-res["Gamma_T"] * t / 2)
    scale = np.max(np.abs(a))
    if s is not None:
        if res.reduced_chi2 > max_reduced_chi2:
            raise FitError(f"trace is not exponential (reduced chi2 {res.reduced_chi2:.3g})")
    elif np.max(np.abs(r)) > 1e-9 * scale:
        # Wald-Wolfowitz runs test on residual signs
        sgn = r > 0
        n1, n2 = sgn.sum(), (~sgn).sum()
        runs = 1 + np.count_nonzero(sgn[1:] != sgn[:-1])
        if n1 and n2:
            mu = 2 * n1 * n2 / (n1 + n2) + 1
            var = (mu - 1) * (mu - 2) / (n1 + n2 - 1)
            z = (runs - mu) / np.sqrt(var) if var > 0 else 0.0
            if z < -4:
                raise FitError(f"trace is not exponential (residual runs z = {z:.2f})")
    return res


def ringdown_slope_to_g_e(params: TransducerParams, slope: float, Delta_e: float | None = None) -> float:
    """Electromechanical coupling (rad/s) from d Gamma_T / d P_e (rad/s/W) at low power."""
    Delta_e = -params.omega_m if Delta_e is None else Delta_e
    ke = kappa_e_at_power(params, 0.0)
    per_watt = intracavity_photons(1.0, params.omega_e + Delta_e, params.kappa_e_ext, ke, Delta_e)
    factor = _sideband_factor(ke, Delta_e, params.omega_m)
    if slope <= 0:
        raise FitError("damping must increase with pump power")
    return float(np.sqrt(slope / (per_watt * factor)))


def fit_ringdown(traces, params: TransducerParams | None = None, sigmas=None) -> FitResult:
    """Per-trace decay rates, then ``Gamma_T = gamma_m + slope * P_e``.

    Returns the linear fit (``gamma_m``, ``slope``) with the per-trace rates
    and, when ``params`` is given, the implied ``g_e`` in ``extra``.
    """
    traces = list(traces)
    require_points(len(traces), 2, "ringdown power series")
    sigmas = [None] * len(traces) if sigmas is None else sigmas
    fits = [fit_decay(tr.t, tr.amplitude, s) for tr, s in zip(traces, sigmas)]
    P = np.array([tr.power for tr in traces])
    G = np.array([f["Gamma_T"] for f in fits])
    Gs = np.array([f.error("Gamma_T") for f in fits])
    if np.ptp(P) == 0:
        raise FitError("degenerate abscissa: all pump powers equal")
    exact = np.all(Gs == 0) or len(traces) == 2
    A = np.stack([np.ones_like(P), P], axis=1)
    p0, *_ = np.linalg.lstsq(A, G, rcond=None)
    if exact:
        res = FitResult(("gamma_m", "slope"), p0, np.zeros((2, 2)), 0.0, 0, True, 0)
        if len(traces) == 2 and np.all(Gs > 0):
            J = np.linalg.inv(A)
            res.covariance = J @ np.diag(Gs**2) @ J.T
    else:
        res = weighted_least_squares(lambda p: p[0] + p[1] * P, G, p0, ("gamma_m", "slope"), sigma=np.where(Gs > 0, Gs, Gs.max()))
    res.extra = {"Gamma_T": G.tolist(), "Gamma_T_err": Gs.tolist(), "power": P.tolist()}
    if params is not None:
        res.extra["g_e"] = ringdown_slope_to_g_e(params, res["slope"])
    res.converged = res.converged and all(f.converged for f in fits)
    return res


def compose_four_point(eta_up, A_e, A_o, eps_pl, alpha, beta, gamma, delta, eta_down=None, s_ee_off=1.0, s_oo_off=1.0):
    """Forward model of the four network-analyzer measurements at given path factors.

    ``|S_oe|^2 = A_e A_o eta_up`` and likewise downward; the optical prompt
    reflection picks up the pump/LO modematching ``eps_pl``.
    """
    eta_down = eta_up if eta_down is None else eta_down
    return {
        "oe": alpha * A_e * A_o * eta_up * delta,
        "eo": gamma * A_e * A_o * eta_down * beta,
        "ee": alpha * s_ee_off * beta,
        "oo": eps_pl * gamma * s_oo_off * delta,
    }


def efficiency_four_point(meas_oe, meas_eo, meas_ee, meas_oo, eps_pl: float = 1.0, A_e: float = 1.0, A_o: float = 1.0) -> float:
    """Bidirectional efficiency from four path-factor-contaminated measurements.

    Every path factor appears once in the numerator and once in the
    denominator of the measurement ratio, so it cancels.
    """
    m = np.array([meas_oe, meas_eo, meas_ee, meas_oo], dtype=float)
    if np.any(m <= 0):
        raise ValueError("all four measurements must be > 0")
    ratio = np.sqrt((m[0] / m[2]) * (m[1] / m[3]))
    return float(np.sqrt(eps_pl) * ratio / (A_e * A_o))
