"""Fits of occupancy, efficiency and output-noise curves versus damping."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize_scalar
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from ..dynamics import operating_point
from ..params import TransducerParams
from ..transduction import efficiency
from .optimize import FitError, FitResult, propagate_fixed, weighted_least_squares
from .validation import as_features, as_sigma, require_points

OPTICAL_ONLY = "optical_only"
ELECTRO_OPTICAL = "electro_optical"


@dataclass(frozen=True)
class CoolingCurvePoint:
    Gamma_e: float
    Gamma_o: float
    n_m: float
    sigma: float
    source: tuple = ()

    def __post_init__(self):
        if self.Gamma_e < 0 or self.Gamma_o < 0:
            raise ValueError("damping rates must be >= 0")


def _points_to_arrays(points) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    X = np.array([[p.Gamma_e, p.Gamma_o] for p in points], dtype=float)
    y = np.array([p.n_m for p in points], dtype=float)
    s = np.array([p.sigma for p in points], dtype=float)
    return X, y, s


class _BathTerms:
    """Per-point backaction occupancies and linewidths, independent of the fitted coefficients."""

    def __init__(self, params: TransducerParams, X: np.ndarray, kappa_e: Callable | None = None):
        self.params = params
        self.Ge = X[:, 0]
        self.Go = X[:, 1]
        ops = []
        for ge, go in X:
            ke = None if kappa_e is None else kappa_e(ge)
            ops.append(operating_point(params, ge, go, kappa_e=ke))
        self.ops = ops
        self.nmin_e = np.array([o.n_min_e for o in ops])
        self.nmin_o = np.array([o.n_min_o for o in ops])
        self.A_e = np.array([o.A_e for o in ops])
        self.A_o = np.array([o.A_o for o in ops])
        self.kappa_e = np.array([o.kappa_e for o in ops])
        self.GT = np.array([o.Gamma_T for o in ops])
        self.lock = params.lock.product

    def numerator(self, n_th, a_o, a_e, b_e):
        p = self.params
        n_e = self.nmin_e + a_e * self.Ge + b_e
        n_o = self.nmin_o + a_o * self.Go
        return p.gamma_m * n_th + self.Ge * n_e + self.Go * n_o + self.lock


COOLING_FREE = {OPTICAL_ONLY: ("n_th", "a_o"), ELECTRO_OPTICAL: ("n_eff_e",)}


def _cooling_model(terms: _BathTerms, names: Sequence[str], fixed: dict):
    def model(theta):
        v = {**fixed, **dict(zip(names, theta))}
        return terms.numerator(v["n_th"], v["a_o"], 0.0, v["n_eff_e"]) / terms.GT

    return model


def fit_cooling_curve(
    points,
    params: TransducerParams,
    mode: str = OPTICAL_ONLY,
    fixed: dict | None = None,
    fixed_cov: np.ndarray | None = None,
) -> FitResult:
    """Fit the bath-average occupancy model to measured occupancies.

    ``optical_only`` frees ``(n_th, a_o)``; ``electro_optical`` frees
    ``n_eff_e`` (a constant microwave technical occupancy) with ``n_th`` and
    ``a_o`` held at ``fixed``.  ``fixed_cov`` (ordered as the held
    parameters ``n_th, a_o``) is propagated into the reported covariance.
    """
    if mode not in COOLING_FREE:
        raise ValueError(f"unknown mode {mode!r}")
    X, y, s = _points_to_arrays(points)
    require_points(len(y), 4, "cooling-curve fit")
    names = COOLING_FREE[mode]
    defaults = {"n_th": params.n_th, "a_o": params.tech_noise.a_o, "n_eff_e": 0.0}
    held = {**defaults, **(fixed or {})}
    held = {k: v for k, v in held.items() if k not in names}
    if mode == OPTICAL_ONLY and np.any(X[:, 0] > 0) and "n_eff_e" not in (fixed or {}):
        raise FitError("optical-only fit with microwave damping needs n_eff_e in fixed")
    terms = _BathTerms(params, X)
    # closed-form start: the model is linear in every coefficient
    cols = {
        "n_th": params.gamma_m / terms.GT,
        "a_o": terms.Go**2 / terms.GT,
        "n_eff_e": terms.Ge / terms.GT,
    }
    base = _cooling_model(terms, names, held)(np.zeros(len(names)))
    A = np.stack([cols[n] for n in names], axis=1) / s[:, None]
    p0, *_ = np.linalg.lstsq(A, (y - base) / s, rcond=None)
    p0 = np.where(p0 > 0, p0, 1e-3 * np.abs(p0).max() + 1e-12)
    res = weighted_least_squares(_cooling_model(terms, names, held), y, p0, names, sigma=s)
    res.extra = {"mode": mode, "fixed": {k: float(v) for k, v in held.items()}}
    if fixed_cov is not None and mode == ELECTRO_OPTICAL:
        fnames = ("n_th", "a_o")
        phi = np.array([held[n] for n in fnames])

        def full(theta, phi_):
            return _cooling_model(terms, names, {**held, **dict(zip(fnames, phi_))})(theta)

        res.covariance = propagate_fixed(res, full, phi, np.asarray(fixed_cov), s)
    return res


class CoolingCurve(BaseEstimator, RegressorMixin):
    """Estimator form of :func:`fit_cooling_curve`; ``X`` columns are (Gamma_e, Gamma_o) in rad/s."""

    def __init__(self, params: TransducerParams | None = None, mode: str = OPTICAL_ONLY,
                 fixed: dict | None = None, fixed_cov=None):
        self.params = params
        self.mode = mode
        self.fixed = fixed
        self.fixed_cov = fixed_cov

    def fit(self, X, y, sigma=None):
        X = as_features(X, 2)
        sigma = as_sigma(sigma, np.shape(y), warn=True)
        sigma = np.ones(len(y)) if sigma is None else sigma
        pts = [CoolingCurvePoint(a, b, v, e) for (a, b), v, e in zip(X, np.asarray(y, float), sigma)]
        self.result_ = fit_cooling_curve(pts, self.params, self.mode, self.fixed, self.fixed_cov)
        self.values_ = {**self.result_.extra["fixed"], **self.result_.as_dict()}
        return self

    def predict(self, X):
        check_is_fitted(self, "result_")
        X = as_features(X, 2)
        names = COOLING_FREE[self.mode]
        terms = _BathTerms(self.params, X)
        return _cooling_model(terms, names, self.values_)([self.values_[n] for n in names])


# -- efficiency -------------------------------------------------------------


def cooperativity_shape(Gamma_e, Gamma_o, gamma_m, gamma_lock=0.0):
    gt = Gamma_e + Gamma_o + gamma_m + gamma_lock
    return 4 * Gamma_e * Gamma_o / gt**2


def overcoupling_polynomial(Gamma_e, ratio, deg: int = 2) -> np.polynomial.Polynomial:
    """Polynomial fit of kappa_e_ext/kappa_e versus Gamma_e."""
    return np.polynomial.Polynomial.fit(np.asarray(Gamma_e, float), np.asarray(ratio, float), deg)


def fit_efficiency_curve(
    Gamma_e,
    Gamma_o,
    eta,
    sigma=None,
    params: TransducerParams | None = None,
    mode: str = "eta",
    kappa_model: Callable | None = None,
) -> FitResult:
    """Fit ``eta = eta_M * 4 Ge Go / Gamma_T^2``.

    In ``zeta`` mode the measured efficiencies are first divided by the
    microwave overcoupling ratio at each ``Gamma_e`` (from ``kappa_model``,
    a callable Gamma_e -> kappa_e, or the parameter table) and the fitted
    coefficient is ``zeta_M``.
    """
    Ge, Go, y = (np.atleast_1d(np.asarray(a, float)) for a in (Gamma_e, Gamma_o, eta))
    require_points(y.size, 1 if mode == "eta" else 3, "efficiency fit")
    s = as_sigma(sigma, y.shape)
    gm = params.gamma_m if params is not None else 0.0
    gl = params.lock.gamma_lock if params is not None else 0.0
    shape = cooperativity_shape(Ge, Go, gm, gl)
    name = "eta_M"
    if mode == "zeta":
        if params is None:
            raise FitError("zeta mode needs params for the overcoupling ratio")
        if kappa_model is None:
            ratio = np.array([params.kappa_e_ext / operating_point(params, g, 1.0).kappa_e for g in Ge])
        else:
            ratio = params.kappa_e_ext / np.array([kappa_model(g) for g in Ge])
        y = y / ratio
        s = None if s is None else s / ratio
        name = "zeta_M"
    elif mode != "eta":
        raise ValueError("mode must be 'eta' or 'zeta'")
    w = np.ones_like(y) if s is None else 1 / s**2
    p0 = float(np.sum(w * shape * y) / np.sum(w * shape**2))
    if y.size == 1:
        return FitResult((name,), np.array([p0]), np.zeros((1, 1)), 0.0, 0, True, 0)
    res = weighted_least_squares(lambda p: p[0] * shape, y, [p0], [name], sigma=s)
    res.extra = {"mode": mode}
    return res


class EfficiencyCurve(BaseEstimator, RegressorMixin):
    def __init__(self, params: TransducerParams | None = None, mode: str = "eta", kappa_model=None):
        self.params = params
        self.mode = mode
        self.kappa_model = kappa_model

    def fit(self, X, y, sigma=None):
        X = as_features(X, 2)
        self.result_ = fit_efficiency_curve(X[:, 0], X[:, 1], y, sigma, self.params, self.mode, self.kappa_model)
        return self

    def predict(self, X):
        check_is_fitted(self, "result_")
        X = as_features(X, 2)
        gm = self.params.gamma_m if self.params is not None else 0.0
        gl = self.params.lock.gamma_lock if self.params is not None else 0.0
        return self.result_.values[0] * cooperativity_shape(X[:, 0], X[:, 1], gm, gl)


# -- upper-sideband output noise and added noise -------------------------------

ADDED_NOISE_FREE = ("a_e", "b_e", "n_th")


def _output_model(terms: _BathTerms, names, fixed):
    p = terms.params
    pref = 4 * p.eps_cl * terms.A_o * p.kappa_o_ext / p.kappa_o * terms.Go / terms.GT**2

    def model(theta):
        v = {**fixed, **dict(zip(names, theta))}
        return pref * terms.numerator(v["n_th"], v["a_o"], v["a_e"], v["b_e"])

    return model


def fit_added_noise_curve(
    Gamma_e,
    Gamma_o,
    N_out,
    sigma=None,
    params: TransducerParams | None = None,
    free: Sequence[str] = ADDED_NOISE_FREE,
    fixed: dict | None = None,
) -> FitResult:
    """Fit the upper-sideband output amplitude (transducer output) versus damping.

    Free parameters default to ``a_e, b_e, n_th``; the rest come from
    ``fixed`` or ``params``.  The lock backaction product is always included.
    """
    Ge, Go, y = (np.atleast_1d(np.asarray(a, float)) for a in (Gamma_e, Gamma_o, N_out))
    Go = np.broadcast_to(Go, Ge.shape)
    require_points(y.size, 4, "added-noise fit")
    s = as_sigma(sigma, y.shape, warn=True)
    names = tuple(free)
    defaults = {"n_th": params.n_th, "a_o": params.tech_noise.a_o,
                "a_e": params.tech_noise.a_e, "b_e": params.tech_noise.b_e}
    held = {k: v for k, v in {**defaults, **(fixed or {})}.items() if k not in names}
    terms = _BathTerms(params, np.stack([Ge, Go], axis=1))
    model = _output_model(terms, names, held)
    # linear start
    base = model(np.zeros(len(names)))
    cols = []
    for i in range(len(names)):
        e = np.zeros(len(names))
        e[i] = 1.0
        cols.append(model(e) - base)
    A = np.stack(cols, axis=1)
    ws = np.ones_like(y) if s is None else s
    p0, *_ = np.linalg.lstsq(A / ws[:, None], (y - base) / ws, rcond=None)
    res = weighted_least_squares(model, y, p0, names, sigma=s)
    res.extra = {"fixed": {k: float(v) for k, v in held.items()}}
    return res


def added_noise_from_fit(params: TransducerParams, res: FitResult, Gamma_e, Gamma_o):
    """Added-noise curve implied by an output-noise fit: N_out / (A_e A_o eta_t)."""
    Ge = np.atleast_1d(np.asarray(Gamma_e, float))
    Go = np.broadcast_to(np.asarray(Gamma_o, float), Ge.shape)
    vals = {**res.extra.get("fixed", {}), **res.as_dict()}
    terms = _BathTerms(params, np.stack([Ge, Go], axis=1))
    N = _output_model(terms, tuple(vals), vals)([vals[k] for k in vals])
    eta = np.array([efficiency(params, op).eta_t for op in terms.ops])
    return N / (terms.A_e * terms.A_o * eta)


def added_noise_minimum(params: TransducerParams, res: FitResult, Gamma_o, bounds) -> tuple[float, float]:
    """(Gamma_e, N_add) at the minimum of the fitted added-noise curve within ``bounds`` (rad/s)."""
    f = lambda g: float(added_noise_from_fit(params, res, g, Gamma_o)[0])
    sol = minimize_scalar(f, bounds=bounds, method="bounded", options={"xatol": 1e-3})
    return float(sol.x), float(sol.fun)


class AddedNoiseCurve(BaseEstimator, RegressorMixin):
    def __init__(self, params: TransducerParams | None = None, free=ADDED_NOISE_FREE, fixed=None):
        self.params = params
        self.free = free
        self.fixed = fixed

    def fit(self, X, y, sigma=None):
        X = as_features(X, 2)
        self.result_ = fit_added_noise_curve(X[:, 0], X[:, 1], y, sigma, self.params, self.free, self.fixed)
        return self

    def predict(self, X):
        check_is_fitted(self, "result_")
        X = as_features(X, 2)
        vals = {**self.result_.extra["fixed"], **self.result_.as_dict()}
        terms = _BathTerms(self.params, X)
        return _output_model(terms, tuple(vals), vals)([vals[k] for k in vals])
