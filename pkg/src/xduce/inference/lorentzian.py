"""Peak fits to sideband spectra: single Lorentzian or two interfering modes, optional dispersive term."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from .optimize import FitError, FitResult, weighted_least_squares
from .validation import as_abscissa, as_sigma

SINGLE = "single"
COHERENT_DOUBLE = "coherent_double"


def _lorentz(delta, width):
    h2 = (width / 2) ** 2
    return h2 / (h2 + delta**2)


def _dispersive(delta, width):
    h = width / 2
    return h * delta / (h**2 + delta**2)


def _field(delta, width):
    return (width / 2) / (width / 2 - 1j * delta)


def single_model(omega, floor, amplitude, center, width, antisym=0.0):
    d = omega - center
    return floor + amplitude * _lorentz(d, width) + antisym * _dispersive(d, width)


def coherent_double_model(omega, floor, amplitude, center, width, rel_amp, center_2, width_2, phase, antisym=0.0):
    d = omega - center
    f = _field(d, width) + rel_amp * np.exp(1j * phase) * _field(omega - center_2, width_2)
    return floor + amplitude * np.abs(f) ** 2 + antisym * _dispersive(d, width)


def _names(model: str, antisym: bool) -> list[str]:
    base = ["floor", "amplitude", "center", "width"]
    if model == COHERENT_DOUBLE:
        base += ["rel_amp", "center_2", "width_2", "phase"]
    elif model != SINGLE:
        raise ValueError(f"unknown peak model {model!r}")
    return base + (["antisym"] if antisym else [])


def _evaluate(model: str, omega, p: dict):
    if model == SINGLE:
        return single_model(omega, p["floor"], p["amplitude"], p["center"], p["width"], p.get("antisym", 0.0))
    return coherent_double_model(
        omega, p["floor"], p["amplitude"], p["center"], p["width"], p["rel_amp"],
        p["center_2"], p["width_2"], p["phase"], p.get("antisym", 0.0),
    )


def _smooth(y):
    if y.size < 3:
        return y
    return np.convolve(y, np.ones(3) / 3, mode="same")


def initial_guess(omega, psd) -> dict[str, float]:
    """Seed from the peak bin and the half-maximum crossings."""
    ys = _smooth(psd)
    floor = float(np.percentile(psd, 25))
    i = int(np.argmax(ys[1:-1])) + 1 if ys.size > 2 else int(np.argmax(ys))
    amp = float(ys[i] - floor)
    spacing = float(np.median(np.abs(np.diff(omega))))
    if amp <= 0:
        return {"floor": floor, "amplitude": 0.0, "center": float(omega[i]), "width": 5 * spacing}
    half = floor + amp / 2
    lo = i
    while lo > 0 and ys[lo] > half:
        lo -= 1
    hi = i
    while hi < ys.size - 1 and ys[hi] > half:
        hi += 1
    width = max(abs(omega[hi] - omega[lo]), 2 * spacing)
    return {"floor": floor, "amplitude": amp, "center": float(omega[i]), "width": float(width)}


def fit_lorentzian(
    omega,
    psd,
    sigma=None,
    model: str = SINGLE,
    antisym: bool = False,
    p0: dict | None = None,
    fixed: dict | None = None,
) -> FitResult:
    """Fit a sideband peak.

    Parameters are ``floor, amplitude, center, width`` (rates in rad/s),
    plus ``rel_amp, center_2, width_2, phase`` for the two-mode model and
    ``antisym`` for the dispersive term.  ``fixed`` pins named parameters.
    """
    omega = as_abscissa(omega)
    psd = np.asarray(psd, dtype=float)
    sigma = as_sigma(sigma, psd.shape)
    if omega.size != psd.size:
        raise FitError("omega and psd lengths differ")
    if omega.size < 8:
        raise FitError("peak fits need at least 8 points")
    names = _names(model, antisym)
    fixed = dict(fixed or {})
    guess = initial_guess(omega, psd)
    span = float(omega.max() - omega.min())
    if span < 3 * fixed.get("width", guess["width"]):
        raise FitError("spectrum must span at least 3 linewidths")
    if model == COHERENT_DOUBLE and p0 is None:
        return _fit_double(omega, psd, sigma, antisym, fixed)
    start = {**guess, "antisym": 0.0, **(p0 or {})}
    return _solve(omega, psd, sigma, model, names, start, fixed)


def _solve(omega, psd, sigma, model, names, start, fixed) -> FitResult:
    free = [n for n in names if n not in fixed]
    c0 = start["center"]
    w0 = abs(start["width"])
    ref = {"center": c0, "center_2": c0}
    scale_of = {
        "floor": max(abs(start["floor"]), 1e-3),
        "amplitude": max(abs(start.get("amplitude", 0.0)), 1e-3),
        "center": w0,
        "center_2": w0,
        "width": w0,
        "width_2": w0,
        "rel_amp": 1.0,
        "phase": 1.0,
        "antisym": max(abs(start.get("amplitude", 0.0)), 1e-3),
    }

    def unpack(q):
        p = dict(fixed)
        for n, v in zip(free, q):
            p[n] = v + ref.get(n, 0.0)
        return p

    x0 = np.array([start.get(n, 0.0) - ref.get(n, 0.0) for n in free])
    res = weighted_least_squares(
        lambda q: _evaluate(model, omega, unpack(q)),
        psd, x0, free, sigma=sigma, scale=[scale_of[n] for n in free],
    )
    vals = unpack(res.values)
    res.values = np.array([vals[n] for n in free])
    spacing = float(np.median(np.abs(np.diff(omega))))
    res.extra = {"model": model, "fixed": {k: float(v) for k, v in fixed.items()}}
    if "width" in vals and abs(vals["width"]) < spacing:
        res.converged = False
        res.message = "linewidth collapsed below the grid spacing"
    if "width" in free:
        i = free.index("width")
        res.values[i] = abs(res.values[i])
    return res


def _fit_double(omega, psd, sigma, antisym, fixed) -> FitResult:
    first = _solve(omega, psd, sigma, SINGLE, _names(SINGLE, antisym),
                   {**initial_guess(omega, psd), "antisym": 0.0}, fixed)
    p1 = {**fixed, **first.as_dict()}
    resid = psd - _evaluate(SINGLE, omega, p1)
    j = int(np.argmax(_smooth(resid)))
    extra_amp = max(float(_smooth(resid)[j]), 1e-6 * max(p1["amplitude"], 1e-12))
    spacing = float(np.median(np.abs(np.diff(omega))))
    names = _names(COHERENT_DOUBLE, antisym)
    best = None
    for phase in (0.0, np.pi / 2, np.pi, 3 * np.pi / 2):
        start = {**p1, "rel_amp": np.sqrt(extra_amp / max(p1["amplitude"], 1e-12)),
                 "center_2": float(omega[j]), "width_2": max(p1["width"] / 2, 2 * spacing), "phase": phase}
        try:
            res = _solve(omega, psd, sigma, COHERENT_DOUBLE, names, start, fixed)
        except FitError:
            continue
        if best is None or res.chi2 < best.chi2:
            best = res
    if best is None:
        raise FitError("two-mode fit failed from every starting phase")
    return best


class LorentzianPeak(BaseEstimator, RegressorMixin):
    """Estimator wrapper around :func:`fit_lorentzian` (``X`` is the frequency grid in rad/s)."""

    def __init__(self, model: str = SINGLE, antisym: bool = False, fixed: dict | None = None):
        self.model = model
        self.antisym = antisym
        self.fixed = fixed

    def fit(self, X, y, sigma=None):
        self.result_ = fit_lorentzian(X, y, sigma, self.model, self.antisym, fixed=self.fixed)
        self.params_ = {**(self.fixed or {}), **self.result_.as_dict()}
        return self

    def predict(self, X):
        check_is_fitted(self, "result_")
        return _evaluate(self.model, as_abscissa(X), self.params_)
