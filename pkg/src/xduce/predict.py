"""Forward model summary at one operating point, and sweeps of it."""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .constants import TWO_PI
from .dynamics import membrane_occupancy, operating_point
from .params import TransducerParams
from .technical_noise import CorrelationMode, TechnicalDensities, added_noise_budget
from .transduction import efficiency

BUDGET_KEYS = ("n_th", "n_eff_e", "n_min_e", "n_eff_o", "n_min_o", "lock", "white")


def technical_densities(params: TransducerParams, op, mode=CorrelationMode.PHASE_ONLY) -> TechnicalDensities:
    """Densities implied by the stored coefficients: explicit ones if set, else from ``a_o``."""
    t = params.tech_noise
    if t.c_xx or t.c_yy or t.c_xy:
        from .dynamics import power_for_gamma_o

        return TechnicalDensities.from_coefficients(params, power_for_gamma_o(params, op.Gamma_o))
    if t.a_o > 0 and op.Gamma_o > 0:
        return TechnicalDensities.from_a_o(params, op, mode=mode)
    return TechnicalDensities()


def predict(params: TransducerParams, Gamma_e: float, Gamma_o: float, include_lock: bool = True,
            mode=CorrelationMode.PHASE_ONLY) -> dict[str, float]:
    """Efficiency, occupancy, added noise and its budget; rates in rad/s in, Hz out."""
    op = operating_point(params, Gamma_e, Gamma_o, include_lock=include_lock)
    n_m = membrane_occupancy(params, op)
    row = {
        "gamma_e_hz": Gamma_e / TWO_PI,
        "gamma_o_hz": Gamma_o / TWO_PI,
        "kappa_e_hz": op.kappa_e / TWO_PI,
        "bandwidth_hz": op.Gamma_T / TWO_PI,
        "n_m": n_m,
    }
    if Gamma_e > 0 and Gamma_o > 0:
        eff = efficiency(params, op)
        row.update(eta_t=eff.eta_t, eta_up=eff.eta_up, eta_down=eff.eta_down)
        budget = added_noise_budget(params, op, technical_densities(params, op, mode))
        row["n_add_up"] = float(sum(budget.values()))
    else:
        row.update(eta_t=0.0, eta_up=0.0, eta_down=0.0, n_add_up=math.inf)
        budget = {k: math.nan for k in BUDGET_KEYS}
    row.update({f"budget_{k}": v for k, v in budget.items()})
    return row


def axis_values(start: float, stop: float, points: int, scale: str = "lin") -> np.ndarray:
    if points < 1:
        raise ValueError("points must be >= 1")
    if scale == "lin":
        return np.linspace(start, stop, points)
    if scale == "log":
        if start <= 0 or stop <= 0:
            raise ValueError("log axis needs positive endpoints")
        return np.geomspace(start, stop, points)
    raise ValueError("scale must be 'lin' or 'log'")


def thread_count() -> int:
    try:
        return max(1, int(os.environ.get("XDUCE_THREADS", "1")))
    except ValueError:
        return 1


def sweep(params: TransducerParams, axis: str, values, fixed: float, include_lock: bool = True) -> list[dict]:
    """Rows of :func:`predict` along ``gamma_e`` or ``gamma_o`` (rad/s), in input order."""
    if axis not in ("gamma_e", "gamma_o"):
        raise ValueError("axis must be 'gamma_e' or 'gamma_o'")

    def one(v):
        ge, go = (v, fixed) if axis == "gamma_e" else (fixed, v)
        return predict(params, ge, go, include_lock)

    with ThreadPoolExecutor(max_workers=thread_count()) as pool:
        return list(pool.map(one, values))


def added_noise_minimum(params: TransducerParams, Gamma_o: float, bounds_hz=(20.0, 400.0)) -> tuple[float, float]:
    """(Gamma_e in rad/s, N_add) minimizing the upconversion added noise at fixed ``Gamma_o``."""
    from scipy.optimize import minimize_scalar

    f = lambda g: predict(params, TWO_PI * g, Gamma_o)["n_add_up"]
    sol = minimize_scalar(f, bounds=bounds_hz, method="bounded", options={"xatol": 1e-3})
    return TWO_PI * float(sol.x), float(sol.fun)
