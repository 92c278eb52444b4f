"""Weighted nonlinear least squares and the fit-result record shared by every fit."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import least_squares

STEP_TOL = 1e-10
GRAD_TOL = 1e-10
MAX_ITER = 500


class FitError(ValueError):
    """A fit's preconditions are not met (too few points, degenerate abscissa, ...)."""


class ConvergenceWarning(UserWarning):
    pass


@dataclass
class FitResult:
    names: tuple[str, ...]
    values: np.ndarray
    covariance: np.ndarray
    chi2: float
    dof: int
    converged: bool
    iterations: int
    message: str = ""
    extra: dict = field(default_factory=dict)

    @property
    def errors(self) -> np.ndarray:
        return np.sqrt(np.clip(np.diag(self.covariance), 0, None))

    @property
    def reduced_chi2(self) -> float:
        return self.chi2 / self.dof if self.dof > 0 else math.nan

    @property
    def authoritative(self) -> bool:
        return self.converged

    def __getitem__(self, name: str) -> float:
        return float(self.values[self.names.index(name)])

    def error(self, name: str) -> float:
        return float(self.errors[self.names.index(name)])

    def as_dict(self) -> dict[str, float]:
        return {n: float(v) for n, v in zip(self.names, self.values)}

    def to_dict(self) -> dict:
        """Plain-data report (parameters with uncertainties, covariance, fit statistics)."""
        return {
            "parameters": {
                n: {"value": float(v), "stderr": float(e)} for n, v, e in zip(self.names, self.values, self.errors)
            },
            "covariance": [[float(c) for c in row] for row in self.covariance],
            "chi2": float(self.chi2),
            "dof": int(self.dof),
            "converged": bool(self.converged),
            "authoritative": bool(self.converged),
            "iterations": int(self.iterations),
            "message": self.message,
            **({"derived": _plain(self.extra)} if self.extra else {}),
        }


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


def weighted_least_squares(
    model: Callable[[np.ndarray], np.ndarray],
    y: np.ndarray,
    p0: Sequence[float],
    names: Sequence[str],
    sigma: np.ndarray | None = None,
    absolute_sigma: bool = True,
    scale: Sequence[float] | None = None,
) -> FitResult:
    """Minimize sum(((model(p) - y)/sigma)^2) with a damped Gauss-Newton (Levenberg-Marquardt) solver.

    ``scale`` gives characteristic parameter magnitudes; the solver works in
    ``p/scale`` so parameters of very different size are conditioned alike.
    Without ``sigma`` the points are weighted uniformly and the covariance
    is rescaled by the reduced chi-square.
    """
    y = np.asarray(y, dtype=float)
    p0 = np.asarray(p0, dtype=float)
    n, k = y.size, p0.size
    if n < k:
        raise FitError(f"{n} points cannot determine {k} parameters")
    uniform = sigma is None
    w = np.ones_like(y) if uniform else 1.0 / np.asarray(sigma, dtype=float)
    if np.any(~np.isfinite(w)) or np.any(w <= 0):
        raise FitError("sigma must be finite and > 0")
    s = np.where(p0 != 0, np.abs(p0), 1.0) if scale is None else np.asarray(scale, dtype=float)

    def resid(q):
        return (model(q * s) - y) * w

    r0 = resid(p0 / s)
    if not np.all(np.isfinite(r0)):
        raise FitError("model is not finite at the initial guess")
    if k == 0:
        return FitResult(tuple(names), p0, np.zeros((0, 0)), float(r0 @ r0), n, True, 0)
    sol = least_squares(
        resid, p0 / s, method="lm", xtol=STEP_TOL, ftol=1e-15, gtol=GRAD_TOL, max_nfev=MAX_ITER * (k + 1)
    )
    J = sol.jac
    chi2 = float(sol.fun @ sol.fun)
    dof = n - k
    try:
        cov_q = np.linalg.inv(J.T @ J)
    except np.linalg.LinAlgError:
        cov_q = np.linalg.pinv(J.T @ J)
    if uniform or not absolute_sigma:
        cov_q = cov_q * (chi2 / dof if dof > 0 else math.nan)
    cov = cov_q * np.outer(s, s)
    converged = bool(sol.status > 0 and np.all(np.isfinite(sol.x)))
    iterations = int(math.ceil(sol.nfev / (k + 1)))
    result = FitResult(tuple(names), sol.x * s, cov, chi2, dof, converged, iterations, sol.message)
    if not converged:
        warnings.warn(f"fit did not converge: {sol.message}", ConvergenceWarning, stacklevel=2)
    return result


def residual_jacobian(fun: Callable[[np.ndarray], np.ndarray], x: np.ndarray, rel: float = 1e-6) -> np.ndarray:
    """Central-difference Jacobian of a vector function."""
    x = np.asarray(x, dtype=float)
    cols = []
    for i in range(x.size):
        h = rel * max(abs(x[i]), 1e-30)
        xp, xm = x.copy(), x.copy()
        xp[i] += h
        xm[i] -= h
        cols.append((fun(xp) - fun(xm)) / (2 * h))
    return np.stack(cols, axis=-1)


def propagate_fixed(
    result: FitResult,
    model_full: Callable[[np.ndarray, np.ndarray], np.ndarray],
    fixed_values: np.ndarray,
    fixed_cov: np.ndarray,
    sigma: np.ndarray | None,
) -> np.ndarray:
    """Add the uncertainty of held-fixed inputs to a fit covariance (delta method).

    At the optimum ``d(theta)/d(phi) = -(Jt' W Jt)^-1 Jt' W Jp``, where ``Jt``
    and ``Jp`` are model Jacobians in the free and fixed parameters.
    """
    theta = result.values
    phi = np.asarray(fixed_values, dtype=float)
    w = np.ones(model_full(theta, phi).shape) if sigma is None else 1.0 / np.asarray(sigma) ** 2
    Jt = residual_jacobian(lambda t: model_full(t, phi), theta)
    Jp = residual_jacobian(lambda p: model_full(theta, p), phi)
    H = Jt.T @ (w[:, None] * Jt)
    D = -np.linalg.solve(H, Jt.T @ (w[:, None] * Jp))
    return result.covariance + D @ np.asarray(fixed_cov) @ D.T
