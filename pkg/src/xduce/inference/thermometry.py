"""Occupancy from sideband amplitudes, and removal of phase-noise squashing."""

from __future__ import annotations

import math

import numpy as np

from ..dynamics import OperatingPoint
from ..params import TransducerParams
from ..technical_noise import TechnicalDensities, squash_correction_ratio, susceptibilities, white_floor


def sideband_ratio(n_m, n_min):
    """Lower/upper peak ratio for occupancy ``n_m``: n_min/(n_min+1) * (n_m+1)/n_m."""
    return n_min / (n_min + 1) * (n_m + 1) / n_m


def occupancy_from_asymmetry(r, n_min):
    """Invert :func:`sideband_ratio`; ``r`` must exceed the hot limit n_min/(n_min+1)."""
    r = np.asarray(r, dtype=float)
    if n_min <= 0:
        raise ValueError("n_min must be > 0")
    denom = r * (n_min + 1) / n_min - 1
    if np.any(denom <= 0):
        raise ValueError("sideband ratio at or below its high-occupancy limit")
    out = 1.0 / denom
    return float(out) if out.ndim == 0 else out


def occupancy_with_error(N_lower, N_upper, n_min, cov=None):
    """Occupancy and its standard deviation from the two peak amplitudes.

    ``cov`` is the 2x2 covariance of (N_lower, N_upper); the two amplitudes
    are usually independent fits, so a diagonal matrix is typical.
    """
    r = N_lower / N_upper
    n_m = occupancy_from_asymmetry(r, n_min)
    if cov is None:
        return n_m, math.nan
    # dn/dr = -n^2 (n_min+1)/n_min
    dn_dr = -(n_m**2) * (n_min + 1) / n_min
    grad = dn_dr * np.array([1 / N_upper, -N_lower / N_upper**2])
    return n_m, float(math.sqrt(grad @ np.asarray(cov) @ grad))


def squash_ratios(params: TransducerParams, op: OperatingPoint, C: TechnicalDensities | None = None):
    """Peak-amplitude change per unit white-floor excess for each sideband.

    With ``C`` omitted, phase-only noise is assumed and the ratios are
    independent of its level; otherwise the derivatives are taken along the
    direction of the supplied densities.
    """
    if C is None:
        return squash_correction_ratio(params, op, "+"), squash_correction_ratio(params, op, "-")
    out = []
    for side in ("+", "-"):
        sus = susceptibilities(params, op)
        q = (params.eps_cl * params.eps_pc * params.kappa_o_ext / params.kappa_o * params.kappa_o**2
             * op.A_o * op.Gamma_o / op.Gamma_T * sus.B_tilde(side, C).real)
        s = white_floor(params, op, C, side)
        out.append(q / s)
    return tuple(out)


def unsquash(N_det, S_det, params: TransducerParams, op: OperatingPoint, C: TechnicalDensities | None = None):
    """Undo squashing of the (upper, lower) peak amplitudes using their measured white excesses.

    ``N_det = (N_upper, N_lower)``, ``S_det = (S_upper, S_lower)`` are
    excesses over the unit background at the same normalization.  Returns
    the corrected (upper, lower) pair.
    """
    r_up, r_lo = squash_ratios(params, op, C)
    up = N_det[0] + r_up * S_det[0]
    lo = N_det[1] - r_lo * S_det[1]
    if up <= 0 or lo <= 0:
        raise ValueError("corrected peak amplitude is not positive; input is unphysical")
    return up, lo


def occupancy_from_upper_sideband(N_out_upper, params: TransducerParams, op: OperatingPoint):
    """Occupancy from the upper-sideband amplitude at the transducer output (needs a calibrated chain)."""
    k = 4 * params.eps_cl * op.A_o * params.kappa_o_ext / params.kappa_o * op.Gamma_o / op.Gamma_T
    return N_out_upper / k
