"""End-to-end analysis of sideband-pair damping sweeps: peak fits, squash removal, thermometry, cooling fits."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from ..dynamics import OperatingPoint, operating_point
from ..params import TransducerParams
from ..synth import SynthConfig, realize
from ..technical_noise import CorrelationMode, TechnicalDensities, sideband_spectrum
from .curves import ELECTRO_OPTICAL, OPTICAL_ONLY, CoolingCurvePoint, fit_cooling_curve
from .lorentzian import fit_lorentzian
from .optimize import FitResult
from .thermometry import occupancy_with_error, squash_ratios


@dataclass(frozen=True)
class SweepSetting:
    Gamma_e: float
    Gamma_o: float


def analysis_grid(op: OperatingPoint, center: float, half_widths: float = 8.0, n: int = 321) -> np.ndarray:
    """Frequency grid (rad/s) covering ``half_widths`` linewidths either side of ``center``."""
    return center + np.linspace(-half_widths, half_widths, n) * op.Gamma_T


def sideband_pair(params: TransducerParams, op: OperatingPoint, C: TechnicalDensities, n: int = 321):
    return tuple(
        sideband_spectrum(params, op, C, side, analysis_grid(op, s * params.omega_m, n=n))
        for side, s in (("+", 1), ("-", -1))
    )


@dataclass
class PairAnalysis:
    point: CoolingCurvePoint
    upper: FitResult
    lower: FitResult
    corrected: tuple[float, float]

    @property
    def converged(self) -> bool:
        return self.upper.converged and self.lower.converged


def _corrected(fit: FitResult, xi: float, ratio: float, sign: int) -> tuple[float, float]:
    """Squash-corrected amplitude at the transducer output and its variance.

    The fitted floor is ``1 + xi * S`` in detector units, the amplitude ``xi * N``.
    """
    N = fit["amplitude"] / xi
    S = (fit["floor"] - 1) / xi
    i, j = fit.names.index("amplitude"), fit.names.index("floor")
    cov = fit.covariance[np.ix_([i, j], [i, j])] / xi**2
    g = np.array([1.0, sign * ratio])
    return N + sign * ratio * S, float(g @ cov @ g)


def analyze_pair(params: TransducerParams, op: OperatingPoint, upper, lower, xi: float,
                 squash: bool = True) -> PairAnalysis:
    """Occupancy from one upper/lower pair of detector-referenced spectra (objects with omega, psd, sigma)."""
    fu = fit_lorentzian(upper.omega, upper.psd, upper.sigma, antisym=True)
    fl = fit_lorentzian(lower.omega, lower.psd, lower.sigma, antisym=True)
    r_up, r_lo = squash_ratios(params, op) if squash else (0.0, 0.0)
    Nu, vu = _corrected(fu, xi, r_up, +1)
    Nl, vl = _corrected(fl, xi, r_lo, -1)
    n_m, err = occupancy_with_error(Nl, Nu, op.n_min_o, np.diag([vl, vu]))
    pt = CoolingCurvePoint(op.Gamma_e, op.Gamma_o, n_m, err)
    return PairAnalysis(pt, fu, fl, (Nu, Nl))


def synth_pair(params, op, C, xi, M, seed, stream_base=0, n: int = 321):
    up, lo = sideband_pair(params, op, C, n=n)
    return tuple(
        realize(SynthConfig(base=spec, chain=xi, M=M, seed=seed, stream=stream_base + k))
        for k, spec in enumerate((up, lo))
    )


def cooling_sweep_points(
    params: TransducerParams,
    settings,
    xi: float,
    M: int,
    seed: int,
    mode: CorrelationMode | str = CorrelationMode.PHASE_ONLY,
    n: int = 321,
) -> list[PairAnalysis]:
    """Synthesize and analyze every setting; technical noise follows ``params.tech_noise.a_o``."""
    out = []
    for k, s in enumerate(settings):
        op = operating_point(params, s.Gamma_e, s.Gamma_o)
        C = TechnicalDensities.from_a_o(params, op, mode=mode) if params.tech_noise.a_o > 0 else TechnicalDensities()
        up, lo = synth_pair(params, op, C, xi, M, seed, stream_base=2 * k, n=n)
        out.append(analyze_pair(params, op, up, lo, xi))
    return out


def cooling_round_trip(
    params: TransducerParams,
    optical_settings,
    electro_settings,
    n_eff_e: float,
    xi: float,
    M: int,
    seed: int,
) -> dict[str, FitResult]:
    """Synthesize both damping sweeps, then fit ``(n_th, a_o)`` and ``n_eff_e`` in turn.

    The electro-optical sweep is generated with a constant microwave
    technical occupancy ``n_eff_e``.  Uncertainty in the first fit is
    propagated into the second.
    """
    gen_e = params.replace(tech_noise=dataclasses.replace(params.tech_noise, a_e=0.0, b_e=n_eff_e))
    opt = cooling_sweep_points(gen_e, optical_settings, xi, M, seed)
    elo = cooling_sweep_points(gen_e, electro_settings, xi, M, seed + 1_000_003)
    first = fit_cooling_curve([a.point for a in opt], gen_e, OPTICAL_ONLY)
    second = fit_cooling_curve(
        [a.point for a in elo], gen_e, ELECTRO_OPTICAL,
        fixed={"n_th": first["n_th"], "a_o": first["a_o"]}, fixed_cov=first.covariance,
    )
    return {"optical_only": first, "electro_optical": second, "spectra_converged": all(
        a.converged for a in opt + elo)}
