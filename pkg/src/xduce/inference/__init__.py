"""Spectral fits, thermometry, curve fits and calibrations."""

from .calibration import (
    RingdownTrace,
    compose_four_point,
    efficiency_four_point,
    fit_decay,
    fit_gamma_vs_temperature,
    fit_ringdown,
    fit_temperature_sweep,
    synth_temperature_sweep,
)
from .curves import (
    AddedNoiseCurve,
    CoolingCurve,
    CoolingCurvePoint,
    EfficiencyCurve,
    added_noise_from_fit,
    added_noise_minimum,
    fit_added_noise_curve,
    fit_cooling_curve,
    fit_efficiency_curve,
    overcoupling_polynomial,
)
from .lorentzian import LorentzianPeak, fit_lorentzian
from .optimize import ConvergenceWarning, FitError, FitResult, weighted_least_squares
from .thermometry import (
    occupancy_from_asymmetry,
    occupancy_from_upper_sideband,
    occupancy_with_error,
    sideband_ratio,
    squash_ratios,
    unsquash,
)
from .validation import UniformWeightWarning

__all__ = [n for n in dir() if not n.startswith("_")]
