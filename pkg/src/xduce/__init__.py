"""Analytic model and calibration pipeline for a membrane electro-optomechanical transducer."""

from .params import (
    DetectionChain,
    LockBeamSpec,
    TechNoiseCoeffs,
    TransducerParams,
    dump_params,
    kappa_e_at_power,
    load_params,
    table1_preset,
)
from .resonator import PumpConfig, chi_cavity, circulating_power, mean_photon_number
from .dynamics import OperatingPoint, membrane_occupancy, n_min, operating_point
from .transduction import EfficiencyReport, added_noise_ideal, efficiency, s_oe
from .technical_noise import (
    SidebandSpectrum,
    TechnicalDensities,
    added_noise_full,
    n_eff_microwave,
    n_eff_optical,
    sideband_spectrum,
    white_floor,
)

__version__ = "0.1.0"

__all__ = [
    "DetectionChain",
    "EfficiencyReport",
    "LockBeamSpec",
    "OperatingPoint",
    "PumpConfig",
    "SidebandSpectrum",
    "TechNoiseCoeffs",
    "TechnicalDensities",
    "TransducerParams",
    "added_noise_full",
    "added_noise_ideal",
    "chi_cavity",
    "circulating_power",
    "dump_params",
    "efficiency",
    "kappa_e_at_power",
    "load_params",
    "mean_photon_number",
    "membrane_occupancy",
    "n_eff_microwave",
    "n_eff_optical",
    "n_min",
    "operating_point",
    "s_oe",
    "sideband_spectrum",
    "table1_preset",
    "white_floor",
]
