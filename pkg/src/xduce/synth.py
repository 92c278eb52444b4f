"""Detector-referenced synthetic heterodyne spectra with averaging noise and a substrate-mode feature."""

from __future__ import annotations

import csv
import dataclasses
import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .constants import TWO_PI
from .params import DetectionChain
from .technical_noise import SidebandSpectrum

TRANSDUCER = "transducer-output"
DETECTOR = "detector-input"


def _xi(chain) -> float:
    xi = chain.xi_o if isinstance(chain, DetectionChain) else float(chain)
    if not 0 < xi <= 1:
        raise ValueError("chain efficiency must satisfy 0 < xi <= 1")
    return xi


def to_detector(spec: SidebandSpectrum, chain) -> SidebandSpectrum:
    """Beamsplitter model of the measurement chain: ``S_det = (1 - xi) + xi * S``.

    ``chain`` is a :class:`DetectionChain` (its optical efficiency is used)
    or a bare efficiency.
    """
    if spec.normalization != TRANSDUCER:
        raise ValueError("spectrum is already detector-normalized")
    xi = _xi(chain)
    return dataclasses.replace(
        spec,
        density=(1 - xi) + xi * spec.density,
        normalization=DETECTOR,
        floor=xi * spec.floor,
        amplitude=xi * spec.amplitude,
        antisym=xi * spec.antisym,
    )


def from_detector(spec: SidebandSpectrum, chain) -> SidebandSpectrum:
    """Inverse of :func:`to_detector`."""
    if spec.normalization != DETECTOR:
        raise ValueError("spectrum is not detector-normalized")
    xi = _xi(chain)
    return dataclasses.replace(
        spec,
        density=(spec.density - (1 - xi)) / xi,
        normalization=TRANSDUCER,
        floor=spec.floor / xi,
        amplitude=spec.amplitude / xi,
        antisym=spec.antisym / xi,
    )


@dataclass(frozen=True)
class SubstrateMode:
    """Second mechanical mode interfering with the membrane peak.

    ``amplitude`` is the complex field amplitude relative to the membrane
    Lorentzian; its phase is the relative phase of the two modes.
    """

    omega_s: float
    amplitude: complex = 0j
    linewidth: float = TWO_PI * 20.0

    def __post_init__(self):
        if not self.linewidth > 0:
            raise ValueError("substrate linewidth must be > 0")


def complex_lorentzian(omega, center, width):
    """Field response (w/2)/(w/2 - i(omega - center)); its squared modulus is the unit-height Lorentzian."""
    return (width / 2) / (width / 2 - 1j * (np.asarray(omega) - center))


def add_substrate_mode(spec: SidebandSpectrum, mode: SubstrateMode, coherent: bool = True) -> SidebandSpectrum:
    """Replace the membrane Lorentzian by the squared sum (``coherent``) or sum of squares of two modes.

    The substrate feature sits at ``+omega_s`` around the upper sideband
    and at ``-omega_s`` around the lower one.
    """
    if mode.amplitude == 0:
        return spec
    s = 1 if spec.side == "+" else -1
    chi_m = complex_lorentzian(spec.omega, spec.omega_c, spec.linewidth)
    chi_s = mode.amplitude * complex_lorentzian(spec.omega, s * mode.omega_s, mode.linewidth)
    if coherent:
        shape = np.abs(chi_m + chi_s) ** 2
    else:
        shape = np.abs(chi_m) ** 2 + np.abs(chi_s) ** 2
    density = spec.density + spec.amplitude * (shape - np.abs(chi_m) ** 2)
    return dataclasses.replace(spec, density=density, substrate=mode)


@dataclass(frozen=True)
class SynthConfig:
    base: SidebandSpectrum
    chain: DetectionChain | float = 1.0
    substrate: SubstrateMode | None = None
    M: int = 1
    seed: int = 0
    stream: int = 0

    def __post_init__(self):
        if self.M < 1:
            raise ValueError("averaging count M must be >= 1")


@dataclass(frozen=True)
class RealizedSpectrum:
    omega: np.ndarray
    psd: np.ndarray
    sigma: np.ndarray
    mean: np.ndarray
    seed: int
    M: int
    normalization: str
    side: str = "+"

    def to_csv(self, path=None, extra: dict | None = None) -> str:
        buf = io.StringIO()
        header = {"seed": self.seed, "M": self.M, "normalization": self.normalization, "side": self.side}
        header.update(extra or {})
        for k, v in header.items():
            buf.write(f"# {k}: {v}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["detuning_hz", "psd_photons_per_s_per_hz", "sigma"])
        for row in zip(self.omega / TWO_PI, self.psd, self.sigma):
            w.writerow([repr(float(v)) for v in row])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text


def rng_for(seed: int, stream: int = 0) -> np.random.Generator:
    """Counter-based generator; distinct ``stream`` values give independent sequences."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(stream,))))


def mean_detector_spectrum(cfg: SynthConfig) -> SidebandSpectrum:
    spec = cfg.base
    if cfg.substrate is not None:
        spec = add_substrate_mode(spec, cfg.substrate)
    if spec.normalization == TRANSDUCER:
        spec = to_detector(spec, cfg.chain)
    return spec


def realize(cfg: SynthConfig) -> RealizedSpectrum:
    """Draw one averaged periodogram.

    Each bin is the mean of ``M`` exponential variates, i.e. a gamma
    variate with shape ``M`` and mean equal to the model density, so the
    relative standard deviation is ``1/sqrt(M)`` and samples are never
    negative.
    """
    spec = mean_detector_spectrum(cfg)
    mean = np.asarray(spec.density, dtype=float)
    rng = rng_for(cfg.seed, cfg.stream)
    psd = mean * rng.gamma(cfg.M, 1.0 / cfg.M, size=mean.shape)
    return RealizedSpectrum(
        omega=np.asarray(spec.omega, dtype=float),
        psd=psd,
        sigma=mean / np.sqrt(cfg.M),
        mean=mean,
        seed=cfg.seed,
        M=cfg.M,
        normalization=spec.normalization,
        side=spec.side,
    )


def read_spectrum_csv(path) -> tuple[np.ndarray, np.ndarray, np.ndarray | None, dict]:
    """Read (omega rad/s, psd, sigma or None, header dict) from a spectrum CSV."""
    header: dict[str, str] = {}
    rows = []
    with open(path, newline="") as fh:
        lines = [ln for ln in fh]
    body = []
    for ln in lines:
        if ln.startswith("#"):
            k, _, v = ln[1:].partition(":")
            header[k.strip()] = v.strip()
        elif ln.strip():
            body.append(ln)
    reader = csv.DictReader(body)
    for r in reader:
        rows.append(r)
    if not rows:
        raise ValueError(f"{path}: no data rows")
    omega = TWO_PI * np.array([float(r["detuning_hz"]) for r in rows])
    key = "psd_photons_per_s_per_hz" if "psd_photons_per_s_per_hz" in rows[0] else "psd"
    psd = np.array([float(r[key]) for r in rows])
    sigma = np.array([float(r["sigma"]) for r in rows]) if "sigma" in rows[0] and rows[0]["sigma"] else None
    return omega, psd, sigma, header
