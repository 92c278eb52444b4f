"""One-dimensional transfer-matrix model of a mirror / gap / membrane / gap / mirror cavity.

Field amplitudes are (forward, backward) pairs; a matrix maps the pair on
the right of an element to the pair on its left.  All matrix helpers
broadcast over a leading axis of wavenumbers so whole sweeps are computed
in one pass.
"""

from __future__ import annotations

import csv
import dataclasses
import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import yaml
from scipy.optimize import brentq

from .constants import C_LIGHT, TWO_PI


@dataclass(frozen=True)
class Layer:
    thickness: float
    index: complex = 1.0
    movable: bool = False

    def __post_init__(self):
        if not self.thickness > 0:
            raise ValueError("layer thickness must be > 0")


@dataclass(frozen=True)
class LumpedMirror:
    """Thin mirror given by its power transmission (and optional absorption)."""

    transmission: float
    loss: float = 0.0

    def __post_init__(self):
        if not 0 < self.transmission <= 1 or self.loss < 0 or self.transmission + self.loss > 1:
            raise ValueError("mirror needs 0 < T <= 1 and T + loss <= 1")

    @property
    def reflectivity(self) -> float:
        return float(np.sqrt(1 - self.transmission - self.loss))


@dataclass(frozen=True)
class CoatingMirror:
    """Multilayer mirror; ``layers`` ordered from the cavity side outward."""

    layers: tuple[Layer, ...]
    exit_index: complex = 1.0

    def __post_init__(self):
        if not self.layers:
            raise ValueError("coating needs at least one layer")


Mirror = LumpedMirror | CoatingMirror


@dataclass(frozen=True)
class LayerStack:
    """Cavity interior between two mirrors, listed from the input mirror toward the back mirror."""

    input_mirror: Mirror
    layers: tuple[Layer, ...]
    back_mirror: Mirror

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        movable = [i for i, layer in enumerate(self.layers) if layer.movable]
        if len(movable) != 1:
            raise ValueError("stack must contain exactly one movable layer")
        i = movable[0]
        if i == 0 or i == len(self.layers) - 1:
            raise ValueError("movable layer needs a gap on each side")

    @property
    def movable_index(self) -> int:
        return next(i for i, layer in enumerate(self.layers) if layer.movable)

    @property
    def length(self) -> float:
        return sum(layer.thickness for layer in self.layers)

    def without_movable(self) -> "LayerStack":
        """Same geometry with the movable element made of vacuum (empty cavity)."""
        layers = list(self.layers)
        i = self.movable_index
        layers[i] = dataclasses.replace(layers[i], index=1.0)
        return dataclasses.replace(self, layers=tuple(layers))

    def with_first_gap(self, thickness: float) -> "LayerStack":
        layers = list(self.layers)
        layers[0] = dataclasses.replace(layers[0], thickness=thickness)
        return dataclasses.replace(self, layers=tuple(layers))


def default_stack(
    cavity_length: float = 2.3e-3,
    membrane_gap: float = 380e-6,
    membrane_thickness: float = 100e-9,
    membrane_index: complex = 2.0,
    input_transmission: float = 190e-6,
    back_transmission: float = 7e-6,
) -> LayerStack:
    """Curved input mirror, long vacuum gap, nitride membrane, short gap, flat back mirror.

    ``membrane_gap`` is the membrane-to-back-mirror spacing; the long gap
    fills the rest of ``cavity_length``.
    """
    long_gap = cavity_length - membrane_gap - membrane_thickness
    return LayerStack(
        input_mirror=LumpedMirror(input_transmission),
        layers=(
            Layer(long_gap),
            Layer(membrane_thickness, membrane_index, movable=True),
            Layer(membrane_gap),
        ),
        back_mirror=LumpedMirror(back_transmission),
    )


def stack_from_params(params, **kw) -> LayerStack:
    return default_stack(cavity_length=params.cavity_length, membrane_gap=params.membrane_gap, **kw)


# -- element matrices, broadcast over k (shape (..., 2, 2)) ------------------


def _stack2(a, b, c, d):
    a, b, c, d = np.broadcast_arrays(a, b, c, d)
    return np.stack([np.stack([a, b], -1), np.stack([c, d], -1)], -2).astype(complex)


def _propagation(n, d, k):
    ph = n * k * d
    zero = np.zeros_like(ph)
    return _stack2(np.exp(-1j * ph), zero, zero, np.exp(1j * ph))


def _interface(n1, n2, k):
    r = (n1 - n2) / (n1 + n2)
    t = 2 * n1 / (n1 + n2)
    one = np.ones_like(k, dtype=complex)
    return _stack2(one / t, one * r / t, one * r / t, one / t)


def _lumped(m: LumpedMirror, k):
    r = m.reflectivity
    it = 1j * np.sqrt(m.transmission)
    one = np.ones_like(k, dtype=complex)
    a = 1 / it
    b = -r / it
    return _stack2(one * a, one * b, one * r * a, one * (r * b + it))


def _layers_matrix(layers: Sequence[Layer], k, outer=1.0, exit_index=1.0):
    """Matrix of a run of layers embedded between media ``outer`` (left) and ``exit_index`` (right)."""
    M = np.broadcast_to(np.eye(2, dtype=complex), np.shape(k) + (2, 2)).copy()
    n_prev = outer
    for layer in layers:
        if layer.index != n_prev:
            M = M @ _interface(n_prev, layer.index, k)
        M = M @ _propagation(layer.index, layer.thickness, k)
        n_prev = layer.index
    if exit_index != n_prev:
        M = M @ _interface(n_prev, exit_index, k)
    return M


def _mirror_from_cavity(m: Mirror, k):
    """Matrix of a mirror for light arriving from the cavity side."""
    if isinstance(m, LumpedMirror):
        return _lumped(m, k)
    return _layers_matrix(m.layers, k, outer=1.0, exit_index=m.exit_index)


def _reflection(M):
    return M[..., 1, 0] / M[..., 0, 0]


def _displaced(stack: LayerStack, x: float) -> list[Layer]:
    """Interior layers with the movable element shifted by ``x`` toward the input mirror."""
    layers = list(stack.layers)
    i = stack.movable_index
    before, after = layers[i - 1], layers[i + 1]
    if before.thickness - x <= 0 or after.thickness + x <= 0:
        raise ValueError("displacement collapses a gap")
    layers[i - 1] = dataclasses.replace(before, thickness=before.thickness - x)
    layers[i + 1] = dataclasses.replace(after, thickness=after.thickness + x)
    return layers


def inner_reflections(stack: LayerStack, k, x: float = 0.0):
    """(input-mirror reflection seen from inside, reflection of everything else seen from the input mirror)."""
    k = np.asarray(k, dtype=float)
    r_in = _reflection(_mirror_from_cavity(stack.input_mirror, k))
    rest = _layers_matrix(_displaced(stack, x), k) @ _mirror_from_cavity(stack.back_mirror, k)
    return r_in, _reflection(rest)


def round_trip(stack: LayerStack, k, x: float = 0.0):
    """Complex round-trip factor; resonance where its phase is a multiple of 2*pi."""
    r_in, r_rest = inner_reflections(stack, k, x)
    return r_in * r_rest


def far_reflector(stack: LayerStack, k, x: float = 0.0):
    """Reflection of membrane + short gap + back mirror, seen from inside the long gap."""
    k = np.asarray(k, dtype=float)
    layers = _displaced(stack, x)[1:]
    M = _layers_matrix(layers, k) @ _mirror_from_cavity(stack.back_mirror, k)
    return _reflection(M)


def _input_from_outside(m: Mirror, k):
    if isinstance(m, LumpedMirror):
        return _lumped(m, k)
    return _layers_matrix(m.layers[::-1], k, outer=m.exit_index, exit_index=1.0)


def stack_rt(stack: LayerStack, wavelength, x: float = 0.0):
    """Amplitude reflection and transmission of the whole stack seen from outside the input mirror."""
    k = TWO_PI / np.asarray(wavelength, dtype=float)
    M = _input_from_outside(stack.input_mirror, k) @ _layers_matrix(_displaced(stack, x), k)
    M = M @ _mirror_from_cavity(stack.back_mirror, k)
    n_in = 1.0 if isinstance(stack.input_mirror, LumpedMirror) else stack.input_mirror.exit_index
    n_out = 1.0 if isinstance(stack.back_mirror, LumpedMirror) else stack.back_mirror.exit_index
    r = _reflection(M)
    t = 1 / M[..., 0, 0]
    return r, t * np.sqrt(np.real(n_out) / np.real(n_in))


# -- resonances ---------------------------------------------------------------


def _phase_residual(stack, lam):
    p = complex(round_trip(stack, TWO_PI / lam))
    return p.imag / abs(p)


def resonances(stack: LayerStack, lambda_window: tuple[float, float], points_per_fsr: int = 40) -> list[float]:
    """Resonant wavelengths (m) in ``lambda_window``, located to 1e-12 relative."""
    lo, hi = sorted(lambda_window)
    mid = 0.5 * (lo + hi)
    fsr = mid**2 / (2 * stack.length)
    n = max(int(np.ceil((hi - lo) / fsr * points_per_fsr)), 16)
    lams = np.linspace(lo, hi, n + 1)
    p = round_trip(stack, TWO_PI / lams)
    h = p.imag / np.abs(p)
    roots = []
    for i in np.nonzero(np.sign(h[:-1]) * np.sign(h[1:]) < 0)[0]:
        if p[i].real <= 0 and p[i + 1].real <= 0:
            continue
        r = brentq(lambda lam: _phase_residual(stack, lam), lams[i], lams[i + 1], xtol=mid * 1e-15, rtol=1e-15)
        if complex(round_trip(stack, TWO_PI / r)).real > 0:
            roots.append(r)
    if not roots:
        raise ValueError("no resonance in window")
    return roots


# -- actuated sweep -------------------------------------------------------------


@dataclass(frozen=True)
class TmmSweepResult:
    wavelength: np.ndarray
    G_o: np.ndarray
    kappa_ext: np.ndarray
    kappa_back: np.ndarray
    resonant_wavelengths: list[float] = field(default_factory=list)

    @property
    def kappa_sum(self) -> np.ndarray:
        return self.kappa_ext + self.kappa_back

    def G_o_hz_per_fm(self) -> np.ndarray:
        return self.G_o / TWO_PI * 1e-15

    def local_maxima(self) -> np.ndarray:
        """Indices of interior local maxima of |G_o|."""
        a = np.abs(self.G_o)
        return np.nonzero((a[1:-1] > a[:-2]) & (a[1:-1] > a[2:]))[0] + 1

    def sign_changes(self) -> np.ndarray:
        g = self.G_o
        return np.nonzero(np.sign(g[:-1]) * np.sign(g[1:]) < 0)[0]

    def lower_maximum(self, period: float | None = None) -> int:
        """Index of the smaller of the two |G_o| maxima closest to the window centre."""
        idx = self.local_maxima()
        if len(idx) < 2:
            raise ValueError("need at least two G_o maxima in the sweep")
        centre = 0.5 * (self.wavelength[0] + self.wavelength[-1])
        near = idx[np.argsort(np.abs(self.wavelength[idx] - centre))[:2]]
        return int(near[np.argmin(np.abs(self.G_o[near]))])

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["wavelength_nm", "Go_hz_per_fm", "kext_hz", "kback_hz"])
        for row in zip(self.wavelength * 1e9, self.G_o_hz_per_fm(), self.kappa_ext / TWO_PI, self.kappa_back / TWO_PI):
            w.writerow([repr(float(v)) for v in row])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text


def _tuned(stack: LayerStack, k: float) -> LayerStack:
    """Adjust the first gap (cavity length) so that wavenumber ``k`` is resonant."""
    phase = np.angle(complex(round_trip(stack, k)))
    return stack.with_first_gap(stack.layers[0].thickness - phase / (2 * k))


def _angle_ratio(a, b):
    return np.angle(a / b)


def cavity_point(stack: LayerStack, wavelength: float, dx: float = 1e-11) -> tuple[float, float, float]:
    """(G_o, kappa_ext, kappa_back) at ``wavelength`` after retuning the cavity onto resonance.

    ``G_o`` is the resonance shift per unit membrane displacement toward the
    input mirror (rad/s per m); decay rates come from mirror losses and the
    round-trip group delay.
    """
    k = TWO_PI / wavelength
    s = _tuned(stack, k)
    dk = k * 1e-9
    tau = _angle_ratio(round_trip(s, k + dk), round_trip(s, k - dk)) / (2 * dk) / C_LIGHT
    dphi_dx = _angle_ratio(round_trip(s, k, dx), round_trip(s, k, -dx)) / (2 * dx)
    r_in, _ = inner_reflections(s, k)
    r_far = far_reflector(s, k)
    G = -dphi_dx / tau
    k_ext = -np.log(abs(complex(r_in)) ** 2) / tau
    k_back = -np.log(abs(complex(r_far)) ** 2) / tau
    return float(G), float(k_ext), float(k_back)


def sweep(stack: LayerStack, lambda_window: tuple[float, float], n_points: int) -> TmmSweepResult:
    """Cavity parameters across a wavelength window, retuning onto resonance at each point."""
    if n_points < 2:
        raise ValueError("n_points must be >= 2")
    lams = np.linspace(*sorted(lambda_window), n_points)
    vals = np.array([cavity_point(stack, lam) for lam in lams])
    if not np.all(np.isfinite(vals)):
        raise ArithmeticError("propagation failure in transfer matrix")
    try:
        roots = resonances(stack, lambda_window)
    except ValueError:
        roots = []
    return TmmSweepResult(lams, vals[:, 0], vals[:, 1], np.maximum(vals[:, 2], 0.0), roots)


def dip_linewidth(stack: LayerStack, wavelength: float) -> float:
    """Total decay rate (rad/s) from the FWHM of the reflection dip of the retuned cavity.

    Cross-check of ``kappa_ext + kappa_back`` from :func:`cavity_point`.
    """
    k0 = TWO_PI / wavelength
    s = _tuned(stack, k0)
    w0 = C_LIGHT * k0

    def absorbed(w):
        r, _ = stack_rt(s, TWO_PI * C_LIGHT / w)
        return 1 - abs(complex(r)) ** 2

    _, k_ext, k_back = cavity_point(stack, wavelength)
    guess = k_ext + k_back
    depth = absorbed(w0)
    half = lambda w: absorbed(w) - depth / 2
    lo = brentq(half, w0 - 5 * guess, w0, xtol=1e-6)
    hi = brentq(half, w0, w0 + 5 * guess, xtol=1e-6)
    return hi - lo


# -- electromechanical geometry ---------------------------------------------


@dataclass(frozen=True)
class ParallelPlateParticipation:
    """p(d) = C_m/(C_m + C_par) with C_m ~ 1/d, calibrated so p(d_ref) = p_ref."""

    p_ref: float = 0.67
    d_ref: float = 830e-9

    def __call__(self, d):
        k = (1 / self.p_ref - 1) / self.d_ref
        return 1 / (1 + k * np.asarray(d))


@dataclass(frozen=True)
class FixedParticipation:
    p: float = 0.67

    def __call__(self, d):
        return self.p + 0 * np.asarray(d)


def g_e_per_displacement(p, d, omega_e):
    """Electromechanical frequency shift per unit displacement p*omega_e/(2d)."""
    return p * omega_e / (2 * d)


def g_e_from_geometry(params, model=None, bracket=(50e-9, 5e-6)) -> dict[str, float]:
    """Pad gap consistent with the measured electromechanical coupling.

    Solves ``p(d) omega_e / (2d) = g_e / x_zp_e`` for ``d``.
    """
    model = ParallelPlateParticipation() if model is None else model
    if params.x_zp_e <= 0:
        raise ValueError("x_zp_e must be > 0")
    target = params.g_e / params.x_zp_e
    f = lambda d: g_e_per_displacement(float(model(d)), d, params.omega_e) - target
    a, b = bracket
    if f(a) * f(b) > 0:
        raise ValueError("no pad gap in bracket reproduces g_e")
    d = brentq(f, a, b, xtol=1e-18, rtol=1e-14)
    return {"G_e": target, "d": d, "p": float(model(d))}


# -- stack files --------------------------------------------------------------


def _index(v) -> complex:
    if isinstance(v, (list, tuple)):
        return complex(v[0], v[1])
    return complex(v) if isinstance(v, complex) else float(v)


def _mirror_from(doc) -> Mirror:
    if "layers" in doc:
        return CoatingMirror(tuple(_layer_from(d) for d in doc["layers"]), _index(doc.get("exit_index", 1.0)))
    return LumpedMirror(float(doc["transmission"]), float(doc.get("loss", 0.0)))


def _layer_from(doc) -> Layer:
    unknown = set(doc) - {"thickness", "index", "movable"}
    if unknown:
        raise ValueError(f"unknown layer keys: {sorted(unknown)}")
    return Layer(float(doc["thickness"]), _index(doc.get("index", 1.0)), bool(doc.get("movable", False)))


def load_stack(source) -> LayerStack:
    """Stack from a YAML file/string: ``input_mirror``, ``layers`` (propagation order), ``back_mirror``."""
    if isinstance(source, Path) or (isinstance(source, str) and "\n" not in source and Path(source).exists()):
        doc = yaml.safe_load(Path(source).read_text())
    elif isinstance(source, str):
        doc = yaml.safe_load(source)
    else:
        doc = source
    return LayerStack(
        input_mirror=_mirror_from(doc["input_mirror"]),
        layers=tuple(_layer_from(d) for d in doc["layers"]),
        back_mirror=_mirror_from(doc["back_mirror"]),
    )
