"""Transducer parameter set, reference presets, and the parameter-file schema.

Every rate and frequency held by these objects is angular (rad/s).  Files
on disk store ordinary frequencies under keys ending in ``_hz``; the factor
of 2*pi is applied exactly once, in :func:`load_params` / :func:`dump_params`.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import numpy as np
import yaml

from .constants import TWO_PI

SCHEMA_VERSION = 1


class ParamsError(ValueError):
    """Base class for parameter-file and parameter-invariant failures."""


class SchemaError(ParamsError):
    def __init__(self, key: str, message: str = "unknown key"):
        self.key = key
        super().__init__(f"{key}: {message}")


class InvariantError(ParamsError):
    def __init__(self, invariant: str, detail: str = ""):
        self.invariant = invariant
        super().__init__(f"invariant violated: {invariant}" + (f" ({detail})" if detail else ""))


def _require(cond: bool, invariant: str, detail: str = "") -> None:
    if not cond:
        raise InvariantError(invariant, detail)


@dataclass(frozen=True)
class TechNoiseCoeffs:
    """Technical-noise coefficients.

    ``a_o`` and ``a_e`` multiply *angular* damping rates, i.e. they carry
    units of (rad/s)^-1.  ``c_xx``, ``c_yy``, ``c_xy`` are two-sided
    fractional amplitude/phase densities (1/Hz); the shot-noise-normalized
    densities used by the noise model are ``4 * photon_flux * c``.
    """

    a_o: float = 0.0
    a_e: float = 0.0
    b_e: float = 0.0
    c_xx: float = 0.0
    c_yy: float = 0.0
    c_xy: float = 0.0

    def __post_init__(self):
        _require(min(self.a_o, self.a_e, self.b_e) >= 0, "a_o, a_e, b_e >= 0")
        _require(self.c_xx >= 0 and self.c_yy >= 0, "c_xx, c_yy >= 0")
        _require(
            self.c_xy**2 <= self.c_xx * self.c_yy * (1 + 1e-12) + 1e-300,
            "c_xy^2 <= c_xx*c_yy",
        )


@dataclass(frozen=True)
class LockBeamSpec:
    """Auxiliary cavity-lock beam.

    Only the product ``gamma_lock * n_min_lock`` enters the bath average;
    when ``gamma_lock_nmin`` is set it overrides the pair.
    """

    power: float = 0.0
    detuning: float = 0.0
    gamma_lock: float = 0.0
    n_min_lock: float = 0.0
    gamma_lock_nmin: float | None = None

    def __post_init__(self):
        _require(self.power >= 0 and self.gamma_lock >= 0 and self.n_min_lock >= 0, "lock fields >= 0")
        _require(self.gamma_lock_nmin is None or self.gamma_lock_nmin >= 0, "lock product >= 0")

    @property
    def product(self) -> float:
        if self.gamma_lock_nmin is not None:
            return self.gamma_lock_nmin
        return self.gamma_lock * self.n_min_lock


@dataclass(frozen=True)
class DetectionChain:
    """Measurement-chain efficiencies and path factors."""

    xi_o: float = 1.0
    xi_e: float = 1.0
    n_hemt: float | None = None
    n_xi_o: float | None = None
    n_xi_e: float | None = None
    alpha: float = 1.0
    beta: float = 1.0
    gamma_path: float = 1.0
    delta: float = 1.0
    sigma_q: float | None = None
    xi_path: float | None = None
    xi_dark: float | None = None

    def __post_init__(self):
        _require(0 < self.xi_o <= 1 and 0 < self.xi_e <= 1, "0 < xi <= 1")
        for xi, n in ((self.xi_o, self.n_xi_o), (self.xi_e, self.n_xi_e)):
            if n is not None:
                _require(
                    math.isclose(xi, 1.0 / (n + 0.5), rel_tol=1e-6),
                    "xi = 1/(N_xi + 1/2)",
                    f"xi={xi}, N_xi={n}",
                )

    def optical_crosscheck(self) -> float | None:
        """Direct estimate ``xi_path * xi_dark * sigma_q`` of the optical chain efficiency."""
        if None in (self.xi_path, self.xi_dark, self.sigma_q):
            return None
        return self.xi_path * self.xi_dark * self.sigma_q

    def hemt_efficiency(self) -> float | None:
        return None if self.n_hemt is None else 1.0 / (self.n_hemt + 0.5)


@dataclass(frozen=True)
class TransducerParams:
    omega_o: float
    omega_e: float
    omega_m: float
    kappa_o_ext: float
    kappa_o_back: float
    kappa_o_int: float
    kappa_e_ext: float
    gamma_m: float
    kappa_e_int_table: tuple[tuple[float, float], ...]
    g_o: float
    g_e: float
    eps_pc: float = 1.0
    eps_cl: float = 1.0
    eps_lock: float = 1.0
    eps_pl: float = 1.0
    x_zp_e: float = 0.0
    x_zp_o: float = 0.0
    cavity_length: float = 0.0
    membrane_gap: float = 0.0
    pad_gap: float = 0.0
    wavelength: float = 0.0
    n_th: float = 0.0
    delta_b: float = 0.0
    tech_noise: TechNoiseCoeffs = field(default_factory=TechNoiseCoeffs)
    lock: LockBeamSpec = field(default_factory=LockBeamSpec)
    chain: DetectionChain = field(default_factory=DetectionChain)
    dataset: str | None = None

    def __post_init__(self):
        table = tuple((float(n), float(k)) for n, k in self.kappa_e_int_table)
        object.__setattr__(self, "kappa_e_int_table", table)
        rates = {
            "omega_o": self.omega_o,
            "omega_e": self.omega_e,
            "omega_m": self.omega_m,
            "kappa_o_ext": self.kappa_o_ext,
            "kappa_o_back": self.kappa_o_back,
            "kappa_o_int": self.kappa_o_int,
            "kappa_e_ext": self.kappa_e_ext,
            "gamma_m": self.gamma_m,
            "g_o": self.g_o,
            "g_e": self.g_e,
        }
        for name, value in rates.items():
            _require(math.isfinite(value) and value >= 0, "all rates >= 0", f"{name}={value}")
        for name in ("eps_pc", "eps_cl", "eps_lock", "eps_pl"):
            v = getattr(self, name)
            _require(0.0 <= v <= 1.0, "modematchings in [0, 1]", f"{name}={v}")
        for name in ("x_zp_e", "x_zp_o", "cavity_length", "membrane_gap", "pad_gap", "wavelength", "n_th"):
            _require(getattr(self, name) >= 0, "lengths and occupancies >= 0", name)
        _require(self.kappa_o > 0, "kappa_o = kappa_o_ext + kappa_o_back + kappa_o_int > 0")
        if table:
            ns = np.array([n for n, _ in table])
            ks = np.array([k for _, k in table])
            _require(bool(np.all(ns >= 0)) and bool(np.all(ks >= 0)), "kappa_e_int table entries >= 0")
            _require(bool(np.all(np.diff(ns) > 0)), "kappa_e_int table photon numbers strictly increasing")
            _require(bool(np.all(np.diff(ks) >= 0)), "kappa_e_int table monotone non-decreasing")
            _require(self.kappa_e_ext + ks[0] > 0, "kappa_e = kappa_e_ext + kappa_e_int > 0")
        else:
            _require(self.kappa_e_ext > 0, "kappa_e = kappa_e_ext + kappa_e_int > 0")

    @property
    def kappa_o(self) -> float:
        return self.kappa_o_ext + self.kappa_o_back + self.kappa_o_int

    @property
    def eps(self) -> float:
        """Bidirectional modematching sqrt(eps_pc * eps_cl)."""
        return math.sqrt(self.eps_pc * self.eps_cl)

    def resolved_sideband_ok(self, kappa_e: float | None = None) -> bool:
        """True when kappa_o, kappa_e and 4*omega_m are all finite and positive."""
        ke = self.kappa_e_ext + (self.kappa_e_int_table[0][1] if self.kappa_e_int_table else 0.0)
        if kappa_e is not None:
            ke = kappa_e
        vals = (self.kappa_o, ke, 4 * self.omega_m)
        return all(math.isfinite(v) and v > 0 for v in vals)

    def replace(self, **changes) -> "TransducerParams":
        return dataclasses.replace(self, **changes)


def kappa_e_at_power(params: TransducerParams, n_photon: float) -> float:
    """Total microwave linewidth at intracavity photon number ``n_photon``.

    Piecewise-linear in the tabulated internal loss, clamped at both ends.
    """
    if n_photon < 0:
        raise ValueError("n_photon must be >= 0")
    if not params.kappa_e_int_table:
        raise ValueError("empty kappa_e_int table")
    ns, ks = zip(*params.kappa_e_int_table)
    return params.kappa_e_ext + float(np.interp(n_photon, ns, ks))


# ---------------------------------------------------------------- presets

_MHZ = TWO_PI * 1e6

_DATASETS = {
    # dual-valued entries: cooling (fig2) and added-noise (fig3) configurations
    "fig2": dict(eps_pc=0.86, eps_cl=0.91, eps_pl=0.75, gamma_lock_hz=5.0, n_th=1000.0,
                 a_o=2.8e-6, a_e=1.1e-3, b_e=0.077),
    "fig3": dict(eps_pc=0.80, eps_cl=0.79, eps_pl=0.79, gamma_lock_hz=2.0, n_th=980.0,
                 a_o=2.8e-6, a_e=1.17e-3, b_e=0.1),
}


def _gamma_em_red(g, n_photon, kappa, omega_m):
    # damping at Delta = -omega_m
    return g**2 * n_photon * kappa * (4.0 / kappa**2 - 1.0 / (kappa**2 / 4 + 4 * omega_m**2))


def default_kappa_e_int_table(kappa_e_ext=1.42 * _MHZ, g_e=TWO_PI * 1.6, omega_m=TWO_PI * 1.451e6, nodes=25):
    """Stand-in for the measured internal-loss curve.

    The total linewidth is taken linear in the damping it produces, through
    (75 Hz, 1.75 MHz) and (100 Hz, 1.79 MHz), and clipped to the measured
    1.64-2.31 MHz span; each node is then mapped to the photon number that
    yields that damping at red detuning.
    """
    slope = (1.79 - 1.75) / (100.0 - 75.0)  # MHz per Hz of damping
    lo = 75.0 - (1.75 - 1.64) / slope
    hi = 75.0 + (2.31 - 1.75) / slope
    gammas_hz = np.linspace(lo, hi, nodes)
    kappas = (1.75 + slope * (gammas_hz - 75.0)) * _MHZ
    table = []
    for gam_hz, kap in zip(gammas_hz, kappas):
        unit = _gamma_em_red(g_e, 1.0, kap, omega_m)
        table.append((TWO_PI * gam_hz / unit, kap - kappa_e_ext))
    return tuple(table)


def table1_preset(dataset: str = "fig2") -> TransducerParams:
    """Reference device parameters with dual-valued entries resolved by ``dataset``.

    ``dataset`` is ``"fig2"`` (ground-state cooling data) or ``"fig3"``
    (added-noise minimization data).
    """
    if dataset not in _DATASETS:
        raise ValueError(f"dataset must be one of {sorted(_DATASETS)}, got {dataset!r}")
    d = _DATASETS[dataset]
    return TransducerParams(
        omega_o=TWO_PI * 277e12,
        omega_e=TWO_PI * 7.938e9,
        omega_m=TWO_PI * 1.451e6,
        kappa_o_ext=2.12 * _MHZ,
        kappa_o_back=0.0,
        kappa_o_int=(2.68 - 2.12) * _MHZ,
        kappa_e_ext=1.42 * _MHZ,
        gamma_m=TWO_PI * 0.113,
        kappa_e_int_table=default_kappa_e_int_table(),
        g_o=TWO_PI * 60.0,
        g_e=TWO_PI * 1.6,
        eps_pc=d["eps_pc"],
        eps_cl=d["eps_cl"],
        eps_lock=0.85,
        eps_pl=d["eps_pl"],
        x_zp_e=0.5e-15,
        x_zp_o=0.9e-15,
        cavity_length=2.3e-3,
        membrane_gap=380e-6,
        pad_gap=830e-9,
        wavelength=1084.4e-9,
        n_th=d["n_th"],
        delta_b=TWO_PI * 2.4e6,
        tech_noise=TechNoiseCoeffs(a_o=d["a_o"], a_e=d["a_e"], b_e=d["b_e"]),
        lock=LockBeamSpec(
            power=20e-9,
            detuning=-TWO_PI * 50e3,
            gamma_lock=TWO_PI * d["gamma_lock_hz"],
            gamma_lock_nmin=TWO_PI * 40.0,
        ),
        chain=DetectionChain(
            xi_o=0.276, xi_e=0.029, n_hemt=8.5, sigma_q=0.87, xi_path=0.4, xi_dark=0.79
        ),
        dataset=dataset,
    )


# ---------------------------------------------------------------- file I/O

_HZ_KEYS = {
    "omega_o", "omega_e", "omega_m", "kappa_o_ext", "kappa_o_back", "kappa_o_int",
    "kappa_e_ext", "gamma_m", "g_o", "g_e", "delta_b",
}
_PLAIN_KEYS = {
    "eps_pc", "eps_cl", "eps_lock", "eps_pl", "x_zp_e", "x_zp_o", "cavity_length",
    "membrane_gap", "pad_gap", "wavelength", "n_th",
}
_LOCK_HZ = {"detuning", "gamma_lock", "gamma_lock_nmin"}
_LOCK_PLAIN = {"power", "n_min_lock"}
_TECH_KEYS = {f.name for f in dataclasses.fields(TechNoiseCoeffs)}
_CHAIN_KEYS = {f.name for f in dataclasses.fields(DetectionChain)}


def _number(key: str, value: Any) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(key, f"expected a number, got {value!r}")
    return float(value)


def _parse_group(doc: Mapping, name: str, hz: set, plain: set) -> dict:
    raw = doc.get(name, {}) or {}
    if not isinstance(raw, Mapping):
        raise SchemaError(name, "expected a mapping")
    out = {}
    for key, value in raw.items():
        if key.endswith("_hz") and key[:-3] in hz:
            out[key[:-3]] = None if value is None else TWO_PI * _number(f"{name}.{key}", value)
        elif key in plain:
            out[key] = None if value is None else _number(f"{name}.{key}", value)
        else:
            raise SchemaError(f"{name}.{key}")
    return out


def params_from_dict(doc: Mapping) -> TransducerParams:
    """Build :class:`TransducerParams` from a parsed parameter document."""
    if not isinstance(doc, Mapping):
        raise SchemaError("<root>", "expected a mapping")
    if "schema_version" not in doc:
        raise SchemaError("schema_version", "missing")
    if doc["schema_version"] != SCHEMA_VERSION:
        raise SchemaError("schema_version", f"unsupported version {doc['schema_version']!r}")
    kw: dict[str, Any] = {}
    table = None
    for key, value in doc.items():
        if key in ("schema_version", "tech_noise", "lock", "chain"):
            continue
        if key == "dataset":
            kw["dataset"] = None if value is None else str(value)
        elif key == "kappa_e_int_table":
            if not isinstance(value, list):
                raise SchemaError(key, "expected a list of {n_photon, kappa_int_hz}")
            table = []
            for i, row in enumerate(value):
                if not isinstance(row, Mapping) or set(row) != {"n_photon", "kappa_int_hz"}:
                    raise SchemaError(f"{key}[{i}]", "expected keys n_photon, kappa_int_hz")
                table.append((_number(f"{key}[{i}].n_photon", row["n_photon"]),
                              TWO_PI * _number(f"{key}[{i}].kappa_int_hz", row["kappa_int_hz"])))
        elif key.endswith("_hz") and key[:-3] in _HZ_KEYS:
            kw[key[:-3]] = TWO_PI * _number(key, value)
        elif key in _PLAIN_KEYS:
            kw[key] = _number(key, value)
        else:
            raise SchemaError(key)
    if table is None:
        raise SchemaError("kappa_e_int_table", "missing")
    kw["kappa_e_int_table"] = tuple(table)
    missing = {"omega_o", "omega_e", "omega_m", "kappa_o_ext", "kappa_o_back", "kappa_o_int",
               "kappa_e_ext", "gamma_m", "g_o", "g_e"} - set(kw)
    if missing:
        raise SchemaError(sorted(missing)[0] + "_hz", "missing")
    tech = _parse_group(doc, "tech_noise", set(), _TECH_KEYS)
    lock = _parse_group(doc, "lock", _LOCK_HZ, _LOCK_PLAIN)
    chain = _parse_group(doc, "chain", set(), _CHAIN_KEYS)
    return TransducerParams(
        **kw,
        tech_noise=TechNoiseCoeffs(**tech),
        lock=LockBeamSpec(**lock),
        chain=DetectionChain(**chain),
    )


def params_to_dict(params: TransducerParams) -> dict:
    doc: dict[str, Any] = {"schema_version": SCHEMA_VERSION}
    if params.dataset is not None:
        doc["dataset"] = params.dataset
    for f in dataclasses.fields(params):
        name = f.name
        value = getattr(params, name)
        if name in _HZ_KEYS:
            doc[f"{name}_hz"] = value / TWO_PI
        elif name in _PLAIN_KEYS:
            doc[name] = value
    doc["kappa_e_int_table"] = [
        {"n_photon": n, "kappa_int_hz": k / TWO_PI} for n, k in params.kappa_e_int_table
    ]
    doc["tech_noise"] = dataclasses.asdict(params.tech_noise)
    lock = {}
    for f in dataclasses.fields(LockBeamSpec):
        v = getattr(params.lock, f.name)
        if f.name in _LOCK_HZ:
            lock[f"{f.name}_hz"] = None if v is None else v / TWO_PI
        else:
            lock[f.name] = v
    doc["lock"] = lock
    doc["chain"] = dataclasses.asdict(params.chain)
    return doc


def load_params(source: str | Path | Mapping) -> TransducerParams:
    """Load and validate a parameter document.

    ``source`` may be a path to a YAML/JSON file, a YAML string, or an
    already-parsed mapping.
    """
    if isinstance(source, Mapping):
        return params_from_dict(source)
    text = Path(source).read_text() if _looks_like_path(source) else str(source)
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise SchemaError("<document>", f"malformed: {exc}") from exc
    return params_from_dict(doc)


def _looks_like_path(source) -> bool:
    if isinstance(source, Path):
        return True
    return "\n" not in source and ":" not in source.split("/")[-1] and Path(source).exists()


def dump_params(params: TransducerParams, path: str | Path | None = None) -> str:
    """Serialize to YAML (full float precision); optionally write to ``path``."""
    text = yaml.safe_dump(params_to_dict(params), sort_keys=False)
    if path is not None:
        Path(path).write_text(text)
    return text
