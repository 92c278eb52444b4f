"""End-to-end acceptance checks; each test prints one PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines inline;
they are also collected into an ``acceptance criteria`` section of the
terminal summary.
"""

import dataclasses
import itertools
import time
from importlib import resources

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from xduce import (
    TechNoiseCoeffs,
    TechnicalDensities,
    added_noise_full,
    added_noise_ideal,
    efficiency,
    membrane_occupancy,
    n_eff_microwave,
    operating_point,
)
from xduce.constants import TWO_PI
from xduce.dynamics import gain, n_min
from xduce.inference import compose_four_point, efficiency_four_point, fit_lorentzian, unsquash
from xduce.inference.pipeline import SweepSetting, cooling_round_trip, sideband_pair
from xduce.inference.thermometry import occupancy_from_asymmetry, sideband_ratio
from xduce.technical_noise import added_noise_budget
from xduce.tmm import g_e_from_geometry, load_stack, resonances, sweep


def _within(value, target, tol):
    return abs(value - target) <= tol


def _rel(value, target, rel):
    return abs(value - target) <= rel * abs(target)


def _mark(ok):
    return "ok" if ok else "MISS"


def test_c01_backaction_limit(fig2, verdict):
    nm = n_min(fig2.kappa_o, -fig2.omega_m, fig2.omega_m)
    A = gain(fig2.kappa_o, -fig2.omega_m, fig2.omega_m)
    ok = _within(nm, 0.22, 0.005) and _within(A, 1.22, 0.005)
    verdict("1  backaction limit", ok, f"n_min,o={nm:.4f} (0.22+-0.005)  A_o={A:.4f} (1.22+-0.005)")


def test_c02_matched_efficiency(fig2, fig3, verdict):
    eta_M = efficiency(fig2, operating_point(fig2, TWO_PI * 100, TWO_PI * 100, kappa_e=TWO_PI * 1.79e6)).eta_matched
    op = operating_point(fig3, TWO_PI * 75, TWO_PI * 85, kappa_e=TWO_PI * 1.75e6)
    eta_t = efficiency(fig3, op).eta_t
    ok = _within(eta_M, 0.55, 0.01) and _within(eta_t, 0.49, 0.01)
    verdict("2  matched efficiency", ok, f"eta_M={eta_M:.4f} (0.55+-0.01)  eta_t={eta_t:.4f} (0.49+-0.01)")


def test_c03_microwave_technical_occupancy(fig2, verdict):
    p = fig2.replace(tech_noise=dataclasses.replace(fig2.tech_noise, a_e=1.1e-3, b_e=0.077))
    n = n_eff_microwave(p, TWO_PI * 100)
    verdict("3  microwave technical occupancy", _within(n, 0.77, 0.02), f"n_eff,e={n:.4f} (0.77+-0.02)")


def test_c04_noise_minimum(fig3, verdict):
    t0 = time.perf_counter()
    grid = np.arange(60.0, 250.5, 1.0)
    vals = []
    for g in grid:
        op = operating_point(fig3, TWO_PI * g, TWO_PI * 85)
        vals.append(added_noise_full(fig3, op, TechnicalDensities.from_a_o(fig3, op)))
    i = int(np.argmin(vals))
    op = operating_point(fig3, TWO_PI * grid[i], TWO_PI * 85)
    C = TechnicalDensities.from_a_o(fig3, op)
    n_m = membrane_occupancy(fig3, op)
    b = added_noise_budget(fig3, op, C)
    expected = {"n_eff_e": 1.4, "n_th": 1.0, "lock": 0.4, "n_min_o": 0.2, "n_min_e": 0.1, "white": 0.1}
    budget_ok = {k: _within(b[k], v, 0.15) for k, v in expected.items()}
    checks = {
        "N_add": _within(vals[i], 3.2, 0.3),
        "at": _within(grid[i], 135, 10),
        "n_m": _within(n_m, 1.5, 0.15),
        "budget": all(budget_ok.values()),
    }
    elapsed = time.perf_counter() - t0
    parts = ", ".join(f"{k}={b[k]:.2f}" for k in expected)
    verdict(
        "4  noise minimum", all(checks.values()) and elapsed < 1.0,
        f"N_add={vals[i]:.3f} (3.2+-0.3) {_mark(checks['N_add'])}; Gamma_e/2pi={grid[i]:.0f} Hz (135+-10) "
        f"{_mark(checks['at'])}; n_m={n_m:.3f} (1.5+-0.15) {_mark(checks['n_m'])}; budget {{{parts}}} "
        f"{_mark(checks['budget'])}; {elapsed:.2f} s",
    )


def test_c05_transfer_matrix(verdict):
    t0 = time.perf_counter()
    stack = load_stack(resources.files("xduce.data").joinpath("default_stack.yaml").read_text())
    fsr = float(np.mean(np.diff(resonances(stack.without_movable(), (1083.0e-9, 1086.0e-9)))))
    res = sweep(stack, (1083.0e-9, 1086.2e-9), 401)
    lam = res.wavelength
    nulls = lam[res.sign_changes()]
    period = float(np.mean(np.diff(nulls[::2])))
    maxima = lam[res.local_maxima()]
    start, stop = nulls[0], nulls[2]
    n_nulls = int(np.count_nonzero((nulls >= start) & (nulls < stop)))
    n_max = int(np.count_nonzero((maxima >= start) & (maxima < stop)))
    i = res.lower_maximum()
    k_ext = res.kappa_ext[i] / TWO_PI
    G_o = abs(res.G_o_hz_per_fm()[i])
    elapsed = time.perf_counter() - t0
    checks = {
        "fsr": _rel(fsr, 260e-12, 0.02),
        "period": _rel(period, 1.55e-9, 0.02),
        "pattern": n_nulls == 2 and n_max == 2,
        "k_ext": _rel(k_ext, 2.12e6, 0.15),
        "G_o": _rel(G_o, 70.0, 0.20),
    }
    verdict(
        "5  transfer matrix", all(checks.values()) and elapsed < 30,
        f"FSR={fsr * 1e12:.1f} pm {_mark(checks['fsr'])}; membrane period={period * 1e9:.3f} nm "
        f"{_mark(checks['period'])}; nulls/maxima per period={n_nulls}/{n_max} {_mark(checks['pattern'])}; "
        f"kappa_ext/2pi={k_ext / 1e6:.2f} MHz (2.12+-15%) {_mark(checks['k_ext'])}; "
        f"G_o={G_o:.1f} Hz/fm (70+-20%) {_mark(checks['G_o'])}; {elapsed:.1f} s",
    )


def test_c06_geometry_inversion(fig2, verdict):
    out = g_e_from_geometry(fig2)
    G_e = out["G_e"] / TWO_PI * 1e-15
    d = out["d"]
    ok = _rel(G_e, 3.2, 0.02) and _rel(d, 830e-9, 0.05)
    verdict("6  geometry inversion", ok, f"G_e={G_e:.4f} Hz/fm (3.2+-2%)  d={d * 1e9:.1f} nm (830+-5%)")


def test_c07_thermometry_round_trip(verdict):
    worst = 0.0
    for n_m, nmin in itertools.product((0.3, 1.0, 3.0, 30.0, 1000.0), (0.05, 0.22, 1.0)):
        got = occupancy_from_asymmetry(sideband_ratio(n_m, nmin), nmin)
        worst = max(worst, abs(got / n_m - 1))
    verdict("7  thermometry round trip", worst <= 1e-12, f"max relative error {worst:.2e} over 15 pairs (<=1e-12)")


def test_c08_squashing_round_trip(fig2, verdict):
    t0 = time.perf_counter()
    op = operating_point(fig2, 0.0, TWO_PI * 3000)
    base = TechnicalDensities.from_a_o(fig2, op)
    clean_up, clean_lo = sideband_pair(fig2, op, TechnicalDensities())
    r0 = clean_lo.amplitude / clean_up.amplitude
    errors = []

    @settings(max_examples=20, deadline=None, derandomize=True)
    @given(st.floats(0.01, 3.0))
    def one(scale):
        up, lo = sideband_pair(fig2, op, base.scaled(scale))
        fu = fit_lorentzian(up.omega, up.density, antisym=True)
        fl = fit_lorentzian(lo.omega, lo.density, antisym=True)
        cu, cl = unsquash((fu["amplitude"], fl["amplitude"]), (fu["floor"] - 1, fl["floor"] - 1), fig2, op)
        errors.append(abs(cl / cu / r0 - 1))

    one()
    worst = max(errors)
    elapsed = time.perf_counter() - t0
    verdict(
        "8  squashing round trip", worst <= 0.01,
        f"max |ratio error| {worst:.1e} over {len(errors)} phase-noise levels (<=1%); {elapsed:.2f} s",
    )


def test_c09_pipeline_round_trip(fig2, verdict):
    t0 = time.perf_counter()
    p = fig2.replace(n_th=1000.0, tech_noise=dataclasses.replace(fig2.tech_noise, a_o=2.8e-6))
    optical = [SweepSetting(0.0, TWO_PI * g) for g in np.geomspace(20, 2000, 12)]
    electro = [SweepSetting(TWO_PI * 100, TWO_PI * g) for g in np.geomspace(20, 2000, 10)]
    truth = {"n_th": 1000.0, "a_o": 2.8e-6, "n_eff_e": 0.8}
    hits = dict.fromkeys(truth, 0)
    n = 100
    for seed in range(n):
        r = cooling_round_trip(p, optical, electro, 0.8, fig2.chain.xi_o, 10_000, seed)
        fits = {"n_th": r["optical_only"], "a_o": r["optical_only"], "n_eff_e": r["electro_optical"]}
        for k, v in truth.items():
            hits[k] += abs(fits[k][k] - v) <= 3 * fits[k].error(k)
    elapsed = time.perf_counter() - t0
    cover = {k: h / n for k, h in hits.items()}
    ok = all(c >= 0.95 for c in cover.values()) and elapsed < 180
    verdict(
        "9  pipeline round trip", ok,
        "within 3 sigma: " + ", ".join(f"{k} {c:.2f}" for k, c in cover.items()) + f" (>=0.95); {elapsed:.1f} s",
    )


def test_c10_four_point_invariance(verdict):
    rng = np.random.default_rng(20240610)
    worst = 0.0
    for _ in range(1000):
        eta = rng.uniform(0.01, 0.99)
        A_e, A_o = rng.uniform(1.0, 2.0, 2)
        eps_pl = rng.uniform(0.1, 1.0)
        a, b, g, d = 10.0 ** rng.uniform(-3, 3, 4)
        m = compose_four_point(eta, A_e, A_o, eps_pl, a, b, g, d)
        got = efficiency_four_point(m["oe"], m["eo"], m["ee"], m["oo"], eps_pl, A_e, A_o)
        worst = max(worst, abs(got / eta - 1))
    verdict("10 four-point invariance", worst <= 1e-12, f"max relative error {worst:.2e} over 1000 draws (<=1e-12)")


def test_c11_ideal_limit(fig3, fig2, verdict):
    p = fig3.replace(tech_noise=TechNoiseCoeffs())
    worst = 0.0
    for ge, go in itertools.product(np.geomspace(10, 3000, 10), np.geomspace(10, 3000, 10)):
        op = operating_point(p, TWO_PI * ge, TWO_PI * go)
        full = added_noise_full(p, op, TechnicalDensities())
        worst = max(worst, abs(full / added_noise_ideal(p, op, "up") - 1))
    q = fig2.replace(tech_noise=TechNoiseCoeffs(), lock=fig2.lock.__class__())
    op = operating_point(q, 0.0, 1e4 * q.gamma_m)
    n_m = membrane_occupancy(q, op)
    limit_ok = _rel(n_m, op.n_min_o, 0.01)
    verdict(
        "11 ideal limit", worst <= 1e-12 and limit_ok,
        f"full/ideal max relative error {worst:.1e} over 100 points (<=1e-12) {_mark(worst <= 1e-12)}; "
        f"n_m={n_m:.4f} vs n_min,o={op.n_min_o:.4f} at Gamma_o=1e4 gamma_m (1%) {_mark(limit_ok)}",
    )
