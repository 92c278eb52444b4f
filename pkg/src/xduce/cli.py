"""Command-line front end: ``xduce <command> [options]``."""

from __future__ import annotations

import argparse
import math
import sys
import warnings
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from .artifacts import RunManifest, emit, format_report, format_table, read_table
from .constants import TWO_PI
from .params import ParamsError, SchemaError, load_params, params_from_dict, table1_preset

PRESET_PREFIX = "preset:"
DEFAULT_CONFIG = "preset:fig3"


class CliError(Exception):
    pass


# -- configuration -----------------------------------------------------------------


def _yaml_line(path: str, dotted: str) -> int | None:
    """1-based line of a dotted key in a YAML file, if it can be found."""
    try:
        node = yaml.compose(Path(path).read_text())
    except (OSError, yaml.YAMLError):
        return None
    parts = dotted.split(".")
    line = None
    for part in parts:
        part = part.split("[")[0]
        if not isinstance(node, yaml.MappingNode):
            break
        for k, v in node.value:
            if k.value == part:
                line = k.start_mark.line + 1
                node = v
                break
        else:
            break
    return line


def load_config(spec: str | None):
    """Parameters and the optional ``cli`` defaults section from a preset or a YAML file."""
    spec = spec or DEFAULT_CONFIG
    if spec.startswith(PRESET_PREFIX):
        return table1_preset(spec[len(PRESET_PREFIX):]), {}
    try:
        doc = yaml.safe_load(Path(spec).read_text())
    except OSError as exc:
        raise CliError(f"{spec}: {exc.strerror}") from None
    except yaml.YAMLError as exc:
        raise CliError(f"{spec}: malformed YAML: {exc}") from None
    if not isinstance(doc, dict):
        raise CliError(f"{spec}: expected a mapping at the top level")
    cli = doc.pop("cli", {}) or {}
    if "preset" in doc:
        base = doc.pop("preset")
        if doc:
            raise CliError(f"{spec}: a preset config may only carry 'cli' defaults")
        return table1_preset(base), cli
    try:
        return params_from_dict(doc), cli
    except SchemaError as exc:
        line = _yaml_line(spec, exc.key)
        where = f"{spec}:{line}" if line else spec
        raise CliError(f"{where}: {exc}") from None
    except ParamsError as exc:
        raise CliError(f"{spec}: {exc}") from None


# -- commands --------------------------------------------------------------------


def _manifest(args, inputs=()):
    return RunManifest(
        command=args.command,
        config=args.config or DEFAULT_CONFIG,
        inputs=[str(p) for p in inputs],
        outputs=[args.out] if args.out and args.out != "-" else [],
        seed=args.seed,
    )


def cmd_predict(args, params) -> int:
    from .predict import predict

    row = predict(params, TWO_PI * args.gamma_e_hz, TWO_PI * args.gamma_o_hz, include_lock=not args.no_lock)
    emit(format_table([row], _manifest(args), args.format), args.out)
    return 0


def cmd_sweep(args, params) -> int:
    from .predict import axis_values, sweep

    vals = axis_values(args.start_hz, args.stop_hz, args.points, args.scale)
    fixed = args.gamma_o_hz if args.axis == "gamma_e" else args.gamma_e_hz
    rows = sweep(params, args.axis, TWO_PI * vals, TWO_PI * fixed, include_lock=not args.no_lock)
    emit(format_table(rows, _manifest(args), args.format), args.out)
    return 0


def cmd_synth(args, params) -> int:
    from .dynamics import operating_point
    from .inference.pipeline import analysis_grid
    from .predict import technical_densities
    from .synth import SubstrateMode, SynthConfig, realize
    from .technical_noise import sideband_spectrum

    op = operating_point(params, TWO_PI * args.gamma_e_hz, TWO_PI * args.gamma_o_hz, include_lock=not args.no_lock)
    C = technical_densities(params, op)
    s = 1 if args.side == "upper" else -1
    grid = analysis_grid(op, s * params.omega_m, args.half_widths, args.points)
    base = sideband_spectrum(params, op, C, "+" if s > 0 else "-", grid)
    sub = None
    if args.substrate_rel_amp:
        sub = SubstrateMode(
            TWO_PI * args.substrate_hz,
            args.substrate_rel_amp * np.exp(1j * args.substrate_phase),
            TWO_PI * args.substrate_width_hz,
        )
    xi = params.chain.xi_o if args.xi is None else args.xi
    spec = realize(SynthConfig(base, xi, sub, args.M, args.seed or 0, 0 if s > 0 else 1))
    rows = [
        {"detuning_hz": w / TWO_PI, "psd_photons_per_s_per_hz": p, "sigma": e}
        for w, p, e in zip(spec.omega, spec.psd, spec.sigma)
    ]
    header = {"M": spec.M, "normalization": spec.normalization, "side": args.side, "xi": xi,
              "gamma_e_hz": args.gamma_e_hz, "gamma_o_hz": args.gamma_o_hz, "n_m": base.n_m}
    emit(format_table(rows, _manifest(args), args.format, header), args.out)
    return 0


def _report(args, reports: dict, inputs) -> int:
    emit(format_report({k: v.to_dict() for k, v in reports.items()}, _manifest(args, inputs), args.format), args.out)
    return 0 if all(v.converged for v in reports.values()) else 1


def cmd_fit_spectrum(args, params) -> int:
    from .inference import fit_lorentzian

    cols, _ = read_table(args.input, ["detuning_hz"], ["psd", "psd_photons_per_s_per_hz", "sigma"])
    psd = cols.get("psd", cols.get("psd_photons_per_s_per_hz"))
    if psd is None:
        raise CliError(f"{args.input}: missing column psd")
    with warnings.catch_warnings():
        warnings.simplefilter("always")
        sigma = cols.get("sigma")
        if sigma is None:
            print("warning: no sigma column; weighting uniformly", file=sys.stderr)
        res = fit_lorentzian(TWO_PI * cols["detuning_hz"], psd, sigma, args.model, args.antisym)
    return _report(args, {"spectrum": _to_hz(res)}, [args.input])


_RATE_NAMES = {"center", "width", "center_2", "width_2", "gamma_m", "Gamma_T", "a_gamma", "b_gamma", "slope"}


def _to_hz(res):
    """Copy of a fit result with angular-rate parameters reported in Hz."""
    import copy

    out = copy.deepcopy(res)
    f = np.array([1 / TWO_PI if n in _RATE_NAMES else 1.0 for n in res.names])
    out.values = res.values * f
    out.covariance = res.covariance * np.outer(f, f)
    out.names = tuple(n + "_hz" if n in _RATE_NAMES else n for n in res.names)
    return out


def _sweep_table(path):
    cols, _ = read_table(path, ["gamma_e_hz", "gamma_o_hz", "value"], ["sigma"])
    if "sigma" not in cols:
        print("warning: no sigma column; weighting uniformly", file=sys.stderr)
    return TWO_PI * cols["gamma_e_hz"], TWO_PI * cols["gamma_o_hz"], cols["value"], cols.get("sigma")


def _fixed(pairs) -> dict:
    out = {}
    for p in pairs or []:
        k, sep, v = p.partition("=")
        if not sep:
            raise CliError(f"--fix expects name=value, got {p!r}")
        out[k.strip()] = float(v)
    return out


def cmd_fit_cooling(args, params) -> int:
    from .inference import CoolingCurvePoint, fit_cooling_curve

    ge, go, y, s = _sweep_table(args.input)
    s = np.ones_like(y) if s is None else s
    pts = [CoolingCurvePoint(a, b, v, e) for a, b, v, e in zip(ge, go, y, s)]
    res = fit_cooling_curve(pts, params, args.mode, _fixed(args.fix))
    return _report(args, {"cooling": res}, [args.input])


def cmd_fit_efficiency(args, params) -> int:
    from .inference import fit_efficiency_curve

    ge, go, y, s = _sweep_table(args.input)
    res = fit_efficiency_curve(ge, go, y, s, params, args.mode)
    return _report(args, {"efficiency": res}, [args.input])


def cmd_fit_addednoise(args, params) -> int:
    from .inference import added_noise_minimum, fit_added_noise_curve

    ge, go, y, s = _sweep_table(args.input)
    free = tuple(x.strip() for x in args.free.split(",") if x.strip())
    res = fit_added_noise_curve(ge, go, y, s, params, free, _fixed(args.fix))
    g_min, n_min_ = added_noise_minimum(params, res, float(np.median(go)), (float(ge.min()), float(ge.max())))
    res.extra.update(minimum_gamma_e_hz=g_min / TWO_PI, minimum_n_add=n_min_)
    return _report(args, {"added_noise": res}, [args.input])


def cmd_fit_tempsweep(args, params) -> int:
    from .dynamics import operating_point
    from .inference import fit_temperature_sweep

    cols, _ = read_table(args.input, ["t_k", "area", "gamma_t_hz"], ["sigma"])
    if "sigma" not in cols:
        print("warning: no sigma column; weighting uniformly", file=sys.stderr)
    excl = [int(i) for i in args.exclude.split(",") if i.strip()] if args.exclude else []
    go = TWO_PI * args.gamma_o_hz if args.gamma_o_hz else None
    res = fit_temperature_sweep(
        cols["t_k"], cols["area"], TWO_PI * args.a_gamma_hz_per_k, TWO_PI * args.b_gamma_hz,
        sigma=cols.get("sigma"), exclude=excl, params=params if go else None,
        Gamma_o=go, Gamma_T=float(np.mean(TWO_PI * cols["gamma_t_hz"])) if go else None,
    )
    return _report(args, {"temperature_sweep": res}, [args.input])


def cmd_fit_ringdown(args, params) -> int:
    from .inference import RingdownTrace, fit_ringdown

    traces = []
    powers = [float(p) for p in args.powers.split(",")] if args.powers else None
    if powers is not None and len(powers) != len(args.inputs):
        raise CliError("--powers needs one value per trace file")
    for i, path in enumerate(args.inputs):
        cols, header = read_table(path, ["t_s", "amp"])
        if powers is not None:
            P = powers[i]
        elif "power_w" in header:
            P = float(header["power_w"])
        else:
            raise CliError(f"{path}: no '# power_w:' header and no --powers given")
        traces.append(RingdownTrace(cols["t_s"], cols["amp"], P))
    res = fit_ringdown(traces, params)
    if "g_e" in res.extra:
        res.extra["g_e_hz"] = res.extra.pop("g_e") / TWO_PI
    return _report(args, {"ringdown": _to_hz(res)}, args.inputs)


def cmd_tmm(args, params) -> int:
    from .tmm import load_stack, sweep

    if args.stack:
        stack = load_stack(args.stack)
        src = args.stack
    else:
        src = "default_stack.yaml"
        stack = load_stack(resources.files("xduce.data").joinpath(src).read_text())
    res = sweep(stack, (args.start_nm * 1e-9, args.stop_nm * 1e-9), args.points)
    rows = [
        {"wavelength_nm": w * 1e9, "Go_hz_per_fm": g, "kext_hz": ke / TWO_PI, "kback_hz": kb / TWO_PI}
        for w, g, ke, kb in zip(res.wavelength, res.G_o_hz_per_fm(), res.kappa_ext, res.kappa_back)
    ]
    emit(format_table(rows, _manifest(args, [src]), args.format), args.out)
    return 0


def cmd_effcal(args, params) -> int:
    from .dynamics import operating_point
    from .inference import efficiency_four_point

    if args.A_e is None or args.A_o is None:
        op = operating_point(params, TWO_PI * args.gamma_e_hz, TWO_PI * args.gamma_o_hz)
        A_e = op.A_e if args.A_e is None else args.A_e
        A_o = op.A_o if args.A_o is None else args.A_o
    else:
        A_e, A_o = args.A_e, args.A_o
    eps_pl = params.eps_pl if args.eps_pl is None else args.eps_pl
    eta = efficiency_four_point(args.s_oe, args.s_eo, args.s_ee, args.s_oo, eps_pl, A_e, A_o)
    row = {"eta_t": eta, "A_e": A_e, "A_o": A_o, "eps_pl": eps_pl}
    emit(format_table([row], _manifest(args), args.format), args.out)
    return 0


COMMANDS = {
    "predict": cmd_predict,
    "sweep": cmd_sweep,
    "synth": cmd_synth,
    "fit-spectrum": cmd_fit_spectrum,
    "fit-cooling": cmd_fit_cooling,
    "fit-efficiency": cmd_fit_efficiency,
    "fit-addednoise": cmd_fit_addednoise,
    "fit-tempsweep": cmd_fit_tempsweep,
    "fit-ringdown": cmd_fit_ringdown,
    "tmm": cmd_tmm,
    "effcal": cmd_effcal,
}


# -- parser ----------------------------------------------------------------------


def _operating_flags(p, lock=True):
    p.add_argument("--gamma-e-hz", type=float, default=0.0, help="electromechanical damping / 2pi")
    p.add_argument("--gamma-o-hz", type=float, default=0.0, help="optomechanical damping / 2pi")
    if lock:
        p.add_argument("--no-lock", action="store_true", help="drop the lock-beam damping and heating")


def _global_flags(default):
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", default=default,
                   help=f"parameter YAML or preset:fig2|preset:fig3 (default {DEFAULT_CONFIG})")
    p.add_argument("--seed", type=int, default=default, help="random seed for synthesis")
    p.add_argument("--out", default=default, help="output path (default stdout)")
    p.add_argument("--format", choices=("csv", "json-lines"), default=default, help="table/report format (default csv)")
    return p


def build_parser() -> argparse.ArgumentParser:
    # global flags are accepted before or after the command name
    common = _global_flags(argparse.SUPPRESS)
    parser = argparse.ArgumentParser(prog="xduce", description=__doc__, parents=[_global_flags(None)])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("predict", parents=[common], help="efficiency, occupancy and added noise at one point")
    _operating_flags(p)

    p = sub.add_parser("sweep", parents=[common], help="predict along one damping axis")
    _operating_flags(p)
    p.add_argument("--axis", choices=("gamma_e", "gamma_o"), required=True)
    p.add_argument("--start-hz", type=float, required=True)
    p.add_argument("--stop-hz", type=float, required=True)
    p.add_argument("--points", type=int, default=50)
    p.add_argument("--scale", choices=("lin", "log"), default="lin")

    p = sub.add_parser("synth", parents=[common], help="synthesize a detector-referenced sideband spectrum")
    _operating_flags(p)
    p.add_argument("--side", choices=("upper", "lower"), default="upper")
    p.add_argument("--M", type=int, default=10000, help="number of averaged periodograms")
    p.add_argument("--points", type=int, default=321)
    p.add_argument("--half-widths", type=float, default=8.0, help="grid half-span in linewidths")
    p.add_argument("--xi", type=float, help="chain efficiency (default from config)")
    p.add_argument("--substrate-hz", type=float, default=1.448e6)
    p.add_argument("--substrate-rel-amp", type=float, default=0.0)
    p.add_argument("--substrate-phase", type=float, default=0.0, help="radians")
    p.add_argument("--substrate-width-hz", type=float, default=20.0)

    p = sub.add_parser("fit-spectrum", parents=[common], help="Lorentzian fit of a spectrum CSV")
    p.add_argument("input")
    p.add_argument("--model", choices=("single", "coherent_double"), default="single")
    p.add_argument("--antisym", action="store_true")

    p = sub.add_parser("fit-cooling", parents=[common], help="occupancy-vs-damping fit")
    p.add_argument("input")
    p.add_argument("--mode", choices=("optical_only", "electro_optical"), default="optical_only")
    p.add_argument("--fix", action="append", metavar="NAME=VALUE")

    p = sub.add_parser("fit-efficiency", parents=[common], help="efficiency-vs-damping fit")
    p.add_argument("input")
    p.add_argument("--mode", choices=("eta", "zeta"), default="eta")

    p = sub.add_parser("fit-addednoise", parents=[common], help="upper-sideband output-noise fit")
    p.add_argument("input")
    p.add_argument("--free", default="a_e,b_e,n_th")
    p.add_argument("--fix", action="append", metavar="NAME=VALUE")

    p = sub.add_parser("fit-tempsweep", parents=[common], help="peak area vs base-plate temperature")
    p.add_argument("input")
    p.add_argument("--a-gamma-hz-per-k", type=float, required=True)
    p.add_argument("--b-gamma-hz", type=float, required=True)
    p.add_argument("--exclude", help="comma-separated row indices to leave out")
    p.add_argument("--gamma-o-hz", type=float, help="optical damping during the sweep (enables chain efficiency)")

    p = sub.add_parser("fit-ringdown", parents=[common], help="ringdown traces at several pump powers")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--powers", help="comma-separated pump powers in W (else '# power_w:' headers)")

    p = sub.add_parser("tmm", parents=[common], help="transfer-matrix sweep of the membrane cavity")
    p.add_argument("--stack", help="layer-stack YAML (default: bundled stack)")
    p.add_argument("--start-nm", type=float, default=1083.0)
    p.add_argument("--stop-nm", type=float, default=1086.0)
    p.add_argument("--points", type=int, default=1201)

    p = sub.add_parser("effcal", parents=[common], help="efficiency from four network-analyzer measurements")
    _operating_flags(p, lock=False)
    for name in ("s-oe", "s-eo", "s-ee", "s-oo"):
        p.add_argument(f"--{name}", type=float, required=True, help="measured |S|^2 including path factors")
    p.add_argument("--eps-pl", type=float)
    p.add_argument("--A-e", type=float, dest="A_e")
    p.add_argument("--A-o", type=float, dest="A_o")
    return parser


def _apply_defaults(args, parser, argv, cli_cfg: dict) -> None:
    """Config-file ``cli`` values fill in any flag not given on the command line."""
    given = {a.split("=")[0] for a in argv if a.startswith("--")}
    sections = [cli_cfg] + ([cli_cfg[args.command]] if isinstance(cli_cfg.get(args.command), dict) else [])
    for section in sections:
        for key, value in section.items():
            if isinstance(value, dict):
                continue
            dest = key.replace("-", "_")
            if not hasattr(args, dest):
                raise CliError(f"config cli section: unknown option {key!r}")
            if f"--{dest.replace('_', '-')}" not in given:
                setattr(args, dest, value)


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        params, cli_cfg = load_config(args.config)
        _apply_defaults(args, parser, argv, cli_cfg)
        args.format = args.format or "csv"
        return COMMANDS[args.command](args, params)
    except CliError as exc:
        print(f"xduce: error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, ZeroDivisionError, OSError) as exc:
        print(f"xduce {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
