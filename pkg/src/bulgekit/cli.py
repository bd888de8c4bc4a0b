"""Command-line front end: ``bulgekit <subcommand> ...``.

Errors go to standard error as a single ``error[<CODE>]: message`` line; the
exit status is 0 on success, 1 on analysis errors and 2 on usage errors.
"""

from __future__ import annotations

import argparse
import re
import sys
import warnings

import numpy as np

from . import __version__
from .core_model import (CoefficientSource, Layer, LayerStack, PressureDeflectionCurve,
                         coefficients_for, forward_deflection)
from .errors import BulgeError
from .fitting import UncertaintySpec, fit_curve
from .io import (LENGTH_UNITS, PRESSURE_UNITS, load_config, read_report, write_curve,
                 write_report)
from .membrane_solver import (SolverConfig, build_coefficient_table, extract_coefficients,
                              reference_case)
from .mixture import PropertyMode, decompose_with_uncertainty
from .poisson import solve_poisson

DEFAULT_SEED = 42


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def parse_number_list(text):
    """``"1,2,3"`` or ``"start:stop:count"`` (inclusive, evenly spaced)."""
    text = (text or "").strip()
    if not text:
        raise UsageError("empty list")
    try:
        if ":" in text:
            parts = text.split(":")
            if len(parts) != 3:
                raise UsageError(f"range {text!r} must read start:stop:count")
            start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
            if count < 1:
                raise UsageError("range count must be >= 1")
            return [float(v) for v in np.linspace(start, stop, count)]
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"cannot parse number list {text!r}") from None


_QUANTITY = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*([A-Za-zµ]*)\s*$")


def parse_quantity(text, units):
    """Number with an optional unit suffix from ``units`` (e.g. ``90nm``, ``147GPa``)."""
    match = _QUANTITY.match(text)
    if not match:
        raise UsageError(f"cannot parse quantity {text!r}")
    value, unit = float(match.group(1)), match.group(2)
    if not unit:
        return value
    if unit not in units:
        raise UsageError(f"unknown unit {unit!r} in {text!r}")
    return value * units[unit]


def _report_format(path):
    return "json" if str(path).lower().endswith(".json") else "text"


def _cmd_simulate(args):
    pressures = parse_number_list(args.pressures)
    config = load_config(args.config)
    if config.material is None:
        raise UsageError("simulate needs a 'material' block in the config")
    pressures = sorted(set(pressures))
    deflections = [forward_deflection(config.geometry, config.material, p, args.bending,
                                      config.coefficient_source) for p in pressures]
    curve = PressureDeflectionCurve(pressures, deflections, config.geometry.label)
    write_curve(curve, args.out)
    print(f"wrote {len(curve)} samples to {args.out} "
          f"(h_max = {max(deflections) * 1e6:.3f} um)")


def _cmd_fit(args):
    from .io import parse_curve

    config = load_config(args.config)
    curve = parse_curve(args.curve)
    nu = config.nu_assumed if args.nu is None else args.nu
    result = fit_curve(curve, config.geometry, nu, config.coefficient_source,
                       config.min_deflection, uncertainty=config.uncertainty)
    provenance = {"coefficient_source": config.coefficient_source.value,
                  "seed": config.uncertainty.seed,
                  "n_samples": config.uncertainty.n_samples,
                  "assumptions": list(config.assumptions)}
    write_report([result], args.out, _report_format(args.out), provenance)
    print(f"nu_assumed = {nu!r}")
    print(f"sigma0 = {result.sigma0 / 1e6:.1f} +- {result.u_sigma0 / 1e6:.1f} MPa")
    print(f"E = {result.youngs_modulus_E / 1e9:.1f} +- {result.u_E / 1e9:.1f} GPa")


def _first_fit(path):
    from .core_model import FitResult

    for r in read_report(path):
        if isinstance(r, FitResult):
            return r
    raise BulgeError(f"{path}: no fit result in report")


def _cmd_poisson(args):
    square, rect = _first_fit(args.square), _first_fit(args.rect)
    spec = UncertaintySpec(seed=args.seed)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        report = solve_poisson(square, rect, square.coeffs.source, spec)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    write_report([report], args.out, _report_format(args.out),
                 {"coefficient_source": report.source, "seed": spec.seed,
                  "n_samples": spec.n_samples})
    print(f"nu = {report.nu:.4f} +- {report.delta_nu:.4f}")


def _parse_layer(text, mode_units, with_value=True):
    parts = text.split(":")
    need = (3, 4) if with_value else (2, 3)
    if len(parts) not in need:
        form = "name:t:value[:u]" if with_value else "name:t[:u]"
        raise UsageError(f"layer {text!r} must read {form}")
    name = parts[0]
    thickness = parse_quantity(parts[1], LENGTH_UNITS)
    if with_value:
        value = parse_quantity(parts[2], mode_units)
        u = parse_quantity(parts[3], mode_units) if len(parts) == 4 else 0.0
        return Layer(name, thickness, value, 0.0, u)
    u_t = parse_quantity(parts[2], LENGTH_UNITS) if len(parts) == 3 else 0.0
    return Layer(name, thickness, None, u_t)


def _cmd_mixture(args):
    mode = PropertyMode(args.mode)
    units = {} if mode is PropertyMode.POISSON_RATIO else PRESSURE_UNITS
    comp = args.composite.split(":")
    if len(comp) not in (1, 2):
        raise UsageError("--composite must read v[:u]")
    value = parse_quantity(comp[0], units)
    u = parse_quantity(comp[1], units) if len(comp) == 2 else 0.0
    layers = [_parse_layer(t, units) for t in args.layer]
    layers.append(_parse_layer(args.unknown, units, with_value=False))
    spec = UncertaintySpec(seed=args.seed)
    result = decompose_with_uncertainty(value, u, LayerStack(tuple(layers)), spec, mode)
    write_report([result], args.out, _report_format(args.out),
                 {"seed": spec.seed, "n_samples": spec.n_samples})
    print(f"{result.unknown_layer}: {mode.value} = {result.value!r} +- "
          f"{result.uncertainty!r} {result.unit}")
    if result.note:
        print(f"note: {result.note}", file=sys.stderr)


def _cmd_coeffs(args):
    source = CoefficientSource.parse(args.source)
    if args.compute:
        geometry, material = reference_case(args.ratio, args.nu)
        config = SolverConfig(grid_nx=args.grid, grid_ny=args.grid)
        fit = extract_coefficients(geometry, material, config)
        print(f"c1 = {fit.c1!r}")
        print(f"f = {fit.f!r}")
        print(f"source = {CoefficientSource.SOLVER_DERIVED.value} (computed, "
              f"grid {args.grid}x{args.grid})")
        return
    c = coefficients_for(args.ratio, args.nu, source)
    print(f"c1 = {c.c1!r}")
    print(f"f = {c.f_of_nu!r}")
    print(f"alpha = {c.alpha!r}")
    print(f"source = {c.source.value}")


def _cmd_table(args):
    ratios = sorted(parse_number_list(args.ratios))
    nus = sorted(parse_number_list(args.nus))
    table = build_coefficient_table(ratios, nus, SolverConfig())
    table.to_csv(args.out)
    print(f"wrote {len(table.entries)} entries to {args.out}")


def build_parser():
    parser = _Parser(prog="bulgekit", description="Bulge-test membrane analysis.")
    parser.add_argument("--version", action="version", version=f"bulgekit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="synthetic pressure-deflection curve")
    p.add_argument("--config", required=True)
    p.add_argument("--pressures", required=True,
                   help="Pa; comma list or start:stop:count")
    p.add_argument("--out", required=True)
    p.add_argument("--bending", action="store_true")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("fit", help="residual stress and modulus from a curve")
    p.add_argument("--curve", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--nu", type=float, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("poisson", help="Poisson's ratio from a square/rectangle pair")
    p.add_argument("--square", required=True)
    p.add_argument("--rect", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.set_defaults(func=_cmd_poisson)

    p = sub.add_parser("mixture", help="unknown-layer property from the mixture law")
    p.add_argument("--mode", required=True, choices=[m.value for m in PropertyMode])
    p.add_argument("--composite", required=True, help="v[:u]")
    p.add_argument("--layer", action="append", default=[], help="name:t:value[:u]")
    p.add_argument("--unknown", required=True, help="name:t[:u_t]")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.set_defaults(func=_cmd_mixture)

    p = sub.add_parser("coeffs", help="shape coefficients C1, f, alpha")
    p.add_argument("--ratio", type=float, required=True)
    p.add_argument("--nu", type=float, required=True)
    p.add_argument("--source", default=CoefficientSource.VLASSAK_NIX.value,
                   choices=[s.value for s in CoefficientSource])
    p.add_argument("--compute", action="store_true")
    p.add_argument("--grid", type=int, default=65)
    p.set_defaults(func=_cmd_coeffs)

    p = sub.add_parser("table", help="regenerate the solver coefficient table")
    p.add_argument("--ratios", required=True)
    p.add_argument("--nus", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_table)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        args.func(args)
    except UsageError as exc:
        print(f"error[USAGE]: {exc}", file=sys.stderr)
        return 2
    except BulgeError as exc:
        print(f"error[{exc.code}]: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error[IO]: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error[VALUE]: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
