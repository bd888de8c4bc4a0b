"""Curve files, experiment configs, the bundled membrane dataset and reports.

Everything is converted to SI at parse time. Files are plain UTF-8 text with
``.`` as the decimal separator regardless of locale.
"""

from __future__ import annotations

import csv
import json
import math
import os
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import jsonschema
import numpy as np

from . import __version__
from .core_model import (DEFAULT_SOURCE, CoefficientSource, FitResult, MaterialParams,
                         MembraneGeometry, PressureDeflectionCurve, ShapeCoefficients,
                         _data_dir)
from .errors import (BulgeError, ConfigError, MonotonicityError, ParseError, UnitError,
                     UnknownLabel)
from .fitting import DEFAULT_NU, MIN_DEFLECTION_OVER_T, UncertaintySpec
from .mixture import MixtureResult
from .poisson import PoissonSolveReport

PRESSURE_UNITS = {"Pa": 1.0, "kPa": 1e3, "MPa": 1e6, "GPa": 1e9, "mbar": 100.0,
                  "bar": 1e5}
LENGTH_UNITS = {"m": 1.0, "mm": 1e-3, "um": 1e-6, "µm": 1e-6, "nm": 1e-9}

# Relative 1-sigma lateral uncertainty assumed when none is supplied.
DEFAULT_LATERAL_UNCERTAINTY = 0.005
LATERAL_ASSUMPTION = ("lateral-dimension uncertainty not supplied: assumed +-0.5% "
                      "of each dimension")

TABLE2_FILE = "table2.csv"


def pressure_factor(unit: str) -> float:
    try:
        return PRESSURE_UNITS[unit.strip()]
    except KeyError:
        raise UnitError(f"unknown pressure unit {unit!r} "
                        f"(accepted: {', '.join(PRESSURE_UNITS)})") from None


def length_factor(unit: str) -> float:
    try:
        return LENGTH_UNITS[unit.strip()]
    except KeyError:
        raise UnitError(f"unknown length unit {unit!r} "
                        f"(accepted: {', '.join(LENGTH_UNITS)})") from None


# --- curves ----------------------------------------------------------------

def _parse_units(text, lineno):
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 2:
        raise ParseError("units row must read '#units: <pressure>,<length>'", lineno)
    return pressure_factor(parts[0]), length_factor(parts[1])


def parse_curve(path, label=None) -> PressureDeflectionCurve:
    """Read a ``pressure,deflection`` CSV file into an SI curve.

    An optional ``#units: <p-unit>,<h-unit>`` row (anywhere before the data)
    sets the units; SI is assumed otherwise. Rows out of pressure order are
    sorted with a warning.

    Raises:
        ParseError: malformed row or negative value (with line number).
        UnitError: unknown unit.
        MonotonicityError: duplicate pressures.
    """
    path = Path(path)
    p_scale, h_scale = 1.0, 1.0
    header_seen = False
    rows = []
    with open(path, encoding="utf-8", newline="") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if body.lower().startswith("units:"):
                    if rows:
                        raise ParseError("units row must precede the data", lineno)
                    p_scale, h_scale = _parse_units(body[6:], lineno)
                continue
            cells = [c.strip() for c in line.split(",")]
            if not header_seen:
                if [c.lower() for c in cells] != ["pressure", "deflection"]:
                    raise ParseError("expected header 'pressure,deflection'", lineno)
                header_seen = True
                continue
            if len(cells) != 2:
                raise ParseError(f"expected 2 columns, found {len(cells)}", lineno)
            try:
                p, h = float(cells[0]), float(cells[1])
            except ValueError:
                raise ParseError(f"not a number in {line!r}", lineno) from None
            if not (math.isfinite(p) and math.isfinite(h)):
                raise ParseError("non-finite value", lineno)
            if p < 0 or h < 0:
                raise ParseError("pressure and deflection must be non-negative", lineno)
            rows.append((p * p_scale, h * h_scale, lineno))
    if not header_seen:
        raise ParseError("missing header 'pressure,deflection'")
    pressures = [r[0] for r in rows]
    if any(b <= a for a, b in zip(pressures, pressures[1:])):
        order = sorted(rows, key=lambda r: r[0])
        for prev, cur in zip(order, order[1:]):
            if cur[0] == prev[0]:
                raise MonotonicityError(
                    f"duplicate pressure {cur[0]:g} Pa on lines {prev[2]} and {cur[2]}")
        warnings.warn(f"{path}: samples re-sorted by pressure", stacklevel=2)
        rows = order
    label = path.stem if label is None else label
    return PressureDeflectionCurve([r[0] for r in rows], [r[1] for r in rows], label)


def write_curve(curve: PressureDeflectionCurve, path, pressure_unit="Pa",
                length_unit="m"):
    p_scale, h_scale = pressure_factor(pressure_unit), length_factor(length_unit)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("pressure,deflection\n")
        if (pressure_unit, length_unit) != ("Pa", "m"):
            fh.write(f"#units: {pressure_unit},{length_unit}\n")
        for p, h in zip((curve.pressure / p_scale).tolist(),
                        (curve.deflection / h_scale).tolist()):
            fh.write(f"{p!r},{h!r}\n")


# --- bundled dataset -------------------------------------------------------

@dataclass(frozen=True)
class BundledMembrane:
    label: str
    film: str
    width_2a: float
    length_2b: float
    aspect_ratio: float
    thickness: float
    sigma0: float
    u_sigma0: float
    youngs_modulus: float
    u_youngs_modulus: float


def bundled_dataset():
    """The ten reference membranes, in SI units, keyed by label."""
    path = _data_dir() / TABLE2_FILE
    out = {}
    with open(path, encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(l for l in fh if not l.startswith("#")):
            out[row["label"]] = BundledMembrane(
                label=row["label"], film=row["film"],
                width_2a=float(row["width_2a_mm"]) * 1e-3,
                length_2b=float(row["length_2b_mm"]) * 1e-3,
                aspect_ratio=float(row["aspect_ratio"]),
                thickness=float(row["thickness_nm"]) * 1e-9,
                sigma0=float(row["sigma0_MPa"]) * 1e6,
                u_sigma0=float(row["u_sigma0_MPa"]) * 1e6,
                youngs_modulus=float(row["E_GPa"]) * 1e9,
                u_youngs_modulus=float(row["u_E_GPa"]) * 1e9)
    return out


def load_bundled_geometry(label: str,
                          lateral_uncertainty=DEFAULT_LATERAL_UNCERTAINTY) -> MembraneGeometry:
    """Geometry of one reference membrane (``1M``-``5M``, ``1B``-``5B``).

    ``lateral_uncertainty`` is the relative 1-sigma uncertainty applied to both
    lateral dimensions (an assumption; none is published).
    """
    data = bundled_dataset()
    if label not in data:
        raise UnknownLabel(f"unknown membrane {label!r} (known: {', '.join(data)})")
    m = data[label]
    return MembraneGeometry.from_full_dimensions(
        m.width_2a, m.length_2b, m.thickness,
        lateral_uncertainty * m.width_2a, lateral_uncertainty * m.length_2b, 0.0, label)


# --- experiment configs ----------------------------------------------------

_NUM = {"type": "number"}
_UNITS = {"oneOf": [{"type": "string"},
                    {"type": "object",
                     "properties": {"lateral": {"type": "string"},
                                    "thickness": {"type": "string"}},
                     "additionalProperties": False}]}

CONFIG_SCHEMA = {
    "type": "object",
    "required": ["geometry"],
    "additionalProperties": False,
    "properties": {
        "geometry": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "bundled": {"type": "string"},
                "label": {"type": "string"},
                "width_2a": {"type": "number", "exclusiveMinimum": 0},
                "length_2b": {"type": "number", "exclusiveMinimum": 0},
                "thickness_t": {"type": "number", "exclusiveMinimum": 0},
                "uncertainties": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {"width_2a": {"type": "number", "minimum": 0},
                                   "length_2b": {"type": "number", "minimum": 0},
                                   "thickness_t": {"type": "number", "minimum": 0}}},
                "units": _UNITS,
            },
            "oneOf": [{"required": ["bundled"]},
                      {"required": ["width_2a", "length_2b", "thickness_t", "units"]}],
        },
        "material": {
            "type": "object",
            "required": ["youngs_modulus", "poisson_ratio", "residual_stress"],
            "additionalProperties": False,
            "properties": {"youngs_modulus": _NUM, "poisson_ratio": _NUM,
                           "residual_stress": _NUM, "units": {"type": "string"}},
        },
        "analysis": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "nu_assumed": {"type": "number", "exclusiveMinimum": -1,
                               "exclusiveMaximum": 0.5},
                "coefficient_source": {"enum": [s.value for s in CoefficientSource]},
                "min_deflection_over_t": {"type": "number", "minimum": 0},
            },
        },
        "uncertainty": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "n_samples": {"type": "integer", "minimum": 100},
                "seed": {"type": "integer"},
                "perturb": {"type": "array", "items": {"enum": ["a", "b", "t"]}},
            },
        },
    },
}


@dataclass(frozen=True)
class ExperimentConfig:
    geometry: MembraneGeometry
    material: Optional[MaterialParams] = None
    nu_assumed: float = DEFAULT_NU
    coefficient_source: CoefficientSource = DEFAULT_SOURCE
    min_deflection_over_t: float = MIN_DEFLECTION_OVER_T
    uncertainty: UncertaintySpec = field(default_factory=UncertaintySpec)
    assumptions: tuple = ()

    @property
    def min_deflection(self) -> float:
        return self.min_deflection_over_t * self.geometry.thickness_t


def _geometry_from_config(block):
    assumptions = []
    if "bundled" in block:
        unc = block.get("uncertainties")
        geometry = load_bundled_geometry(block["bundled"])
        if unc is None:
            assumptions.append(LATERAL_ASSUMPTION)
            return geometry, assumptions
        m = bundled_dataset()[block["bundled"]]
        dims = {"width_2a": m.width_2a, "length_2b": m.length_2b, "thickness_t": m.thickness}
        units = block.get("units", "m")
    else:
        units = block["units"]
        dims = {k: block[k] for k in ("width_2a", "length_2b", "thickness_t")}
        unc = block.get("uncertainties")
    if isinstance(units, str):
        lateral = thickness = length_factor(units)
    else:
        lateral = length_factor(units.get("lateral", "m"))
        thickness = length_factor(units.get("thickness", "m"))
    if "bundled" not in block:
        dims = {"width_2a": dims["width_2a"] * lateral,
                "length_2b": dims["length_2b"] * lateral,
                "thickness_t": dims["thickness_t"] * thickness}
    if unc is None:
        assumptions.append(LATERAL_ASSUMPTION)
        sig = {"width_2a": DEFAULT_LATERAL_UNCERTAINTY * dims["width_2a"],
               "length_2b": DEFAULT_LATERAL_UNCERTAINTY * dims["length_2b"],
               "thickness_t": 0.0}
    else:
        sig = {"width_2a": unc.get("width_2a", 0.0) * lateral,
               "length_2b": unc.get("length_2b", 0.0) * lateral,
               "thickness_t": unc.get("thickness_t", 0.0) * thickness}
    label = block.get("label", block.get("bundled", ""))
    geometry = MembraneGeometry.from_full_dimensions(
        dims["width_2a"], dims["length_2b"], dims["thickness_t"], sig["width_2a"],
        sig["length_2b"], sig["thickness_t"], label)
    return geometry, assumptions


def parse_config(document: dict) -> ExperimentConfig:
    """Validate and convert a config document (already decoded from JSON)."""
    try:
        jsonschema.validate(document, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"{where}: {exc.message}") from None
    try:
        geometry, assumptions = _geometry_from_config(document["geometry"])
        material = None
        if "material" in document:
            mat = document["material"]
            scale = pressure_factor(mat.get("units", "Pa"))
            material = MaterialParams(mat["youngs_modulus"] * scale, mat["poisson_ratio"],
                                      mat["residual_stress"] * scale)
    except UnitError:
        raise
    except (ValueError, KeyError) as exc:
        if isinstance(exc, BulgeError):
            raise
        raise ConfigError(str(exc)) from None
    analysis = document.get("analysis", {})
    unc = document.get("uncertainty", {})
    spec = UncertaintySpec(unc.get("n_samples", 10000), unc.get("seed", 42),
                           tuple(unc.get("perturb", ("a", "b", "t"))))
    return ExperimentConfig(
        geometry=geometry, material=material,
        nu_assumed=analysis.get("nu_assumed", DEFAULT_NU),
        coefficient_source=CoefficientSource.parse(
            analysis.get("coefficient_source", DEFAULT_SOURCE.value)),
        min_deflection_over_t=analysis.get("min_deflection_over_t", MIN_DEFLECTION_OVER_T),
        uncertainty=spec, assumptions=tuple(assumptions))


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            document = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return parse_config(document)


# --- reports ---------------------------------------------------------------

def geometry_to_dict(g: MembraneGeometry) -> dict:
    return asdict(g)


def fit_result_to_dict(r: FitResult) -> dict:
    d = {k: getattr(r, k) for k in ("intercept_A", "slope_B", "sigma0", "biaxial_modulus",
                                    "youngs_modulus_E", "nu_assumed", "r_squared",
                                    "u_sigma0", "u_E", "n_points", "uncertainty_note")}
    d["geometry"] = geometry_to_dict(r.geometry)
    c = asdict(r.coeffs)
    c["source"] = r.coeffs.source.value
    d["coeffs"] = c
    return d


def fit_result_from_dict(d: dict) -> FitResult:
    c = dict(d["coeffs"])
    c["source"] = CoefficientSource.parse(c["source"])
    return FitResult(
        **{k: d[k] for k in ("intercept_A", "slope_B", "sigma0", "biaxial_modulus",
                             "youngs_modulus_E", "nu_assumed", "r_squared", "u_sigma0",
                             "u_E")},
        geometry=MembraneGeometry(**d["geometry"]), coeffs=ShapeCoefficients(**c),
        n_points=d.get("n_points", 0), uncertainty_note=d.get("uncertainty_note", ""))


def _result_to_dict(result):
    if isinstance(result, FitResult):
        return {"type": "fit", **fit_result_to_dict(result)}
    if isinstance(result, PoissonSolveReport):
        d = asdict(result)
        d["bracket"] = list(result.bracket)
        d["pair_labels"] = list(result.pair_labels)
        return {"type": "poisson", **d}
    if isinstance(result, MixtureResult):
        return {"type": "mixture", **asdict(result), "unit": result.unit}
    raise TypeError(f"cannot serialize {type(result).__name__}")


def _result_from_dict(d):
    d = dict(d)
    kind = d.pop("type")
    if kind == "fit":
        return fit_result_from_dict(d)
    if kind == "poisson":
        d["bracket"] = tuple(d["bracket"])
        d["pair_labels"] = tuple(d["pair_labels"])
        return PoissonSolveReport(**d)
    if kind == "mixture":
        d.pop("unit", None)
        return MixtureResult(**d)
    raise ParseError(f"unknown result type {kind!r}")


_FIT_UNITS = [("intercept_A", "Pa/m"), ("slope_B", "Pa/m^3"), ("sigma0", "Pa"),
              ("u_sigma0", "Pa"), ("biaxial_modulus", "Pa"), ("youngs_modulus_E", "Pa"),
              ("u_E", "Pa"), ("nu_assumed", ""), ("r_squared", ""), ("n_points", "")]


def _fmt(value, unit=""):
    text = repr(float(value)) if isinstance(value, float) else str(value)
    return f"{text} {unit}".rstrip()


def _text_block(result) -> list:
    lines = []
    if isinstance(result, FitResult):
        g = result.geometry
        lines.append(f"[fit] {g.label}".rstrip())
        for key, unit in _FIT_UNITS:
            lines.append(f"{key} = {_fmt(getattr(result, key), unit)}")
        lines.append(f"coefficient_source = {result.coeffs.source.value}")
        lines.append(f"c1 = {_fmt(result.coeffs.c1)}")
        lines.append(f"f = {_fmt(result.coeffs.f_of_nu)}")
        lines.append(f"half_width_a = {_fmt(g.half_width_a, 'm')}")
        lines.append(f"half_length_b = {_fmt(g.half_length_b, 'm')}")
        lines.append(f"thickness_t = {_fmt(g.thickness_t, 'm')}")
        if result.uncertainty_note:
            lines.append(f"uncertainty = {result.uncertainty_note}")
    elif isinstance(result, PoissonSolveReport):
        lines.append(f"[poisson] {result.pair_labels[0]}/{result.pair_labels[1]}")
        for key in ("nu", "delta_nu", "slope_ratio", "iterations", "e_mismatch",
                    "n_samples", "seed", "failed_draws"):
            lines.append(f"{key} = {_fmt(getattr(result, key))}")
        lines.append(f"bracket = {_fmt(result.bracket[0])}, {_fmt(result.bracket[1])}")
        lines.append(f"coefficient_source = {result.source}")
    elif isinstance(result, MixtureResult):
        lines.append(f"[mixture] {result.unknown_layer}")
        lines.append(f"mode = {result.mode}")
        lines.append(f"value = {_fmt(result.value, result.unit)}")
        lines.append(f"uncertainty = {_fmt(result.uncertainty, result.unit)}")
        lines.append(f"n_samples = {result.n_samples}")
        lines.append(f"seed = {result.seed}")
        if result.note:
            lines.append(f"note = {result.note}")
    else:
        raise TypeError(f"cannot serialize {type(result).__name__}")
    return lines


def write_report(results, path, format="json", provenance=None):
    """Serialize fit, Poisson and mixture results with units and provenance.

    Args:
        results: a result object or a list of them (may be empty).
        format: ``"json"`` or ``"text"``.
        provenance: extra key/value pairs (seed, assumptions, ...) recorded
            alongside the tool version.
    """
    if not isinstance(results, (list, tuple)):
        results = [results]
    prov = {"tool": "bulgekit", "version": __version__}
    prov.update(provenance or {})
    if format == "json":
        doc = {"provenance": prov, "results": [_result_to_dict(r) for r in results]}
        text = json.dumps(doc, indent=2, sort_keys=False, ensure_ascii=False) + "\n"
    elif format == "text":
        lines = [f"# bulgekit {__version__}"]
        for key, value in prov.items():
            if key in ("tool", "version"):
                continue
            if isinstance(value, (list, tuple)):
                for item in value:
                    lines.append(f"# {key}: {item}")
            else:
                lines.append(f"# {key}: {value}")
        for r in results:
            lines.append("")
            lines.extend(_text_block(r))
        text = "\n".join(lines) + "\n"
    else:
        raise ValueError(f"unknown report format {format!r}")
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write report {path}: {exc.strerror}") from exc


def read_report(path):
    """Results of a JSON report written by :func:`write_report`."""
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: not a JSON report ({exc})") from None
    except OSError as exc:
        raise OSError(f"cannot read report {path}: {exc.strerror}") from exc
    return [_result_from_dict(d) for d in doc.get("results", [])]


def read_provenance(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh).get("provenance", {})
