"""Domain types, the load-deflection model and the shape-coefficient provider.

All quantities are SI (Pa, m). The model relating the applied pressure ``P`` to
the centre deflection ``h`` of a rectangular membrane of half-width ``a``,
half-length ``b`` and thickness ``t`` is::

    P = C1 * t * sigma0 / a**2 * h
        + E / (12 * alpha * (1 - nu**2)) * t**3 / a**4 * h      (bending, optional)
        + f(nu, b/a) * t / a**4 * E / (1 - nu) * h**3
"""

from __future__ import annotations

import csv
import enum
import functools
import math
import os
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .errors import NonMonotoneModel, UnsupportedRatio

# Aspect ratios within this relative distance of 1 are treated as square.
SQUARE_TOLERANCE = 0.02
# Beyond this aspect ratio a rectangle behaves as an infinite strip.
STRIP_RATIO = 4.0

COEFFICIENT_TABLE_FILE = "coefficients.csv"
DATA_DIR_ENV = "BULGEKIT_DATA_DIR"


class CoefficientSource(str, enum.Enum):
    VLASSAK_NIX = "VlassakNix"
    BONNOTTE = "Bonnotte"
    MAIER_SCHNEIDER = "MaierSchneider"
    SOLVER_DERIVED = "SolverDerived"

    @classmethod
    def parse(cls, value) -> "CoefficientSource":
        if isinstance(value, cls):
            return value
        for member in cls:
            if str(value).lower() in (member.value.lower(), member.name.lower()):
                return member
        raise ValueError(f"unknown coefficient source {value!r}")


DEFAULT_SOURCE = CoefficientSource.VLASSAK_NIX


@dataclass(frozen=True)
class MembraneGeometry:
    """Lateral half-dimensions and thickness of one membrane.

    ``half_width_a`` is always the short half-dimension: a geometry constructed
    with ``a > b`` is normalized by swapping the two (and their uncertainties).
    The ``sigma_*`` fields are 1-sigma uncertainties of the half-dimensions.
    """

    half_width_a: float
    half_length_b: float
    thickness_t: float
    sigma_a: float = 0.0
    sigma_b: float = 0.0
    sigma_t: float = 0.0
    label: str = ""

    def __post_init__(self):
        for name in ("half_width_a", "half_length_b", "thickness_t"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise ValueError(f"{name} must be positive and finite, got {value!r}")
        for name in ("sigma_a", "sigma_b", "sigma_t"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be >= 0")
        if self.half_width_a > self.half_length_b:
            a, b = self.half_length_b, self.half_width_a
            sa, sb = self.sigma_b, self.sigma_a
            object.__setattr__(self, "half_width_a", a)
            object.__setattr__(self, "half_length_b", b)
            object.__setattr__(self, "sigma_a", sa)
            object.__setattr__(self, "sigma_b", sb)

    @classmethod
    def from_full_dimensions(cls, width_2a, length_2b, thickness, sigma_2a=0.0,
                             sigma_2b=0.0, sigma_t=0.0, label=""):
        """Build a geometry from full width/length (2a, 2b) as reported on data sheets."""
        return cls(width_2a / 2, length_2b / 2, thickness, sigma_2a / 2, sigma_2b / 2,
                   sigma_t, label)

    def aspect_ratio(self) -> float:
        return self.half_length_b / self.half_width_a


@dataclass(frozen=True)
class MaterialParams:
    youngs_modulus_E: float
    poisson_nu: float
    residual_stress_sigma0: float

    def __post_init__(self):
        if not self.youngs_modulus_E > 0:
            raise ValueError("youngs_modulus_E must be positive")
        if not -1.0 < self.poisson_nu < 0.5:
            raise ValueError("poisson_nu must lie in (-1, 0.5)")

    @property
    def biaxial_modulus(self) -> float:
        return self.youngs_modulus_E / (1.0 - self.poisson_nu)


@dataclass(frozen=True)
class ShapeCoefficients:
    c1: float
    f_of_nu: float
    alpha: float
    source: CoefficientSource
    aspect_ratio: float
    nu_used: float

    def __post_init__(self):
        if not (self.c1 > 0 and self.f_of_nu > 0 and self.alpha >= 0):
            raise ValueError(f"invalid shape coefficients {self}")


@dataclass(frozen=True, eq=False)
class PressureDeflectionCurve:
    """Ordered pressure/deflection samples.

    The origin ``(0, 0)`` is implied; if stored, it must be the first sample.
    """

    pressure: np.ndarray
    deflection: np.ndarray
    label: str = ""

    def __post_init__(self):
        p = np.array(self.pressure, dtype=float).ravel()
        h = np.array(self.deflection, dtype=float).ravel()
        if p.shape != h.shape:
            raise ValueError("pressure and deflection must have the same length")
        if not (np.all(np.isfinite(p)) and np.all(np.isfinite(h))):
            raise ValueError("samples must be finite")
        if np.any(p < 0) or np.any(h < 0):
            raise ValueError("pressures and deflections must be non-negative")
        if np.any(np.diff(p) <= 0):
            raise ValueError("pressures must be strictly increasing")
        p.flags.writeable = False
        h.flags.writeable = False
        object.__setattr__(self, "pressure", p)
        object.__setattr__(self, "deflection", h)

    @classmethod
    def from_samples(cls, samples, label=""):
        samples = list(samples)
        if not samples:
            return cls(np.empty(0), np.empty(0), label)
        p, h = zip(*samples)
        return cls(np.asarray(p), np.asarray(h), label)

    @property
    def samples(self):
        return list(zip(self.pressure.tolist(), self.deflection.tolist()))

    def __len__(self):
        return self.pressure.size

    def __eq__(self, other):
        if not isinstance(other, PressureDeflectionCurve):
            return NotImplemented
        return (self.label == other.label
                and np.array_equal(self.pressure, other.pressure)
                and np.array_equal(self.deflection, other.deflection))

    def scaled(self, pressure_factor=1.0, deflection_factor=1.0):
        return PressureDeflectionCurve(self.pressure * pressure_factor,
                                       self.deflection * deflection_factor, self.label)


@dataclass(frozen=True)
class FitResult:
    intercept_A: float
    slope_B: float
    sigma0: float
    biaxial_modulus: float
    youngs_modulus_E: float
    nu_assumed: float
    r_squared: float
    u_sigma0: float
    u_E: float
    geometry: MembraneGeometry
    coeffs: ShapeCoefficients
    n_points: int = 0
    uncertainty_note: str = ""


@dataclass(frozen=True)
class Layer:
    """One film of a stack; ``property_value`` is None for the unknown layer."""

    name: str
    thickness: float
    property_value: Optional[float] = None
    u_thickness: float = 0.0
    u_property: float = 0.0

    def __post_init__(self):
        if not self.thickness > 0:
            raise ValueError(f"layer {self.name!r}: thickness must be positive")
        if not (self.u_thickness >= 0 and self.u_property >= 0):
            raise ValueError(f"layer {self.name!r}: uncertainties must be >= 0")


@dataclass(frozen=True)
class LayerStack:
    layers: tuple = field(default_factory=tuple)

    def __post_init__(self):
        layers = tuple(l if isinstance(l, Layer) else Layer(*l) for l in self.layers)
        if not layers:
            raise ValueError("a layer stack needs at least one layer")
        object.__setattr__(self, "layers", layers)

    @property
    def total_thickness(self) -> float:
        return math.fsum(layer.thickness for layer in self.layers)


# --- shape coefficients ----------------------------------------------------

# (aspect ratio, alpha) from the plate-bending literature; constant past the strip limit.
_ALPHA_RATIOS = (1.0, 2.0, STRIP_RATIO)
_ALPHA_VALUES = (1.26e-3, 2.54e-3, 2.6e-3)


def bending_alpha(aspect_ratio: float) -> float:
    return float(np.interp(aspect_ratio, _ALPHA_RATIOS, _ALPHA_VALUES))


def vlassak_nix_square_f(nu):
    return (0.8 + 0.062 * nu) ** -3


def strip_f(nu):
    return 8.0 / (6.0 * (1.0 + nu))


def maier_schneider_square_f(nu):
    return 1.994 * (1.0 - 0.271 * nu)


def bonnotte_square_f(nu):
    return 1.91 * (1.0 - 0.207 * nu)


def bonnotte_rect2_f(nu):
    return 1.08 * (1.0 - 0.181 * nu)


# source -> {nominal ratio: (c1, f(nu))}
_LITERATURE = {
    CoefficientSource.VLASSAK_NIX: {1.0: (3.39, vlassak_nix_square_f)},
    CoefficientSource.MAIER_SCHNEIDER: {1.0: (3.45, maier_schneider_square_f)},
    CoefficientSource.BONNOTTE: {1.0: (3.42, bonnotte_square_f),
                                 2.0: (2.19, bonnotte_rect2_f)},
}


def _data_dir() -> Path:
    override = os.environ.get(DATA_DIR_ENV)
    if override:
        return Path(override)
    return Path(str(resources.files("bulgekit") / "data"))


def coefficient_table_path() -> Path:
    return _data_dir() / COEFFICIENT_TABLE_FILE


class _TableInterpolant:
    def __init__(self, ratios, nus, c1, f):
        self.ratios = ratios
        self.nus = nus
        self._c1 = RegularGridInterpolator((ratios, nus), c1, bounds_error=False,
                                           fill_value=None)
        self._f = RegularGridInterpolator((ratios, nus), f, bounds_error=False,
                                          fill_value=None)

    def __call__(self, aspect_ratio, nu):
        # Past the last tabulated ratio the coefficients have plateaued.
        r = np.clip(aspect_ratio, self.ratios[0], self.ratios[-1])
        points = np.stack(np.broadcast_arrays(r, nu), axis=-1)
        return self._c1(points), self._f(points)


@functools.lru_cache(maxsize=8)
def _load_table(path: str) -> Optional[_TableInterpolant]:
    if not os.path.exists(path):
        return None
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(line for line in fh if not line.startswith("#"))
        for row in reader:
            rows.append((float(row["aspect_ratio"]), float(row["nu"]),
                         float(row["c1"]), float(row["f"])))
    if not rows:
        return None
    ratios = np.unique([r[0] for r in rows])
    nus = np.unique([r[1] for r in rows])
    if len(rows) != ratios.size * nus.size or ratios.size < 2 or nus.size < 2:
        raise ValueError(f"{path}: coefficient table is not a complete grid")
    c1 = np.empty((ratios.size, nus.size))
    f = np.empty_like(c1)
    for r, n, c, ff in rows:
        i, j = np.searchsorted(ratios, r), np.searchsorted(nus, n)
        c1[i, j], f[i, j] = c, ff
    return _TableInterpolant(ratios, nus, c1, f)


def solver_table() -> Optional[_TableInterpolant]:
    """Bundled solver-derived coefficient table, or None if no table is installed."""
    return _load_table(str(coefficient_table_path()))


def clear_table_cache():
    _load_table.cache_clear()


def _near(ratio, nominal):
    return np.abs(ratio - nominal) <= SQUARE_TOLERANCE * nominal


def nominal_shape_ratio(nominal_ratio, drawn_ratios):
    """Aspect ratios to use for coefficients when dimensions are resampled.

    A nominally square membrane stays square: independent draws of its width and
    length only move its scale, not its shape factors.
    """
    drawn = np.asarray(drawn_ratios, dtype=float)
    if _near(nominal_ratio, 1.0):
        return np.ones_like(drawn)
    return drawn


def _check_inputs(aspect_ratio, nu):
    if not np.all(aspect_ratio >= 1.0):
        raise ValueError(f"aspect ratio must be >= 1, got {aspect_ratio!r}")
    if not np.all((nu > -1.0) & (nu < 0.5)):
        raise ValueError(f"nu must lie in (-1, 0.5), got {nu!r}")


def shape_factors(aspect_ratio, nu, source=DEFAULT_SOURCE, check=True):
    """Vectorized (C1, f) over broadcast arrays of aspect ratio and nu.

    Follows the same source rules as :func:`coefficients_for` and returns a
    third boolean array flagging entries taken from the solver table.
    ``check=False`` lets the closed forms be evaluated past nu = 0.5, which
    Monte-Carlo sensitivity studies need.
    """
    source = CoefficientSource.parse(source)
    r, nu = np.broadcast_arrays(np.asarray(aspect_ratio, dtype=float),
                                np.asarray(nu, dtype=float))
    if check:
        _check_inputs(r, nu)
    c1 = np.full(r.shape, np.nan)
    f = np.full(r.shape, np.nan)
    pending = np.ones(r.shape, dtype=bool)
    if source is CoefficientSource.VLASSAK_NIX:
        strip = r >= STRIP_RATIO
        c1[strip], f[strip] = 2.0, strip_f(nu[strip])
        pending &= ~strip
    for nominal, (c, f_form) in _LITERATURE.get(source, {}).items():
        hit = pending & _near(r, nominal)
        c1[hit], f[hit] = c, f_form(nu[hit])
        pending &= ~hit
    if np.any(pending):
        table = solver_table()
        if table is None:
            bad = r[pending].flat[0]
            raise UnsupportedRatio(
                f"no {source.value} coefficients for b/a = {bad:g} and no "
                f"solver table at {coefficient_table_path()}")
        if source is not CoefficientSource.SOLVER_DERIVED:
            beyond = pending & (r > table.ratios[-1])
            if np.any(beyond):
                raise UnsupportedRatio(f"no {source.value} coefficients for "
                                       f"b/a = {r[beyond].flat[0]:g}")
        c1[pending], f[pending] = table(r[pending], nu[pending])
    return c1, f, pending


def coefficients_for(aspect_ratio: float, nu: float,
                     source=DEFAULT_SOURCE) -> ShapeCoefficients:
    """Shape coefficients (C1, f, alpha) for a membrane aspect ratio b/a.

    Literature closed forms are used where the chosen source tabulates the
    ratio: Vlassak-Nix covers the square and the infinite strip (b/a >= 4),
    Bonnotte the ratios 1 and 2, Maier-Schneider the square. Ratios within 2%
    of a tabulated one snap to it. Everything else is interpolated from the
    bundled solver-derived table and reported with source ``SolverDerived``.

    Raises:
        UnsupportedRatio: no literature value and no table to interpolate.
    """
    source = CoefficientSource.parse(source)
    aspect_ratio, nu = float(aspect_ratio), float(nu)
    c1, f, from_table = shape_factors(aspect_ratio, nu, source)
    used = CoefficientSource.SOLVER_DERIVED if from_table else source
    if not from_table:
        # Scalar re-evaluation keeps closed forms bit-identical to the formulas.
        c1, f = _closed_form(aspect_ratio, nu, source)
    return ShapeCoefficients(float(c1), float(f), bending_alpha(aspect_ratio), used,
                             aspect_ratio, nu)


def _closed_form(aspect_ratio, nu, source):
    if source is CoefficientSource.VLASSAK_NIX and aspect_ratio >= STRIP_RATIO:
        return 2.0, strip_f(nu)
    for nominal, (c, f_form) in _LITERATURE[source].items():
        if _near(aspect_ratio, nominal):
            return c, f_form(nu)
    raise AssertionError("no closed form")


# --- forward model ---------------------------------------------------------

def stiffness_terms(geometry: MembraneGeometry, material: MaterialParams,
                    include_bending=False, source=DEFAULT_SOURCE):
    """Linear (Pa/m) and cubic (Pa/m^3) coefficients of the load-deflection model."""
    a, t = geometry.half_width_a, geometry.thickness_t
    E, nu = material.youngs_modulus_E, material.poisson_nu
    coeffs = coefficients_for(geometry.aspect_ratio(), nu, source)
    linear = coeffs.c1 * t * material.residual_stress_sigma0 / a**2
    if include_bending:
        linear += E / (12.0 * coeffs.alpha * (1.0 - nu**2)) * t**3 / a**4
    cubic = coeffs.f_of_nu * t / a**4 * E / (1.0 - nu)
    return linear, cubic


def forward_pressure(geometry: MembraneGeometry, material: MaterialParams,
                     deflection_h, include_bending=False, source=DEFAULT_SOURCE):
    """Pressure needed to produce centre deflection ``deflection_h`` (scalar or array)."""
    h = np.asarray(deflection_h, dtype=float)
    if np.any(h < 0):
        raise ValueError("deflection must be non-negative")
    linear, cubic = stiffness_terms(geometry, material, include_bending, source)
    p = linear * h + cubic * h**3
    return float(p) if p.ndim == 0 else p


def solve_cubic(linear, cubic, pressure, rtol=1e-12, max_iter=200):
    """Non-negative root of ``linear*h + cubic*h**3 = pressure``.

    Safeguarded Newton iteration inside the bracket
    ``[0, max(P/linear, (P/cubic)**(1/3))]``.
    """
    if pressure < 0:
        raise ValueError("pressure must be non-negative")
    if linear < 0 or cubic < 0:
        raise NonMonotoneModel(
            "load-deflection curve is not monotone (negative linear stiffness: "
            "compressive films buckle and are outside the membrane model)")
    if pressure == 0:
        return 0.0
    if linear == 0 and cubic == 0:
        raise NonMonotoneModel("zero stiffness: deflection is unbounded")
    lo = 0.0
    hi = max(pressure / linear if linear > 0 else 0.0,
             (pressure / cubic) ** (1.0 / 3.0) if cubic > 0 else 0.0)
    h = hi
    for _ in range(max_iter):
        residual = linear * h + cubic * h**3 - pressure
        if residual > 0:
            hi = h
        else:
            lo = h
        step = residual / (linear + 3.0 * cubic * h**2)
        h_new = h - step
        if not lo < h_new < hi:
            h_new = 0.5 * (lo + hi)
        if abs(h_new - h) <= rtol * h_new:
            return h_new
        h = h_new
    return h


def forward_deflection(geometry: MembraneGeometry, material: MaterialParams,
                       pressure, include_bending=False, source=DEFAULT_SOURCE):
    """Centre deflection produced by ``pressure`` (inverse of :func:`forward_pressure`)."""
    if not include_bending and material.residual_stress_sigma0 < 0:
        raise NonMonotoneModel(
            "negative residual stress without bending: P(h) is not monotone")
    linear, cubic = stiffness_terms(geometry, material, include_bending, source)
    if np.ndim(pressure) == 0:
        return solve_cubic(linear, cubic, float(pressure))
    return np.array([solve_cubic(linear, cubic, float(p)) for p in np.ravel(pressure)])
