"""Residual stress and biaxial modulus from a pressure-deflection curve.

The load-deflection model ``P = A*h + B*h**3`` becomes a straight line when
``P/h`` is plotted against ``h**2``: the intercept is ``A`` and the slope ``B``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .core_model import (DEFAULT_SOURCE, FitResult, MembraneGeometry,
                         PressureDeflectionCurve, coefficients_for, nominal_shape_ratio,
                         shape_factors)
from .errors import (BulgeError, DegenerateAbscissa, TooFewPoints, UncertaintyFailure)

DEFAULT_NU = 0.3
# Points with h <= MIN_DEFLECTION_OVER_T * t are dropped: the model neglects bending.
MIN_DEFLECTION_OVER_T = 10.0
GEOMETRY_UNCERTAINTY_NOTE = "geometry-driven (Monte-Carlo over lateral dimensions/thickness)"


class InvalidFit(BulgeError):
    code = "INVALID_FIT"


class LinearizedPoint(NamedTuple):
    x: float  # h**2, m^2
    y: float  # P/h, Pa/m


@dataclass(frozen=True)
class UncertaintySpec:
    n_samples: int = 10000
    seed: int = 42
    perturb: tuple = ("a", "b", "t")

    def __post_init__(self):
        if self.n_samples < 100:
            raise ValueError("n_samples must be >= 100")
        unknown = set(self.perturb) - {"a", "b", "t"}
        if unknown:
            raise ValueError(f"unknown perturbation flags {sorted(unknown)}")


def linearize(curve: PressureDeflectionCurve, min_deflection=0.0):
    """``(h**2, P/h)`` for every sample with ``h > min_deflection``, in order."""
    keep = curve.deflection > max(min_deflection, 0.0)
    h, p = curve.deflection[keep], curve.pressure[keep]
    if h.size < 3:
        raise TooFewPoints(f"{h.size} usable samples with h > {min_deflection:g} m "
                           "(at least 3 are needed)")
    return [LinearizedPoint(x, y) for x, y in zip((h * h).tolist(), (p / h).tolist())]


def _as_arrays(points):
    if isinstance(points, tuple) and len(points) == 2 and isinstance(points[0], np.ndarray):
        return np.asarray(points[0], float), np.asarray(points[1], float)
    arr = np.asarray(points, dtype=float).reshape(-1, 2)
    return arr[:, 0], arr[:, 1]


def fit_line(points: Sequence[LinearizedPoint], weights=None):
    """Least-squares line ``y = A + B*x``.

    Returns ``(A, B, r_squared)``. ``r_squared`` is 1 when the residuals vanish,
    including the horizontal-line case.
    """
    x, y = _as_arrays(points)
    if x.size < 3:
        raise TooFewPoints(f"{x.size} points given, at least 3 are needed")
    w = np.ones_like(x) if weights is None else np.asarray(weights, dtype=float)
    if np.all(x == x[0]):
        raise DegenerateAbscissa("all abscissae are identical; the slope is undefined")
    wsum = w.sum()
    xm = np.dot(w, x) / wsum
    ym = np.dot(w, y) / wsum
    dx, dy = x - xm, y - ym
    sxx = np.dot(w, dx * dx)
    slope = np.dot(w, dx * dy) / sxx
    intercept = ym - slope * xm
    ss_res = np.dot(w, (y - intercept - slope * x) ** 2)
    ss_tot = np.dot(w, dy * dy)
    if ss_res == 0.0:
        r2 = 1.0
    elif ss_tot == 0.0:
        r2 = 0.0
    else:
        r2 = min(max(1.0 - ss_res / ss_tot, 0.0), 1.0)
    return float(intercept), float(slope), float(r2)


def extract_parameters(intercept_A, slope_B, geometry: MembraneGeometry,
                       nu_assumed=DEFAULT_NU, source=DEFAULT_SOURCE,
                       r_squared=1.0, n_points=0) -> FitResult:
    """Residual stress and moduli from the line intercept and slope."""
    if not intercept_A > 0:
        raise InvalidFit(f"intercept must be positive (got {intercept_A:g} Pa/m): "
                         "no tensile residual stress")
    if not slope_B > 0:
        raise InvalidFit(f"slope must be positive (got {slope_B:g} Pa/m^3): the curve "
                         "carries no stiffness information")
    coeffs = coefficients_for(geometry.aspect_ratio(), nu_assumed, source)
    a, t = geometry.half_width_a, geometry.thickness_t
    sigma0 = intercept_A * a**2 / (coeffs.c1 * t)
    biaxial = slope_B * a**4 / (coeffs.f_of_nu * t)
    return FitResult(intercept_A=float(intercept_A), slope_B=float(slope_B),
                     sigma0=sigma0, biaxial_modulus=biaxial,
                     youngs_modulus_E=(1.0 - nu_assumed) * biaxial,
                     nu_assumed=nu_assumed, r_squared=r_squared, u_sigma0=0.0, u_E=0.0,
                     geometry=geometry, coeffs=coeffs, n_points=n_points)


def _min_deflection(geometry, min_deflection):
    if min_deflection is None:
        return MIN_DEFLECTION_OVER_T * geometry.thickness_t
    return min_deflection


def fit_curve(curve: PressureDeflectionCurve, geometry: MembraneGeometry,
              nu_assumed=DEFAULT_NU, source=DEFAULT_SOURCE, min_deflection=None,
              uncertainty: Optional[UncertaintySpec] = None, weights=None) -> FitResult:
    """Linearize, fit and convert a measured curve in one go.

    ``min_deflection`` defaults to ten film thicknesses. When ``uncertainty`` is
    given the geometry-driven uncertainties are filled in as well.
    """
    points = linearize(curve, _min_deflection(geometry, min_deflection))
    A, B, r2 = fit_line(points, weights)
    result = extract_parameters(A, B, geometry, nu_assumed, source, r2, len(points))
    if uncertainty is not None:
        u_s, u_e = propagate_uncertainty(curve, geometry, nu_assumed, source, uncertainty,
                                         min_deflection)
        result = replace(result, u_sigma0=u_s, u_E=u_e,
                         uncertainty_note=GEOMETRY_UNCERTAINTY_NOTE)
    return result


def truncated_normal(rng, mean, sigma, size, n_sigma=4.0):
    """Gaussian draws truncated at ``mean +- n_sigma*sigma`` and at positivity."""
    out = mean + sigma * rng.standard_normal(size)
    if sigma == 0:
        return out
    bad = (np.abs(out - mean) > n_sigma * sigma) | (out <= 0)
    while np.any(bad):
        out[bad] = mean + sigma * rng.standard_normal(int(bad.sum()))
        bad = (np.abs(out - mean) > n_sigma * sigma) | (out <= 0)
    return out


def sample_geometries(geometry: MembraneGeometry, spec: UncertaintySpec, rng,
                      perturb=None):
    """Arrays ``(a, b, t)`` of perturbed dimensions, one entry per draw."""
    perturb = spec.perturb if perturb is None else perturb
    n = spec.n_samples
    draws = []
    for key, mean, sigma in (("a", geometry.half_width_a, geometry.sigma_a),
                             ("b", geometry.half_length_b, geometry.sigma_b),
                             ("t", geometry.thickness_t, geometry.sigma_t)):
        if key in perturb and sigma > 0:
            draws.append(truncated_normal(rng, mean, sigma, n))
        else:
            draws.append(np.full(n, mean))
    return tuple(draws)


def propagate_uncertainty(curve: PressureDeflectionCurve, geometry: MembraneGeometry,
                          nu_assumed=DEFAULT_NU, source=DEFAULT_SOURCE,
                          spec: UncertaintySpec = UncertaintySpec(),
                          min_deflection=None):
    """Monte-Carlo standard deviations ``(u_sigma0, u_E)`` from geometric tolerances.

    Each draw re-runs the full fit with perturbed ``(a, b, t)``; draws are
    independent truncated Gaussians and fully determined by ``spec.seed``.
    Fits only depend on the draw through the retained-point set (when the
    deflection cut-off scales with ``t``), so line fits are shared between
    draws with the same set.

    Raises:
        UncertaintyFailure: more than 10% of the draws could not be fitted.
    """
    sigmas = {"a": geometry.sigma_a, "b": geometry.sigma_b, "t": geometry.sigma_t}
    if not any(sigmas[k] > 0 for k in spec.perturb):
        fit_curve(curve, geometry, nu_assumed, source, min_deflection)
        return 0.0, 0.0
    rng = np.random.default_rng(spec.seed)
    a, b, t = sample_geometries(geometry, spec, rng)
    n = spec.n_samples
    short, long_ = np.minimum(a, b), np.maximum(a, b)

    if min_deflection is None:
        cut = MIN_DEFLECTION_OVER_T * t
    else:
        cut = np.full(n, float(min_deflection))
    h = curve.deflection
    masks = h[None, :] > cut[:, None]
    intercept = np.full(n, np.nan)
    slope = np.full(n, np.nan)
    unique, inverse = np.unique(masks, axis=0, return_inverse=True)
    for k, mask in enumerate(unique):
        if mask.sum() < 3:
            continue
        p = curve.pressure[mask]
        hh = h[mask]
        try:
            A, B, _ = fit_line((hh * hh, p / hh))
        except DegenerateAbscissa:
            continue
        sel = inverse.ravel() == k
        intercept[sel], slope[sel] = A, B

    ok = (intercept > 0) & (slope > 0)
    ratio = nominal_shape_ratio(geometry.aspect_ratio(), long_[ok] / short[ok])
    c1, f, _ = shape_factors(ratio, nu_assumed, source)
    sigma0 = intercept[ok] * short[ok] ** 2 / (c1 * t[ok])
    E = (1.0 - nu_assumed) * slope[ok] * short[ok] ** 4 / (f * t[ok])
    failed = n - int(ok.sum())
    if failed > 0.1 * n:
        raise UncertaintyFailure(f"{failed} of {n} Monte-Carlo draws could not be fitted")
    if ok.sum() < 2:
        return 0.0, 0.0
    return float(np.std(sigma0, ddof=1)), float(np.std(E, ddof=1))
