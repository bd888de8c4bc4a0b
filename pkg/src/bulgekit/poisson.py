"""Poisson's ratio from a square/rectangular membrane pair.

The cubic coefficients ``B`` of a square and an elongated membrane made of the
same film differ only through the shape factor ``f(nu, b/a)`` and the fourth
power of the half-widths::

    B_rect / B_square = f_rect(nu) / f_square(nu) * (a_square / a_rect)**4

E and t cancel, so nu follows from a one-dimensional root search.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .core_model import (DEFAULT_SOURCE, SQUARE_TOLERANCE, FitResult, MembraneGeometry,
                         nominal_shape_ratio, shape_factors)
from .errors import NoRootInBracket, ShapeTooSimilar, UncertaintyFailure
from .fitting import UncertaintySpec, sample_geometries

NU_BRACKET = (-0.49, 0.49)
# Monte-Carlo draws are not censored at the physical limit; the shape-factor
# ratio stays monotone well past it.
MC_BRACKET = (-0.99, 0.99)
MIN_RATIO_SEPARATION = 0.5
# Pairs whose Young's moduli differ by more than this are flagged.
E_MISMATCH_WARNING = 0.10


class PairMismatchWarning(UserWarning):
    pass


@dataclass(frozen=True)
class PoissonSolveReport:
    nu: float
    delta_nu: float
    slope_ratio: float
    bracket: tuple
    iterations: int
    pair_labels: tuple
    source: str = DEFAULT_SOURCE.value
    e_mismatch: float = 0.0
    n_samples: int = 0
    seed: int = 0
    failed_draws: int = 0


def _check_pair(geom_rect, geom_square):
    r_sq, r_rect = geom_square.aspect_ratio(), geom_rect.aspect_ratio()
    if abs(r_sq - 1.0) > SQUARE_TOLERANCE:
        raise ShapeTooSimilar(f"reference membrane is not square (b/a = {r_sq:.3f})")
    if r_rect - r_sq < MIN_RATIO_SEPARATION:
        raise ShapeTooSimilar(
            f"aspect ratios {r_rect:.3f} and {r_sq:.3f} are too close: the slope "
            "ratio carries no information on nu")


def _residual(nu, slope_ratio, a_sq, r_sq, a_rect, r_rect, source, check=True):
    _, f_rect, _ = shape_factors(r_rect, nu, source, check)
    _, f_sq, _ = shape_factors(r_sq, nu, source, check)
    return f_rect / f_sq * (a_sq / a_rect) ** 4 - slope_ratio


def slope_ratio_residual(nu, slope_rect, slope_square, geom_rect: MembraneGeometry,
                         geom_square: MembraneGeometry, source=DEFAULT_SOURCE,
                         check_shapes=True) -> float:
    """Mismatch between predicted and measured cubic-slope ratios at ``nu``.

    Zero at the Poisson's ratio consistent with both membranes. The film
    thickness does not enter.

    Raises:
        ShapeTooSimilar: the two aspect ratios differ by less than 0.5 (unless
            ``check_shapes`` is False).
    """
    if not (slope_rect > 0 and slope_square > 0):
        raise ValueError("slopes must be positive")
    if check_shapes:
        _check_pair(geom_rect, geom_square)
    value = _residual(nu, slope_rect / slope_square, geom_square.half_width_a,
                      geom_square.aspect_ratio(), geom_rect.half_width_a,
                      geom_rect.aspect_ratio(), source)
    return float(value)


def _bisect(fun, size, lo, hi, xtol):
    """Vectorized bisection; returns (root, lo, hi, iterations, valid)."""
    lo = np.full(size, lo, dtype=float)
    hi = np.full(size, hi, dtype=float)
    f_lo, f_hi = fun(lo), fun(hi)
    valid = np.sign(f_lo) != np.sign(f_hi)
    exact_lo, exact_hi = f_lo == 0, f_hi == 0
    iterations = 0
    while np.max(hi - lo) > xtol:
        mid = 0.5 * (lo + hi)
        f_mid = fun(mid)
        same = np.sign(f_mid) == np.sign(f_lo)
        lo = np.where(same, mid, lo)
        f_lo = np.where(same, f_mid, f_lo)
        hi = np.where(same, hi, mid)
        iterations += 1
    root = 0.5 * (lo + hi)
    root = np.where(exact_lo, lo, np.where(exact_hi, hi, root))
    return root, lo, hi, iterations, valid


def solve_poisson(fit_square: FitResult, fit_rect: FitResult, source=DEFAULT_SOURCE,
                  uncertainty: UncertaintySpec | None = UncertaintySpec(),
                  xtol=1e-10) -> PoissonSolveReport:
    """Poisson's ratio (and its Monte-Carlo uncertainty) of a membrane pair.

    ``delta_nu`` is the standard deviation of nu over draws of both membranes'
    lateral dimensions; thickness uncertainties cancel and are ignored.

    Raises:
        ShapeTooSimilar, NoRootInBracket
    """
    g_sq, g_rect = fit_square.geometry, fit_rect.geometry
    _check_pair(g_rect, g_sq)
    ratio = fit_rect.slope_B / fit_square.slope_B
    e_mismatch = abs(fit_rect.youngs_modulus_E - fit_square.youngs_modulus_E) / min(
        fit_rect.youngs_modulus_E, fit_square.youngs_modulus_E)
    if e_mismatch > E_MISMATCH_WARNING:
        warnings.warn(f"Young's moduli of the pair differ by {e_mismatch:.0%}; nu is "
                      "only reliable when both membranes give close moduli",
                      PairMismatchWarning, stacklevel=2)

    def fun(nu):
        return _residual(nu, ratio, g_sq.half_width_a, g_sq.aspect_ratio(),
                         g_rect.half_width_a, g_rect.aspect_ratio(), source)

    root, lo, hi, iterations, valid = _bisect(fun, 1, *NU_BRACKET, xtol)
    if not valid[0]:
        raise NoRootInBracket(
            f"slope ratio {ratio:.6g} is not reachable for nu in {NU_BRACKET}: "
            "the pair is inconsistent with the shape-factor model")

    delta, n, seed, failed = 0.0, 0, 0, 0
    if uncertainty is not None and any(
            s > 0 for g in (g_sq, g_rect) for s in (g.sigma_a, g.sigma_b)):
        rng = np.random.default_rng(uncertainty.seed)
        a1, b1, _ = sample_geometries(g_sq, uncertainty, rng, perturb=("a", "b"))
        a2, b2, _ = sample_geometries(g_rect, uncertainty, rng, perturb=("a", "b"))
        a_sq, a_rect = np.minimum(a1, b1), np.minimum(a2, b2)
        r_sq = nominal_shape_ratio(g_sq.aspect_ratio(), np.maximum(a1, b1) / a_sq)
        r_rect = nominal_shape_ratio(g_rect.aspect_ratio(), np.maximum(a2, b2) / a_rect)

        def fun_mc(nu):
            return _residual(nu, ratio, a_sq, r_sq, a_rect, r_rect, source, check=False)

        draws, *_, ok = _bisect(fun_mc, uncertainty.n_samples, *MC_BRACKET, 1e-8)
        n, seed = uncertainty.n_samples, uncertainty.seed
        failed = int(n - ok.sum())
        if failed > 0.1 * n:
            raise UncertaintyFailure(f"{failed} of {n} Monte-Carlo draws have no root "
                                     f"in {MC_BRACKET}")
        delta = float(np.std(draws[ok], ddof=1))

    return PoissonSolveReport(
        nu=float(root[0]), delta_nu=delta, slope_ratio=ratio,
        bracket=(float(lo[0]), float(hi[0])), iterations=iterations,
        pair_labels=(g_sq.label, g_rect.label),
        source=getattr(source, "value", str(source)), e_mismatch=e_mismatch,
        n_samples=n, seed=seed, failed_draws=failed)
