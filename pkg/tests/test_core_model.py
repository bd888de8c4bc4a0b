from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bulgekit.core_model import (CoefficientSource, LayerStack, Layer, MaterialParams,
                                 MembraneGeometry, PressureDeflectionCurve, bending_alpha,
                                 coefficients_for, forward_deflection, forward_pressure,
                                 shape_factors, solve_cubic, stiffness_terms, strip_f,
                                 vlassak_nix_square_f)
from bulgekit.errors import NonMonotoneModel, UnsupportedRatio

VN = CoefficientSource.VLASSAK_NIX


def test_literature_coefficients():
    c = coefficients_for(1.0, 0.3, VN)
    assert (c.c1, round(c.f_of_nu, 3)) == (3.39, 1.823)
    c = coefficients_for(1.0, 0.3, CoefficientSource.MAIER_SCHNEIDER)
    assert c.c1 == 3.45 and c.f_of_nu == pytest.approx(1.994 * (1 - 0.271 * 0.3), rel=1e-15)
    assert round(c.f_of_nu, 3) == 1.832
    c = coefficients_for(12.0, 0.3, VN)
    assert c.c1 == 2.0 and round(c.f_of_nu, 4) == 1.0256
    c = coefficients_for(2.0, 0.3, CoefficientSource.BONNOTTE)
    assert c.c1 == 2.19 and round(c.f_of_nu, 4) == 1.0214
    assert c.source is CoefficientSource.BONNOTTE


def test_alpha_values():
    assert coefficients_for(1.0, 0.3).alpha == 1.26e-3
    assert coefficients_for(2.0, 0.3, CoefficientSource.BONNOTTE).alpha == 2.54e-3
    assert coefficients_for(12.0, 0.3).alpha == 2.6e-3
    assert bending_alpha(1.5) == pytest.approx(1.9e-3)


def test_closed_forms_bit_for_bit():
    for nu in np.linspace(-0.499, 0.499, 301):
        nu = float(nu)
        assert coefficients_for(1.0, nu).f_of_nu == (0.8 + 0.062 * nu) ** -3
        assert coefficients_for(4.0, nu).f_of_nu == 8.0 / (6.0 * (1.0 + nu))
        assert coefficients_for(40.0, nu).c1 == 2.0


def test_square_snap_tolerance():
    assert coefficients_for(1.019, 0.3).source is VN
    assert coefficients_for(1.019, 0.3).f_of_nu == vlassak_nix_square_f(0.3)


def test_intermediate_ratio_uses_table():
    c = coefficients_for(1.9, 0.3)
    assert c.source is CoefficientSource.SOLVER_DERIVED
    assert 2.0 < c.c1 < 3.39
    assert strip_f(0.3) < c.f_of_nu < vlassak_nix_square_f(0.3)


def test_unsupported_ratio_without_table(monkeypatch, tmp_path):
    from bulgekit import core_model
    monkeypatch.setenv(core_model.DATA_DIR_ENV, str(tmp_path))
    core_model.clear_table_cache()
    try:
        with pytest.raises(UnsupportedRatio):
            coefficients_for(1.9, 0.3)
        with pytest.raises(UnsupportedRatio):
            coefficients_for(1.0, 0.3, CoefficientSource.SOLVER_DERIVED)
        assert coefficients_for(1.0, 0.3).c1 == 3.39
    finally:
        monkeypatch.delenv(core_model.DATA_DIR_ENV)
        core_model.clear_table_cache()


def test_literature_source_beyond_table_raises():
    with pytest.raises(UnsupportedRatio):
        coefficients_for(12.0, 0.3, CoefficientSource.MAIER_SCHNEIDER)


def test_input_validation():
    with pytest.raises(ValueError):
        coefficients_for(0.9, 0.3)
    with pytest.raises(ValueError):
        coefficients_for(1.0, 0.5)
    with pytest.raises(ValueError):
        MaterialParams(-1.0, 0.3, 1e8)
    with pytest.raises(ValueError):
        MembraneGeometry(0.0, 1e-3, 1e-7)


def test_geometry_swap_normalizes():
    g = MembraneGeometry(2e-3, 1e-3, 1e-7, sigma_a=2e-5, sigma_b=1e-5)
    assert (g.half_width_a, g.half_length_b) == (1e-3, 2e-3)
    assert (g.sigma_a, g.sigma_b) == (1e-5, 2e-5)
    assert g == MembraneGeometry(1e-3, 2e-3, 1e-7, 1e-5, 2e-5)


def _oracle_pressure(a, t, c1, f, E, nu, sigma0, h):
    F = Fraction
    a, t, c1, f, E, nu, sigma0, h = map(F, (a, t, c1, f, E, nu, sigma0, h))
    return c1 * t * sigma0 / a**2 * h + f * t / a**4 * E / (1 - nu) * h**3


def test_forward_pressure_against_exact_arithmetic():
    g = MembraneGeometry.from_full_dimensions(3.104e-3, 3.104e-3, 104e-9)
    m = MaterialParams(210e9, 0.3, 439e6)
    c = coefficients_for(1.0, 0.3)
    p = forward_pressure(g, m, 50e-6)
    exact = _oracle_pressure(g.half_width_a, g.thickness_t, c.c1, c.f_of_nu, 210e9, 0.3,
                             439e6, 50e-6)
    assert abs(p - float(exact)) <= 1e-14 * float(exact)


def test_forward_trivial_cases():
    g = MembraneGeometry(1e-3, 1e-3, 1e-7)
    assert forward_pressure(g, MaterialParams(2e11, 0.3, 1e8), 0.0) == 0.0
    m0 = MaterialParams(2e11, 0.3, 0.0)
    h = 30e-6
    expected = vlassak_nix_square_f(0.3) * 1e-7 / 1e-12 * 2e11 / 0.7 * h**3
    assert forward_pressure(g, m0, h) == pytest.approx(expected, rel=1e-15)
    assert forward_deflection(g, MaterialParams(2e11, 0.3, 1e8), 0.0) == 0.0


def test_linear_limit():
    assert solve_cubic(1.0, 0.0, 5.0) == pytest.approx(5.0, rel=1e-12)


def test_round_trip_ten_digits():
    g = MembraneGeometry.from_full_dimensions(3.104e-3, 3.104e-3, 104e-9)
    m = MaterialParams(210e9, 0.3, 439e6)
    for h0 in (1e-6, 10e-6, 90e-6):
        p = forward_pressure(g, m, h0)
        assert forward_deflection(g, m, p) == pytest.approx(h0, rel=1e-10)


def test_negative_stress_rejected_without_bending():
    g = MembraneGeometry(1e-3, 1e-3, 1e-7)
    with pytest.raises(NonMonotoneModel):
        forward_deflection(g, MaterialParams(2e11, 0.3, -1e8), 10.0)
    with pytest.raises(NonMonotoneModel):
        solve_cubic(-1.0, 1.0, 1.0)


def test_bending_negligible_at_large_deflection():
    for ratio in (1.0, 12.0):
        g = MembraneGeometry(0.75e-3, ratio * 0.75e-3, 104e-9)
        m = MaterialParams(210e9, 0.3, 420e6)
        h = np.linspace(51, 1000, 50) * g.thickness_t
        with_b = forward_pressure(g, m, h, include_bending=True)
        without = forward_pressure(g, m, h)
        assert np.max(np.abs(with_b - without) / without) < 1e-3


def test_curve_invariants():
    with pytest.raises(ValueError):
        PressureDeflectionCurve([1.0, 1.0], [1e-6, 2e-6])
    with pytest.raises(ValueError):
        PressureDeflectionCurve([1.0, 2.0], [-1e-6, 2e-6])
    c = PressureDeflectionCurve.from_samples([(0.0, 0.0), (1.0, 1e-6)])
    assert len(c) == 2 and c.samples[1] == (1.0, 1e-6)
    with pytest.raises(ValueError):
        c.pressure[0] = 3.0


def test_layer_stack_total():
    stack = LayerStack((Layer("a", 90e-9, 1.0), Layer("b", 98e-9)))
    assert abs(stack.total_thickness - 188e-9) < 1e-9 * 188e-9


def test_shape_factors_vectorized_matches_scalar():
    ratios = np.array([1.0, 1.5, 2.0, 3.3, 4.0, 9.0])
    nus = np.array([0.0, 0.1, 0.2, 0.3, 0.35, 0.45])
    c1, f, table = shape_factors(ratios, nus)
    for r, nu, cc, ff, tt in zip(ratios, nus, c1, f, table):
        one = coefficients_for(r, nu)
        assert one.c1 == pytest.approx(cc, rel=1e-15)
        assert one.f_of_nu == pytest.approx(ff, rel=1e-15)
        assert (one.source is CoefficientSource.SOLVER_DERIVED) == tt


ratios = st.floats(1.0, 20.0)
nus = st.floats(-0.45, 0.45)


@settings(max_examples=1000, deadline=None)
@given(a=st.floats(1e-4, 5e-3), ratio=ratios, t=st.floats(20e-9, 2e-6),
       E=st.floats(1e10, 5e11), nu=nus, sigma0=st.floats(1e6, 1e9),
       h_over_a=st.floats(1e-4, 0.2))
def test_property_forward_inverse_round_trip(a, ratio, t, E, nu, sigma0, h_over_a):
    g = MembraneGeometry(a, a * ratio, t)
    m = MaterialParams(E, nu, sigma0)
    h = h_over_a * a
    p = forward_pressure(g, m, h)
    assert forward_deflection(g, m, p) == pytest.approx(h, rel=1e-10)


@settings(max_examples=1000, deadline=None)
@given(a=st.floats(1e-4, 5e-3), ratio=ratios, nu=nus, h_over_a=st.floats(1e-4, 0.2))
def test_property_swap_invariance(a, ratio, nu, h_over_a):
    m = MaterialParams(2e11, nu, 3e8)
    g1 = MembraneGeometry(a, a * ratio, 1e-7)
    g2 = MembraneGeometry(a * ratio, a, 1e-7)
    h = h_over_a * min(g1.half_width_a, g1.half_length_b)
    assert forward_pressure(g1, m, h) == forward_pressure(g2, m, h)


@settings(max_examples=1000, deadline=None)
@given(ratio=ratios, nu=nus, h1=st.floats(1e-7, 1e-4), dh=st.floats(1e-9, 1e-4))
def test_property_forward_monotone(ratio, nu, h1, dh):
    g = MembraneGeometry(1e-3, 1e-3 * ratio, 1e-7)
    m = MaterialParams(2e11, nu, 3e8)
    assert forward_pressure(g, m, h1 + dh) > forward_pressure(g, m, h1)


def test_stiffness_terms_match_formula():
    g = MembraneGeometry(0.5e-3, 0.5e-3, 1e-7)
    m = MaterialParams(2e11, 0.25, 2e8)
    lin, cub = stiffness_terms(g, m)
    assert lin == 3.39 * 1e-7 * 2e8 / 0.5e-3**2
    assert cub == vlassak_nix_square_f(0.25) * 1e-7 / 0.5e-3**4 * 2e11 / 0.75
