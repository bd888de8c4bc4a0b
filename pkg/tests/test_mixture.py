import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bulgekit.core_model import Layer, LayerStack
from bulgekit.errors import MultipleUnknowns, ZeroUnknownThickness
from bulgekit.fitting import UncertaintySpec
from bulgekit.mixture import (PropertyMode, bilayer_stack, compose, decompose_unknown,
                              decompose_with_uncertainty, first_order_uncertainty)

T_N, T_O = 90e-9, 98e-9


def test_compose_basic():
    assert compose(LayerStack((Layer("x", 1e-7, 42.0),))) == 42.0
    assert compose(LayerStack((Layer("x", 1e-7, 100.0), Layer("y", 1e-7, 200.0)))) == 150.0
    stress = compose(LayerStack((Layer("n", T_N, 420e6), Layer("o", T_O, -180.4e6))))
    assert stress == pytest.approx(107e6, abs=0.05e6)


def test_decompose_silicon_oxide():
    e = decompose_unknown(147e9, bilayer_stack("n", T_N, 212e9, "o", T_O))
    s = decompose_unknown(107e6, bilayer_stack("n", T_N, 420e6, "o", T_O))
    nu = decompose_unknown(0.23, bilayer_stack("n", T_N, 0.29, "o", T_O))
    assert e == pytest.approx((188 * 147 - 90 * 212) / 98 * 1e9, rel=1e-13)
    assert round(e / 1e9, 1) == 87.3
    assert round(s / 1e6, 1) == -180.4
    assert round(nu, 3) == 0.175


def test_unknown_count_errors():
    with pytest.raises(MultipleUnknowns):
        decompose_unknown(1.0, LayerStack((Layer("a", 1e-7), Layer("b", 1e-7))))
    with pytest.raises(MultipleUnknowns):
        decompose_unknown(1.0, LayerStack((Layer("a", 1e-7, 1.0),)))
    with pytest.raises(ValueError):
        Layer("a", 0.0)


def test_zero_unknown_thickness():
    # Layer forbids zero thickness at construction; bypass to exercise the guard.
    layer = Layer("o", 1e-7)
    object.__setattr__(layer, "thickness", 0.0)
    with pytest.raises(ZeroUnknownThickness):
        decompose_unknown(1.0, LayerStack((Layer("n", 1e-7, 2.0), layer)))


def test_zero_uncertainty():
    r = decompose_with_uncertainty(147e9, 0.0, bilayer_stack("n", T_N, 212e9, "o", T_O))
    assert r.uncertainty == 0.0
    assert r.value == decompose_unknown(147e9, bilayer_stack("n", T_N, 212e9, "o", T_O))


def _e_stack(u_t_unknown=2e-9):
    return bilayer_stack("n", T_N, 212e9, "o", T_O, u_known_thickness=2e-9,
                         u_known_value=8e9, u_unknown_thickness=u_t_unknown)


def test_uncertainty_amplified_and_matches_first_order():
    r = decompose_with_uncertainty(147e9, 14e9, _e_stack(), UncertaintySpec(20000, 1))
    assert r.uncertainty / abs(r.value) > max(14 / 147, 8 / 212, 2 / 90, 2 / 98)
    linear = first_order_uncertainty(147e9, 14e9, _e_stack())
    assert r.uncertainty == pytest.approx(linear, rel=0.05)


def test_uncertainty_grows_with_unknown_thickness_sigma():
    spec = UncertaintySpec(20000, 1)
    u1 = decompose_with_uncertainty(147e9, 14e9, _e_stack(2e-9), spec).uncertainty
    u2 = decompose_with_uncertainty(147e9, 14e9, _e_stack(4e-9), spec).uncertainty
    assert u2 > u1


def test_validity_note_and_units():
    stack = bilayer_stack("n", T_N, 0.29, "o", T_O)
    r = decompose_with_uncertainty(0.23, 0.0, stack, mode=PropertyMode.POISSON_RATIO)
    assert r.note and r.unit == "1"
    r = decompose_with_uncertainty(107e6, 0.0, bilayer_stack("n", T_N, 420e6, "o", T_O),
                                   mode=PropertyMode.RESIDUAL_STRESS)
    assert r.note == "" and r.unit == "Pa"


layer_values = st.lists(st.tuples(st.floats(1e-9, 1e-6), st.floats(-1e3, 1e3)), min_size=1,
                        max_size=6)


@settings(max_examples=1000, deadline=None)
@given(layers=layer_values, t_unknown=st.floats(1e-9, 1e-6), composite=st.floats(-1e3, 1e3))
def test_property_compose_decompose_identity(layers, t_unknown, composite):
    known = [Layer(f"k{i}", t, v) for i, (t, v) in enumerate(layers)]
    stack = LayerStack(tuple(known) + (Layer("u", t_unknown),))
    value = decompose_unknown(composite, stack)
    filled = LayerStack(tuple(known) + (Layer("u", t_unknown, value),))
    # Cancellation in the inversion limits accuracy to the magnitude of the terms.
    scale = max([abs(composite)] + [abs(v) for _, v in layers] + [abs(value) * t_unknown
                                                                  / stack.total_thickness])
    assert abs(compose(filled) - composite) <= 1e-12 * max(scale, 1e-300) * len(layers) * 4


@settings(max_examples=1000, deadline=None)
@given(layers=layer_values, data=st.data())
def test_property_permutation_and_convexity(layers, data):
    stack = LayerStack(tuple(Layer(f"k{i}", t, v) for i, (t, v) in enumerate(layers)))
    perm = data.draw(st.permutations(list(stack.layers)))
    value = compose(stack)
    assert compose(LayerStack(tuple(perm))) == pytest.approx(value, rel=1e-12, abs=1e-9)
    values = [v for _, v in layers]
    assert min(values) - 1e-9 <= value <= max(values) + 1e-9


@settings(max_examples=1000, deadline=None)
@given(layers=layer_values, t_unknown=st.floats(1e-9, 1e-6), composite=st.floats(-1e3, 1e3),
       data=st.data())
def test_property_decompose_permutation(layers, t_unknown, composite, data):
    items = [Layer(f"k{i}", t, v) for i, (t, v) in enumerate(layers)] + [Layer("u", t_unknown)]
    perm = data.draw(st.permutations(items))
    a = decompose_unknown(composite, LayerStack(tuple(items)))
    b = decompose_unknown(composite, LayerStack(tuple(perm)))
    assert math.isclose(a, b, rel_tol=1e-12, abs_tol=1e-9 * (1 + abs(a)))


def test_monte_carlo_deterministic():
    spec = UncertaintySpec(5000, 9)
    r1 = decompose_with_uncertainty(147e9, 14e9, _e_stack(), spec)
    r2 = decompose_with_uncertainty(147e9, 14e9, _e_stack(), spec)
    assert r1 == r2 and r1.seed == 9 and r1.n_samples == 5000
    assert np.isfinite(r1.uncertainty)
