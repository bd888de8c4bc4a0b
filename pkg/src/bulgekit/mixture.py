"""Thickness-weighted mixture law for multilayer films.

A multilayer behaves like a single film whose property is the thickness-weighted
mean of its layers. Knowing the composite value and all layers but one, the
remaining layer's property follows by inversion.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .core_model import Layer, LayerStack
from .errors import MultipleUnknowns, ZeroUnknownThickness
from .fitting import UncertaintySpec, truncated_normal


class PropertyMode(str, enum.Enum):
    BIAXIAL_MODULUS = "biaxial_modulus"
    RESIDUAL_STRESS = "residual_stress"
    YOUNGS_MODULUS = "youngs_modulus"
    POISSON_RATIO = "poisson_ratio"


DEFAULT_MODE = PropertyMode.BIAXIAL_MODULUS

UNITS = {
    PropertyMode.BIAXIAL_MODULUS: "Pa",
    PropertyMode.RESIDUAL_STRESS: "Pa",
    PropertyMode.YOUNGS_MODULUS: "Pa",
    PropertyMode.POISSON_RATIO: "1",
}


def validity_note(mode) -> str:
    """Caveat attached to results for modes the mixture law does not strictly cover."""
    mode = PropertyMode(mode)
    if mode in (PropertyMode.YOUNGS_MODULUS, PropertyMode.POISSON_RATIO):
        return (f"mixture law applied to {mode.value}: thickness weighting is exact only "
                "for the biaxial modulus and the residual stress; treat the result as "
                "an approximation")
    return ""


@dataclass(frozen=True)
class MixtureResult:
    mode: str
    value: float
    uncertainty: float
    unknown_layer: str
    note: str = ""
    n_samples: int = 0
    seed: int = 0

    @property
    def unit(self):
        return UNITS[PropertyMode(self.mode)]


def compose(stack: LayerStack) -> float:
    """Composite property ``sum(t_i * M_i) / t_total``."""
    missing = [l.name for l in stack.layers if l.property_value is None]
    if missing:
        raise ValueError(f"layers without a property value: {missing}")
    total = stack.total_thickness
    return math.fsum(l.thickness * l.property_value for l in stack.layers) / total


def _split_unknown(stack: LayerStack):
    unknown = [l for l in stack.layers if l.property_value is None]
    if len(unknown) != 1:
        raise MultipleUnknowns(f"exactly one layer must be unknown, found {len(unknown)}")
    if not unknown[0].thickness > 0:
        raise ZeroUnknownThickness(f"unknown layer {unknown[0].name!r} has no thickness")
    known = [l for l in stack.layers if l.property_value is not None]
    return unknown[0], known


def decompose_unknown(composite_value: float, stack_with_one_unknown: LayerStack) -> float:
    """Property of the single unknown layer given the composite value.

    Raises:
        MultipleUnknowns: zero or several layers lack a property value.
        ZeroUnknownThickness: the unknown layer has no thickness.
    """
    unknown, known = _split_unknown(stack_with_one_unknown)
    total = stack_with_one_unknown.total_thickness
    rest = math.fsum(l.thickness * l.property_value for l in known)
    return (total * composite_value - rest) / unknown.thickness


def first_order_uncertainty(composite_value, composite_u, stack: LayerStack) -> float:
    """Linearized (partial-derivative) uncertainty of :func:`decompose_unknown`."""
    unknown, known = _split_unknown(stack)
    value = decompose_unknown(composite_value, stack)
    tu = unknown.thickness
    terms = [stack.total_thickness / tu * composite_u,
             (composite_value - value) / tu * unknown.u_thickness]
    for l in known:
        terms.append(l.thickness / tu * l.u_property)
        terms.append((composite_value - l.property_value) / tu * l.u_thickness)
    return math.sqrt(math.fsum(t * t for t in terms))


def decompose_with_uncertainty(composite_value: float, composite_u: float,
                               stack: LayerStack,
                               spec: UncertaintySpec = UncertaintySpec(),
                               mode=DEFAULT_MODE) -> MixtureResult:
    """Monte-Carlo version of :func:`decompose_unknown`.

    Composite and layer property values are drawn from Gaussians; thicknesses
    from Gaussians truncated at 4 sigma and at positivity. The reported value
    is the deterministic decomposition, the uncertainty the spread of draws.
    """
    unknown, known = _split_unknown(stack)
    mode = PropertyMode(mode)
    value = decompose_unknown(composite_value, stack)
    sigmas = [composite_u, unknown.u_thickness] + [
        s for l in known for s in (l.u_thickness, l.u_property)]
    if not any(s > 0 for s in sigmas):
        return MixtureResult(mode.value, value, 0.0, unknown.name, validity_note(mode))

    rng = np.random.default_rng(spec.seed)
    n = spec.n_samples
    comp = composite_value + composite_u * rng.standard_normal(n)
    t_unknown = truncated_normal(rng, unknown.thickness, unknown.u_thickness, n)
    total = t_unknown.copy()
    weighted = np.zeros(n)
    for l in known:
        t = truncated_normal(rng, l.thickness, l.u_thickness, n)
        m = l.property_value + l.u_property * rng.standard_normal(n)
        total += t
        weighted += t * m
    draws = (total * comp - weighted) / t_unknown
    return MixtureResult(mode.value, value, float(np.std(draws, ddof=1)), unknown.name,
                         validity_note(mode), n, spec.seed)


def bilayer_stack(known_name, known_thickness, known_value, unknown_name, unknown_thickness,
                  u_known_thickness=0.0, u_known_value=0.0, u_unknown_thickness=0.0):
    """Convenience constructor for the common two-layer case."""
    return LayerStack((Layer(known_name, known_thickness, known_value, u_known_thickness,
                             u_known_value),
                       Layer(unknown_name, unknown_thickness, None, u_unknown_thickness)))
