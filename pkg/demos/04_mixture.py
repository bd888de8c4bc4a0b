"""
Properties of a buried layer from the mixture law
=================================================

A bilayer behaves like one film whose properties are the thickness-weighted
mean of its layers. Knowing the composite and one layer, the other follows.
Here a silicon oxide layer is recovered from a nitride/oxide stack.
"""

from bulgekit.fitting import UncertaintySpec
from bulgekit.mixture import PropertyMode, bilayer_stack, decompose_with_uncertainty

T_NITRIDE, T_OXIDE = 90e-9, 98e-9
cases = [
    (PropertyMode.YOUNGS_MODULUS, 147e9, 14e9, 212e9, 8e9, 1e9, "GPa"),
    (PropertyMode.RESIDUAL_STRESS, 107e6, 2e6, 420e6, 25e6, 1e6, "MPa"),
    (PropertyMode.POISSON_RATIO, 0.23, 0.0, 0.29, 0.0, 1.0, ""),
]

spec = UncertaintySpec(n_samples=10000, seed=42)
for mode, composite, u_comp, nitride, u_nitride, scale, unit in cases:
    stack = bilayer_stack("Si3N4", T_NITRIDE, nitride, "SiO2", T_OXIDE,
                          u_known_thickness=2e-9, u_known_value=u_nitride,
                          u_unknown_thickness=2e-9)
    r = decompose_with_uncertainty(composite, u_comp, stack, spec, mode)
    print(f"{mode.value:16s} SiO2 = {r.value / scale:8.3f} +- {r.uncertainty / scale:.3f} {unit}")
    if r.note:
        print(f"  note: {r.note}")
