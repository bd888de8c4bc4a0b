"""
Load-deflection model and shape coefficients
============================================

A clamped rectangular membrane under pressure P bulges by h at its centre.
For large deflections the response is a linear term set by the residual
stress plus a cubic term set by the biaxial modulus E/(1 - nu). This script
prints the coefficient sets for a few shapes and tabulates a forward curve.
"""

import numpy as np

from bulgekit.core_model import (CoefficientSource, MaterialParams, coefficients_for,
                                 forward_deflection, forward_pressure)
from bulgekit.io import load_bundled_geometry

# Literature coefficient sets for a square at nu = 0.3, then the strip limit.
for source in (CoefficientSource.VLASSAK_NIX, CoefficientSource.MAIER_SCHNEIDER,
               CoefficientSource.BONNOTTE):
    c = coefficients_for(1.0, 0.3, source)
    print(f"square  {source.value:15s} C1 = {c.c1:.2f}  f = {c.f_of_nu:.3f}")
c = coefficients_for(12.0, 0.3)
print(f"strip   {c.source.value:15s} C1 = {c.c1:.2f}  f = {c.f_of_nu:.4f}")

# Between the square and the strip the bundled solver table takes over.
for ratio in (1.25, 1.5, 1.9, 2.5, 3.0):
    c = coefficients_for(ratio, 0.3)
    print(f"b/a = {ratio:<4} {c.source.value:15s} C1 = {c.c1:.3f}  f = {c.f_of_nu:.3f}")

# %%
# A 3.1 mm square silicon nitride membrane, 104 nm thick.
geometry = load_bundled_geometry("1M")
material = MaterialParams(youngs_modulus_E=210e9, poisson_nu=0.3,
                          residual_stress_sigma0=439e6)

pressures = np.linspace(5e3, 1e5, 8)
deflections = forward_deflection(geometry, material, pressures)
print("\n  P (mbar)   h (um)   h/t")
for p, h in zip(pressures, deflections):
    print(f"  {p / 100:8.1f} {h * 1e6:8.2f} {h / geometry.thickness_t:6.0f}")

# %%
# The plate bending correction is negligible once h is a few tens of t.
h = deflections[-1]
with_bending = forward_pressure(geometry, material, h, include_bending=True)
print(f"\nbending correction at h = {h * 1e6:.1f} um: "
      f"{(with_bending - pressures[-1]) / pressures[-1]:.2e}")
