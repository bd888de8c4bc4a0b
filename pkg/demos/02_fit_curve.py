"""
Residual stress and modulus from a bulge curve
==============================================

Plotting P/h against h**2 turns the load-deflection model into a straight
line: the intercept gives the residual stress, the slope the biaxial modulus.
Here the measured curves are replaced by noisy synthetic ones for the ten
reference membranes, then fitted with Monte-Carlo uncertainties driven by the
lateral dimensions.
"""

import numpy as np

from bulgekit.core_model import MaterialParams, PressureDeflectionCurve, forward_deflection
from bulgekit.fitting import UncertaintySpec, fit_curve, linearize
from bulgekit.io import bundled_dataset, load_bundled_geometry

rng = np.random.default_rng(0)
spec = UncertaintySpec(n_samples=4000, seed=42)

print("label   b/a   sigma0 (MPa)       E (GPa)        reported")
for label, ref in bundled_dataset().items():
    geometry = load_bundled_geometry(label, lateral_uncertainty=0.01)
    material = MaterialParams(ref.youngs_modulus, 0.3, ref.sigma0)
    p = np.linspace(2e3, 1e5, 25)
    h = forward_deflection(geometry, material, p)
    h = h * (1 + 0.002 * rng.standard_normal(h.size))  # interferometer noise
    curve = PressureDeflectionCurve(p, h, label)
    fit = fit_curve(curve, geometry, nu_assumed=0.3, uncertainty=spec)
    print(f"{label:5s} {geometry.aspect_ratio():5.1f}  "
          f"{fit.sigma0 / 1e6:6.1f} +- {fit.u_sigma0 / 1e6:4.1f}   "
          f"{fit.youngs_modulus_E / 1e9:6.1f} +- {fit.u_E / 1e9:4.1f}   "
          f"{ref.sigma0 / 1e6:.0f} / {ref.youngs_modulus / 1e9:.0f}")

# %%
# The linearized points themselves, ready for any plotting tool.
points = linearize(curve, min_deflection=10 * geometry.thickness_t)
x = np.array([pt.x for pt in points])
y = np.array([pt.y for pt in points])
print(f"\n{label}: {len(points)} points, h^2 from {x[0]:.2e} to {x[-1]:.2e} m^2, "
      f"P/h from {y[0]:.3e} to {y[-1]:.3e} Pa/m")
