"""
Shape coefficients from the membrane solver
===========================================

The coefficients C1 and f are not universal constants: they come from the
large-deflection solution of a clamped rectangle. The solver minimizes the
membrane energy over a ladder of pressures, then fits the cubic law to the
centre deflections. Runs on a 33 x 33 grid to stay quick; the bundled table
uses 65 x 65.
"""

import time

from bulgekit.membrane_solver import SolverConfig, extract_coefficients, reference_case

config = SolverConfig(grid_nx=33, grid_ny=33, method="newton")

print(" b/a     C1      f     fit residual   seconds")
for ratio in (1.0, 1.5, 2.0, 3.0, 5.0, 8.0):
    start = time.perf_counter()
    fit = extract_coefficients(*reference_case(ratio, nu=0.3), config)
    print(f"{ratio:4.1f}  {fit.c1:6.3f}  {fit.f:6.3f}   {fit.relative_residual:.1e}"
          f"      {time.perf_counter() - start:5.1f}")

# C1 falls from about 3.4 to the strip value 2 and f from about 1.8 to
# 8/(6 * 1.3) = 1.026; both flatten out past b/a = 5.
