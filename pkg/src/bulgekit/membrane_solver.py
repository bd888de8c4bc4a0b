"""Large-deflection (Foppl) membrane solver for clamped rectangles.

The total potential energy of a pre-stressed membrane under a uniform dead
pressure is minimized over the in-plane displacements ``u, v`` and the
deflection ``w`` on a uniform grid. Gradients are one-sided differences taken
at the four corners of every grid cell and averaged (equivalently, the mean of
the two diagonal triangulations of the grid), which reduces to the classical
5-point Laplacian in the linear limit and keeps the full symmetry group of the
rectangle.

The solver is used to recompute the shape coefficients C1(b/a) and f(nu, b/a)
of the load-deflection model from first principles.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import __version__
from .core_model import (MaterialParams, MembraneGeometry, PressureDeflectionCurve,
                         strip_f, vlassak_nix_square_f)
from .errors import NotConverged, PoorFit

# Geometry and material of the reference coefficient study: 1 mm wide,
# 100 nm thick membranes, E = 220 GPa.
REFERENCE_HALF_WIDTH = 0.5e-3
REFERENCE_THICKNESS = 100e-9
REFERENCE_E = 220e9
REFERENCE_SIGMA0 = 420e6


@dataclass(frozen=True)
class SolverConfig:
    grid_nx: int = 65
    grid_ny: int = 65
    max_iterations: int = 20000
    gradient_tolerance: float = 1e-8
    pressure_steps: Optional[tuple] = None
    symmetry_reduction: bool = True
    method: str = "ncg"
    n_pressure_steps: int = 12
    deflection_span: tuple = (0.5, 500.0)  # h_center / t covered by the default ladder

    def __post_init__(self):
        if self.grid_nx < 17 or self.grid_ny < 17:
            raise ValueError("grid dimensions must be >= 17")
        if not 0 < self.gradient_tolerance <= 1e-4:
            raise ValueError("gradient_tolerance must lie in (0, 1e-4]")
        if self.symmetry_reduction and (self.grid_nx % 2 == 0 or self.grid_ny % 2 == 0):
            raise ValueError("symmetry reduction needs odd grid dimensions")
        if self.method not in ("newton", "ncg"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.pressure_steps is not None:
            steps = tuple(float(p) for p in self.pressure_steps)
            if any(p <= 0 for p in steps):
                raise ValueError("pressure steps must be positive")
            object.__setattr__(self, "pressure_steps", steps)
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")

    def config_hash(self) -> str:
        payload = json.dumps(asdict(self), sort_keys=True, default=str)
        return hashlib.sha256(payload.encode()).hexdigest()[:12]


@dataclass
class DeflectionField:
    """Converged (or best-effort) displacement fields on the full grid.

    Arrays have shape ``(grid_nx, grid_ny)`` with ``x`` along the short side;
    boundary nodes are zero. ``energy_history`` holds the (dimensionless)
    energy after every accepted minimizer step.
    """

    x: np.ndarray
    y: np.ndarray
    w: np.ndarray
    u: np.ndarray
    v: np.ndarray
    converged: bool
    residual_norm: float
    pressure: float
    iterations: int = 0
    energy_history: list = field(default_factory=list)

    @property
    def center_deflection(self) -> float:
        return float(self.w[self.w.shape[0] // 2, self.w.shape[1] // 2])


class _Discretization:
    """Sparse operators and energy evaluation for one grid, geometry and material."""

    def __init__(self, geometry: MembraneGeometry, material: MaterialParams,
                 config: SolverConfig):
        self.geometry = geometry
        self.material = material
        self.config = config
        a, b = geometry.half_width_a, geometry.half_length_b
        nx, ny = config.grid_nx, config.grid_ny
        self.nx, self.ny = nx, ny
        # Lengths are scaled by a, energies by E * t * a**2.
        self.hx = 2.0 / (nx - 1)
        self.hy = 2.0 * (b / a) / (ny - 1)
        self.s = material.residual_stress_sigma0 / material.youngs_modulus_E
        self.nu = material.poisson_nu
        self.k = 1.0 / (1.0 - self.nu**2)
        self.qw = self.hx * self.hy / 4.0
        self.node_weight = self.hx * self.hy

        interior = np.zeros((nx, ny), dtype=bool)
        interior[1:-1, 1:-1] = True
        self.interior = interior
        cols = np.flatnonzero(interior.ravel())
        self.n = cols.size

        dx = sp.diags([-1.0, 1.0], [0, 1], shape=(nx - 1, nx)) / self.hx
        dy = sp.diags([-1.0, 1.0], [0, 1], shape=(ny - 1, ny)) / self.hy
        pick_x = [sp.eye(nx - 1, nx, k=c) for c in (0, 1)]
        pick_y = [sp.eye(ny - 1, ny, k=c) for c in (0, 1)]
        gx, gy = [], []
        for ci in (0, 1):
            for cj in (0, 1):
                gx.append(sp.kron(dx, pick_y[cj]))
                gy.append(sp.kron(pick_x[ci], dy))
        self.Gx = sp.vstack(gx).tocsc()[:, cols].tocsr()
        self.Gy = sp.vstack(gy).tocsc()[:, cols].tocsr()
        self.nq = self.Gx.shape[0]

        if config.symmetry_reduction:
            self.S = self._symmetry_map()
        else:
            self.S = None
        self.ndof = 3 * self.n if self.S is None else self.S.shape[1]

    def _symmetry_map(self):
        """Sparse map from quarter-domain unknowns to full interior unknowns."""
        nx, ny = self.nx, self.ny
        ic, jc = (nx - 1) // 2, (ny - 1) // 2
        ii, jj = np.nonzero(self.interior)
        mi, mj = ic + np.abs(ii - ic), jc + np.abs(jj - jc)
        rows, cols, vals = [], [], []
        offset = 0
        # u is odd in x, v is odd in y, w is even in both.
        for comp, keep in enumerate((ii > ic, jj > jc, np.ones_like(ii, dtype=bool))):
            owners = np.flatnonzero(keep & (ii >= ic) & (jj >= jc))
            index = {(ii[p], jj[p]): offset + q for q, p in enumerate(owners)}
            for p in range(ii.size):
                if comp == 0:
                    sign = np.sign(ii[p] - ic)
                elif comp == 1:
                    sign = np.sign(jj[p] - jc)
                else:
                    sign = 1.0
                if sign == 0:
                    continue
                rows.append(comp * self.n + p)
                cols.append(index[(mi[p], mj[p])])
                vals.append(float(sign))
            offset += owners.size
        return sp.csr_matrix((vals, (rows, cols)), shape=(3 * self.n, offset))

    def expand(self, z):
        return z if self.S is None else self.S @ z

    def reduce(self, z_full):
        """Project a full vector onto the reduced unknowns (exact for symmetric fields)."""
        if self.S is None:
            return z_full
        counts = np.asarray(abs(self.S).sum(axis=0)).ravel()
        return (self.S.T @ z_full) / counts

    def _strains(self, zf):
        n = self.n
        u, v, w = zf[:n], zf[n:2 * n], zf[2 * n:]
        wx, wy = self.Gx @ w, self.Gy @ w
        exx = self.Gx @ u + 0.5 * wx**2
        eyy = self.Gy @ v + 0.5 * wy**2
        gxy = self.Gy @ u + self.Gx @ v + wx * wy
        return wx, wy, exx, eyy, gxy

    def _resultants(self, exx, eyy, gxy):
        s, k, nu = self.s, self.k, self.nu
        nxx = s + k * (exx + nu * eyy)
        nyy = s + k * (eyy + nu * exx)
        nxy = 0.5 * k * (1.0 - nu) * gxy
        return nxx, nyy, nxy

    def energy(self, z, load):
        zf = self.expand(z)
        _, _, exx, eyy, gxy = self._strains(zf)
        s, k, nu = self.s, self.k, self.nu
        dens = (s * (exx + eyy) + 0.5 * k * (exx**2 + eyy**2 + 2.0 * nu * exx * eyy)
                + 0.25 * k * (1.0 - nu) * gxy**2)
        work = load * self.node_weight * np.sum(zf[2 * self.n:])
        return self.qw * np.sum(dens) - work, abs(work)

    def gradient(self, z, load):
        zf = self.expand(z)
        wx, wy, exx, eyy, gxy = self._strains(zf)
        nxx, nyy, nxy = self._resultants(exx, eyy, gxy)
        q = self.qw
        GxT, GyT = self.Gx.T, self.Gy.T
        gu = GxT @ (q * nxx) + GyT @ (q * nxy)
        gv = GyT @ (q * nyy) + GxT @ (q * nxy)
        gw = (GxT @ (q * (nxx * wx + nxy * wy)) + GyT @ (q * (nyy * wy + nxy * wx))
              - load * self.node_weight)
        g = np.concatenate([gu, gv, gw])
        return g if self.S is None else self.S.T @ g

    def load_norm(self, load):
        f = np.zeros(3 * self.n)
        f[2 * self.n:] = load * self.node_weight
        if self.S is not None:
            f = self.S.T @ f
        return float(np.linalg.norm(f))

    def hessian(self, z, tension_only=False):
        """Sparse Hessian; ``tension_only`` drops compressive geometric terms (PSD)."""
        zf = self.expand(z)
        wx, wy, exx, eyy, gxy = self._strains(zf)
        nxx, nyy, nxy = self._resultants(exx, eyy, gxy)
        Gx, Gy = self.Gx, self.Gy
        zero = sp.csr_matrix(Gx.shape)
        Wx, Wy = sp.diags(wx), sp.diags(wy)
        r1 = sp.hstack([Gx, zero, Wx @ Gx])
        r2 = sp.hstack([zero, Gy, Wy @ Gy])
        r3 = sp.hstack([Gy, Gx, Wy @ Gx + Wx @ Gy])
        q, k, nu = self.qw, self.k, self.nu
        H = q * k * (r1.T @ r1 + r2.T @ r2 + nu * (r1.T @ r2 + r2.T @ r1)
                     + 0.5 * (1.0 - nu) * (r3.T @ r3))
        if tension_only:
            nxx, nyy, nxy = np.maximum(nxx, 0.0), np.maximum(nyy, 0.0), np.zeros_like(nxy)
        geo = (Gx.T @ sp.diags(q * nxx) @ Gx + Gy.T @ sp.diags(q * nyy) @ Gy
               + Gx.T @ sp.diags(q * nxy) @ Gy + Gy.T @ sp.diags(q * nxy) @ Gx)
        n = self.n
        geo_full = sp.bmat([[sp.csr_matrix((2 * n, 2 * n)), None],
                            [None, geo]]).tocsr()
        H = (H + geo_full).tocsc()
        if self.S is not None:
            H = (self.S.T @ H @ self.S).tocsc()
        return H

    def to_field(self, z, converged, residual, pressure, iterations, history):
        zf = self.expand(z)
        a = self.geometry.half_width_a
        n = self.n
        grids = []
        for comp in range(3):
            g = np.zeros((self.nx, self.ny))
            g[self.interior] = zf[comp * n:(comp + 1) * n] * a
            grids.append(g)
        x = np.linspace(-a, a, self.nx)
        y = np.linspace(-self.geometry.half_length_b, self.geometry.half_length_b, self.ny)
        return DeflectionField(x=x, y=y, u=grids[0], v=grids[1], w=grids[2],
                               converged=converged, residual_norm=residual,
                               pressure=pressure, iterations=iterations,
                               energy_history=history)

    def from_field(self, fld: DeflectionField):
        a = self.geometry.half_width_a
        zf = np.concatenate([fld.u[self.interior], fld.v[self.interior],
                             fld.w[self.interior]]) / a
        return self.reduce(zf)


def _accept(e_new, e_old, slope, step, scale):
    """Armijo test, relaxed to floating-point resolution of the energy sum."""
    if e_new <= e_old + 1e-4 * step * slope:
        return True
    tiny = 1e-13 * scale
    return abs(step * slope) < tiny and e_new <= e_old + tiny


def _newton(disc, z, load, config, history):
    tol = config.gradient_tolerance
    fnorm = disc.load_norm(load)
    e, work = disc.energy(z, load)
    history.append(e)
    rel = math.inf
    for it in range(config.max_iterations):
        g = disc.gradient(z, load)
        rel = np.linalg.norm(g) / fnorm
        if rel <= tol:
            return z, True, rel, it
        d = -spla.spsolve(disc.hessian(z), g)
        slope = float(g @ d)
        if not (np.all(np.isfinite(d)) and slope < 0):
            d = -spla.spsolve(disc.hessian(z, tension_only=True), g)
            slope = float(g @ d)
        step = 1.0
        scale = abs(e) + work
        for _ in range(60):
            e_new, work_new = disc.energy(z + step * d, load)
            if _accept(e_new, e, slope, step, scale):
                break
            step *= 0.5
        else:
            return z, False, rel, it
        z = z + step * d
        e, work = e_new, work_new
        history.append(e)
    g = disc.gradient(z, load)
    rel = np.linalg.norm(g) / fnorm
    return z, rel <= tol, rel, config.max_iterations


def _ncg(disc, z, load, config, history):
    """Preconditioned Polak-Ribiere conjugate gradients.

    The step length comes from a secant estimate on the directional derivative
    and is then backtracked until the energy does not increase.
    """
    tol = config.gradient_tolerance
    fnorm = disc.load_norm(load)
    precond = 1.0 / np.maximum(disc.hessian(z, tension_only=True).diagonal(), 1e-300)
    e, work = disc.energy(z, load)
    history.append(e)
    g = disc.gradient(z, load)
    pg = precond * g
    d = -pg
    for it in range(config.max_iterations):
        rel = np.linalg.norm(g) / fnorm
        if rel <= tol:
            return z, True, rel, it
        slope = float(g @ d)
        if slope >= 0 or (it > 0 and it % disc.ndof == 0):
            d = -pg
            slope = float(g @ d)
        trial = 1.0
        slope_trial = float(disc.gradient(z + trial * d, load) @ d)
        curvature = (slope_trial - slope) / trial
        step = -slope / curvature if curvature > 0 else trial
        scale = abs(e) + work
        for _ in range(60):
            e_new, work_new = disc.energy(z + step * d, load)
            if _accept(e_new, e, slope, step, scale):
                break
            step *= 0.5
        else:
            return z, False, rel, it
        z = z + step * d
        e, work = e_new, work_new
        history.append(e)
        g_new = disc.gradient(z, load)
        pg_new = precond * g_new
        beta = max(0.0, float(g_new @ (pg_new - pg)) / float(g @ pg))
        d = -pg_new + beta * d
        g, pg = g_new, pg_new
    rel = np.linalg.norm(g) / fnorm
    return z, rel <= tol, rel, config.max_iterations


def _solve(disc, pressure, z0):
    load = pressure * disc.geometry.half_width_a / (
        disc.material.youngs_modulus_E * disc.geometry.thickness_t)
    z = np.zeros(disc.ndof) if z0 is None else z0
    history = []
    minimizer = _newton if disc.config.method == "newton" else _ncg
    z, converged, rel, iters = minimizer(disc, z, load, disc.config, history)
    return z, converged, rel, iters, history


def solve_membrane(geometry: MembraneGeometry, material: MaterialParams, pressure: float,
                   config: SolverConfig = SolverConfig(),
                   initial: Optional[DeflectionField] = None,
                   raise_on_failure=True) -> DeflectionField:
    """Equilibrium displacement fields of a clamped membrane at one pressure.

    Args:
        initial: warm start (a field computed on the same grid).
        raise_on_failure: raise :class:`NotConverged` (with the field attached)
            instead of returning a field flagged ``converged=False``.
    """
    if not material.residual_stress_sigma0 > 0:
        raise ValueError("the membrane solver needs a tensile residual stress")
    if not pressure > 0:
        raise ValueError("pressure must be positive")
    disc = _Discretization(geometry, material, config)
    z0 = None if initial is None else disc.from_field(initial)
    z, converged, rel, iters, history = _solve(disc, pressure, z0)
    fld = disc.to_field(z, converged, rel, pressure, iters, history)
    if not converged and raise_on_failure:
        raise NotConverged(f"minimizer stopped at relative gradient {rel:.3e} after "
                           f"{iters} iterations (P = {pressure:g} Pa)", fld)
    return fld


def _estimate_stiffness(geometry, material):
    """Rough (linear, cubic) stiffness used only to scale the pressure ladder."""
    a, t = geometry.half_width_a, geometry.thickness_t
    r, nu = geometry.aspect_ratio(), material.poisson_nu
    c1 = 2.0 + 1.39 / r**2
    f = strip_f(nu) + (vlassak_nix_square_f(nu) - strip_f(nu)) / r**2
    return (c1 * t * material.residual_stress_sigma0 / a**2,
            f * t / a**4 * material.biaxial_modulus)


def default_pressure_ladder(geometry, material, config=SolverConfig()):
    """Log-spaced pressures whose centre deflections span ``config.deflection_span`` * t."""
    lin, cub = _estimate_stiffness(geometry, material)
    lo, hi = (r * geometry.thickness_t for r in config.deflection_span)
    return tuple(np.geomspace(lin * lo + cub * lo**3, lin * hi + cub * hi**3,
                              config.n_pressure_steps))


def pressure_sweep(geometry, material, config=SolverConfig()):
    """Solve the pressure ladder in increasing order with warm starts.

    Returns the centre pressure-deflection curve and the list of fields.
    """
    pressures = config.pressure_steps or default_pressure_ladder(geometry, material, config)
    pressures = sorted(pressures)
    disc = _Discretization(geometry, material, config)
    z = None
    fields = []
    for p in pressures:
        z, converged, rel, iters, history = _solve(disc, p, z)
        fld = disc.to_field(z, converged, rel, p, iters, history)
        if not converged:
            raise NotConverged(f"minimizer stopped at relative gradient {rel:.3e} "
                               f"(P = {p:g} Pa)", fld)
        fields.append(fld)
    curve = PressureDeflectionCurve([f.pressure for f in fields],
                                    [f.center_deflection for f in fields],
                                    label=f"b/a={geometry.aspect_ratio():g}")
    return curve, fields


@dataclass(frozen=True)
class CoefficientFit:
    c1: float
    f: float
    linear: float
    cubic: float
    relative_residual: float
    curve: PressureDeflectionCurve


def fit_cubic_model(curve: PressureDeflectionCurve):
    """Least-squares fit of ``P = A*h + B*h**3`` with residuals relative to ``h``.

    Returns ``(A, B, rms relative residual of P)``.
    """
    p, h = curve.pressure, curve.deflection
    keep = h > 0
    p, h = p[keep], h[keep]
    x = h**2
    x_scale = float(np.max(x))
    design = np.column_stack([np.ones_like(h), x / x_scale])
    y = p / h
    y_scale = float(np.max(np.abs(y)))
    (lin, cub), *_ = np.linalg.lstsq(design, y / y_scale, rcond=None)
    lin, cub = lin * y_scale, cub * y_scale / x_scale
    model = lin * h + cub * h**3
    rel = float(np.sqrt(np.mean(((model - p) / p) ** 2)))
    return float(lin), float(cub), rel


def extract_coefficients(geometry: MembraneGeometry, material: MaterialParams,
                         config: SolverConfig = SolverConfig()) -> CoefficientFit:
    """Recompute (C1, f) for one geometry from a solver pressure sweep."""
    curve, _ = pressure_sweep(geometry, material, config)
    lin, cub, rel = fit_cubic_model(curve)
    if rel > 0.01:
        raise PoorFit(f"cubic load-deflection model misfits the solver data "
                      f"(relative rms residual {rel:.2%})")
    a, t = geometry.half_width_a, geometry.thickness_t
    c1 = lin * a**2 / (t * material.residual_stress_sigma0)
    f = cub * a**4 * (1.0 - material.poisson_nu) / (material.youngs_modulus_E * t)
    return CoefficientFit(c1, f, lin, cub, rel, curve)


def reference_case(aspect_ratio, nu=0.3, sigma0=REFERENCE_SIGMA0, E=REFERENCE_E):
    """Geometry and material of the reference study at a given b/a and nu."""
    geometry = MembraneGeometry(REFERENCE_HALF_WIDTH, REFERENCE_HALF_WIDTH * aspect_ratio,
                                REFERENCE_THICKNESS)
    return geometry, MaterialParams(E, nu, sigma0)


@dataclass
class CoefficientTable:
    entries: list
    provenance: str = ""

    C1_BOUNDS = (1.5, 4.0)
    F_BOUNDS = (0.5, 2.5)

    def __post_init__(self):
        self.entries = sorted(tuple(float(v) for v in e) for e in self.entries)
        for r, nu, c1, f in self.entries:
            if not (self.C1_BOUNDS[0] <= c1 <= self.C1_BOUNDS[1]
                    and self.F_BOUNDS[0] <= f <= self.F_BOUNDS[1]):
                raise ValueError(f"coefficient entry out of bounds: b/a={r}, nu={nu}, "
                                 f"C1={c1}, f={f}")

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            if self.provenance:
                fh.write(f"# {self.provenance}\n")
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["aspect_ratio", "nu", "c1", "f"])
            for entry in self.entries:
                writer.writerow([repr(v) for v in entry])

    @classmethod
    def from_csv(cls, path):
        provenance = ""
        rows = []
        with open(path, newline="") as fh:
            lines = []
            for line in fh:
                if line.startswith("#"):
                    provenance = provenance or line[1:].strip()
                else:
                    lines.append(line)
        for row in csv.DictReader(lines):
            rows.append((row["aspect_ratio"], row["nu"], row["c1"], row["f"]))
        return cls(rows, provenance)


def _table_entry(args):
    ratio, nu, config = args
    geometry, material = reference_case(ratio, nu)
    fit = extract_coefficients(geometry, material, config)
    return (ratio, nu, fit.c1, fit.f)


def build_coefficient_table(aspect_ratios: Sequence[float], nus: Sequence[float],
                            config: SolverConfig = SolverConfig(),
                            workers: int = 1) -> CoefficientTable:
    """Solver-derived (C1, f) over the cross product of aspect ratios and nu.

    Entries are computed on the reference geometry (1 mm wide, 100 nm thick,
    E = 220 GPa). Any failing entry aborts the whole table.
    """
    if not len(aspect_ratios) or not len(nus):
        raise ValueError("aspect_ratios and nus must be non-empty")
    if list(aspect_ratios) != sorted(aspect_ratios) or list(nus) != sorted(nus):
        raise ValueError("aspect_ratios and nus must be sorted")
    jobs = [(float(r), float(n), config) for r in aspect_ratios for n in nus]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            entries = list(pool.map(_table_entry, jobs))
    else:
        entries = [_table_entry(job) for job in jobs]
    provenance = f"bulgekit-solver {__version__} config={config.config_hash()}"
    return CoefficientTable(entries, provenance)
