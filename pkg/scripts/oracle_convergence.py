#!/usr/bin/env python3
"""Refinement study of the transversal pressure solver against the series.

Decoupled scenario (flexure held at zero, ramp flux at both faces): the
series solution is exact, so solver errors isolate the time and thickness
discretizations.  Prints an error table over dt and node counts and saves a
log-log picture.

Usage: python scripts/oracle_convergence.py [outdir]
"""

import os
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from poroshell import (CoupledSolver, FluxTerm, FormCoefficients, LoadProgram,
                       MaterialParams, ThicknessGrid, nondimensionalize,
                       plate_chart)
from poroshell.basis import plate_deflection_basis
from poroshell.oracle import spectral_pressure

OUT = sys.argv[1] if len(sys.argv) > 1 else "out_oracle"
T_END = 0.1   # mid-transient: both error sources alive

mat = MaterialParams(mu=1e9, lam=1e9, alpha=0.9, beta_g=5e-10, permeability=1e-14,
                     viscosity=1e-3, length=1.0, thickness=0.01)
dp = nondimensionalize(mat)
coefs = FormCoefficients.dimensionless(dp)
basis = plate_deflection_basis(plate_chart(), (2, 2), quad_order=2)

rows = []
for nz in (17, 33, 65):
    grid = ThicknessGrid(nz)
    for dt in (4e-3, 2e-3, 1e-3, 5e-4):
        loads = LoadProgram(fluxes=[FluxTerm(time=lambda t: t, shape=1.0)])
        solver = CoupledSolver(basis, grid, coefs, loads, dt=dt,
                               prescribed=lambda t: np.zeros(basis.ndof))
        hist = solver.run(T_END)
        series = spectral_pressure(hist.times.copy(), None, hist.times,
                                   grid.nodes, j_max=200, beta_bar=dp.beta_bar)
        ref = np.tile(series, (basis.n_quad, 1))
        err = solver.pressure_l2(hist.pi_final - ref) / solver.pressure_l2(ref)
        rows.append((nz, dt, err))
        print(f"nz={nz:3d}  dt={dt:7.1e}  rel L2 error={err:.3e}")

os.makedirs(OUT, exist_ok=True)
fig, ax = plt.subplots(figsize=(6, 4.5))
for nz in sorted({r[0] for r in rows}):
    sel = [(dt, e) for n, dt, e in rows if n == nz]
    ax.loglog([s[0] for s in sel], [s[1] for s in sel], "o-", label=f"nz={nz}")
dts = np.array([4e-3, 5e-4])
ax.loglog(dts, 0.25 * dts / dts[0] * max(r[2] for r in rows), "k--", lw=0.8,
          label="first order")
ax.set_xlabel("dt")
ax.set_ylabel("relative L2 error vs series")
ax.legend()
fig.tight_layout()
fig.savefig(os.path.join(OUT, "oracle_convergence.png"), dpi=150)
np.savetxt(os.path.join(OUT, "errors.csv"), np.array(rows),
           delimiter=",", header="nz,dt,rel_l2_error", comments="")
print(f"artifacts in {OUT}/")
