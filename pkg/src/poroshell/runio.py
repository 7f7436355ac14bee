"""Run orchestration and artifact export.

A run writes into its output directory:

    manifest.txt       echoed configuration, derived dimensionless block, version
    timeseries.csv     t, u_norm, pressure_l2, thickness_mean  (one row per step)
    energy.csv         t, elastic_energy, pressure_energy, dissipation, work, residual
    pressure_*.txt     snapshot grids: y1 y2 z3 pi
    stress_*.txt       snapshot grids: y1 y2 z3 s11 s12 s13 s22 s23 s33
    oracle_report.txt  relative solver-vs-series errors (with --oracle-check)

All numeric output uses repr-style shortest round-trip formatting with '.' as
the decimal separator, independent of locale; identical configurations yield
byte-identical files.
"""

from __future__ import annotations

import logging
import os

import numpy as np

from . import __version__
from .config import RunConfig, build_loads
from .material import FormCoefficients, nondimensionalize
from .solver import CoupledSolver
from .thickness import ThicknessGrid

log = logging.getLogger("poroshell")

__all__ = ["prepare", "execute", "export_timeseries", "export_energy"]


def _fmt(x):
    return repr(float(x))


def prepare(cfg: RunConfig):
    """Build (solver, metadata) from a validated configuration."""
    from . import geometry as geo
    from .basis import general_multiplier_basis, plate_deflection_basis
    from .cylinder import ClosedFormCylinderBasis, CylinderConfig

    mat = cfg.material_params()
    dp = nondimensionalize(mat)
    coefs = FormCoefficients.dimensionless(dp)

    if cfg.chart_kind == "cylinder":
        cyl = CylinderConfig(radius=cfg.chart_params["radius"],
                             axial_length=cfg.chart_params.get("axial_length", 1.0),
                             angle=cfg.chart_params["angle"])
        basis = ClosedFormCylinderBasis(cyl, cfg.n_elems,
                                        quad_theta=cfg.quad_order or 10, quad_z=8)
        chart = cyl.chart()
    else:
        if cfg.chart_kind == "plate":
            chart = geo.plate_chart(cfg.chart_params.get("width", 1.0),
                                    cfg.chart_params.get("height", 1.0))
        elif cfg.chart_kind == "wavy":
            chart = geo.wavy_chart(int(cfg.chart_params.get("seed", 0)),
                                   cfg.chart_params.get("amplitude", 0.15))
        else:
            chart = geo.tabulated_chart(cfg.chart_params["path"])
        geo.check_immersion(chart)
        n2 = (cfg.n_elems, cfg.n_elems)
        if cfg.backend == "reduced":
            basis = plate_deflection_basis(chart, n2, quad_order=cfg.quad_order or 4)
        else:
            basis = general_multiplier_basis(chart, n2, quad_order=cfg.quad_order or 3)

    grid = ThicknessGrid(cfg.n_thickness)
    loads = build_loads(cfg)
    solver = CoupledSolver(basis, grid, coefs, loads, cfg.dt,
                           integrator=cfg.integrator)
    meta = {"material": mat, "dimensionless": dp, "coefficients": coefs,
            "chart": chart}
    return solver, meta


def export_timeseries(history, path, storage=1.0):
    """Deterministic CSV of per-step scalars (header + one row per step)."""
    lines = ["t,u_norm,pressure_l2,thickness_mean"]
    e = history.energy
    nt = e["elastic_energy"].size
    for k in range(nt):
        u_norm = np.sqrt(max(2.0 * e["elastic_energy"][k], 0.0))
        pi_l2 = np.sqrt(max(2.0 * e["pressure_energy"][k] / storage, 0.0))
        lines.append(",".join([_fmt(history.times[k + 1]), _fmt(u_norm),
                               _fmt(pi_l2), _fmt(e["thickness_mean"][k])]))
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    return path


def export_energy(history, path):
    """Energy-identity CSV with the documented column contract."""
    e = history.energy
    lines = ["t,elastic_energy,pressure_energy,dissipation,work,residual"]
    for k in range(e["residual"].size):
        lines.append(",".join(_fmt(v) for v in (
            history.times[k + 1], e["elastic_energy"][k], e["pressure_energy"][k],
            e["dissipation"][k], e["work"][k], e["residual"][k])))
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    return path


def _write_pressure_snapshot(solver, pi, path):
    pts = solver.basis.quad_points
    nodes = solver.grid.nodes
    lines = ["# y1 y2 z3 pressure"]
    for g in range(pts.shape[0]):
        for k in range(nodes.size):
            lines.append(" ".join([_fmt(pts[g, 0]), _fmt(pts[g, 1]),
                                   _fmt(nodes[k]), _fmt(pi[g, k])]))
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _write_stress_snapshot(solver, state, dp, path):
    from .diagnostics import limit_stress

    basis = solver.basis
    pts = basis.quad_points
    rho = basis.rho_at_quad(state.u)
    A = basis.geometry.metric_con
    nz = solver.grid.n_nodes
    levels = sorted(set([0, nz // 4, nz // 2, (3 * nz) // 4, nz - 1]))
    lines = ["# y1 y2 z3 s11 s12 s13 s22 s23 s33"]
    for g in range(pts.shape[0]):
        for k in levels:
            s = limit_stress(rho[g], state.pi[g, k], A[g], dp, solver.grid.nodes[k])
            lines.append(" ".join(
                [_fmt(pts[g, 0]), _fmt(pts[g, 1]), _fmt(solver.grid.nodes[k]),
                 _fmt(s[0, 0]), _fmt(s[0, 1]), _fmt(s[0, 2]),
                 _fmt(s[1, 1]), _fmt(s[1, 2]), _fmt(s[2, 2])]))
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _write_manifest(cfg, meta, path):
    dp = meta["dimensionless"]
    lines = [f"poroshell {__version__}", "", "[config]"]
    skip = {"chart_params", "material", "source_path"}
    for key in sorted(vars(cfg)):
        if key in skip:
            continue
        lines.append(f"{key} = {getattr(cfg, key)}")
    for key in sorted(cfg.chart_params):
        lines.append(f"chart.{key} = {cfg.chart_params[key]}")
    for key in sorted(cfg.material):
        lines.append(f"material.{key} = {_fmt(cfg.material[key])}")
    lines += ["", "[dimensionless]"]
    for key in ("lam_t", "beta", "eps", "alpha", "terzaghi_time", "pressure_scale"):
        lines.append(f"{key} = {_fmt(getattr(dp, key))}")
    lines.append(f"beta_bar = {_fmt(dp.beta_bar)}")
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _oracle_report(solver, history, dp, modes, path):
    from .oracle import spectral_moment, spectral_pressure

    times = history.times
    v_hist = history.flux_nodes            # (nt, ng)
    s_hist = history.rho_trace
    pi_series = spectral_pressure(v_hist, s_hist, times, solver.grid.nodes,
                                  j_max=modes, beta_bar=dp.beta_bar,
                                  alpha=dp.alpha, lam_t=dp.lam_t, mu_t=dp.mu_t)
    mom_series = spectral_moment(v_hist, s_hist, times, j_max=modes,
                                 beta_bar=dp.beta_bar, alpha=dp.alpha,
                                 lam_t=dp.lam_t, mu_t=dp.mu_t)
    denom = max(solver.pressure_l2(pi_series), 1e-300)
    err_pi = solver.pressure_l2(history.pi_final - pi_series) / denom
    mom_solver = history.pi_final @ solver.grid.moment_weights
    scale = max(float(np.abs(mom_series).max()), 1e-300)
    err_mom = float(np.abs(mom_solver - mom_series).max()) / scale
    lines = ["# solver vs separation-of-variables series at final time",
             f"modes = {modes}",
             f"relative_l2_pressure_error = {_fmt(err_pi)}",
             f"max_relative_moment_error = {_fmt(err_mom)}"]
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    return err_pi, err_mom


def execute(cfg: RunConfig, output_dir=None, oracle_check=None, dt=None, t_end=None):
    """Validate, run, and write artifacts.  Returns the output directory."""
    if output_dir is not None:
        cfg.output_dir = output_dir
    if oracle_check is not None:
        cfg.oracle_check = oracle_check
    if dt is not None:
        cfg.dt = dt
    if t_end is not None:
        cfg.t_end = t_end
    cfg.validate()

    solver, meta = prepare(cfg)
    dp = meta["dimensionless"]
    log.info("running %s/%s: ndof=%d, quad=%d, nz=%d, dt=%g, t_end=%g",
             cfg.chart_kind, cfg.backend, solver.basis.ndof, solver.basis.n_quad,
             cfg.n_thickness, cfg.dt, cfg.t_end)
    history = solver.run(cfg.t_end, cadence=cfg.cadence)

    outdir = cfg.output_dir
    os.makedirs(outdir, exist_ok=True)
    _write_manifest(cfg, meta, os.path.join(outdir, "manifest.txt"))
    export_timeseries(history, os.path.join(outdir, "timeseries.csv"),
                      storage=meta["coefficients"].storage)
    export_energy(history, os.path.join(outdir, "energy.csv"))
    for step, pi in sorted(history.pi_snapshots.items()):
        _write_pressure_snapshot(solver, pi,
                                 os.path.join(outdir, f"pressure_{step:06d}.txt"))
    _write_pressure_snapshot(solver, history.pi_final,
                             os.path.join(outdir, "pressure_final.txt"))
    _write_stress_snapshot(solver, solver.final_state, dp,
                           os.path.join(outdir, "stress_final.txt"))
    if cfg.oracle_check:
        err_pi, err_mom = _oracle_report(solver, history, dp, cfg.oracle_modes,
                                         os.path.join(outdir, "oracle_report.txt"))
        log.info("oracle check: pressure %.3e, moment %.3e", err_pi, err_mom)
    log.info("artifacts written to %s", outdir)
    return outdir
