import numpy as np
import pytest
import scipy.linalg

from poroshell import geometry as geo
from poroshell.basis import general_multiplier_basis, plate_deflection_basis
from poroshell.hermite import gauss_rule
from poroshell.material import FormCoefficients, MaterialParams, nondimensionalize
from poroshell.oracle import spectral_pressure
from poroshell.solver import (CoupledSolver, FluxTerm, LoadProgram, SolverError,
                              TimeSeries, TractionTerm, assemble_bending,
                              assemble_coupling,
                              assemble_pressure_source, static_initial_solve)
from poroshell.thickness import ThicknessGrid

P = MaterialParams(mu=1e9, lam=1e9, alpha=0.9, beta_g=5e-10, permeability=1e-14,
                   viscosity=1e-3, length=1.0, thickness=0.01)
DP = nondimensionalize(P)
COEFS = FormCoefficients.dimensionless(DP)


def plate_setup(n=3, nz=17, quad=3):
    basis = plate_deflection_basis(geo.plate_chart(), (n, n), quad_order=quad)
    return basis, ThicknessGrid(nz)


# ---------------------------------------------------------------------------
# assembly
# ---------------------------------------------------------------------------

def test_plate_bending_matches_independent_quadrature():
    # classical plate form: (1/12) int Cs(Hess u) : Hess v over the rectangle,
    # re-integrated through field evaluation on an independent Gauss grid
    basis, _ = plate_setup(n=2, quad=4)
    K = assemble_bending(basis, COEFS).toarray()
    rng = np.random.default_rng(0)
    u, v = rng.normal(size=(2, basis.ndof))
    fu, fv = basis.displacement_field(u), basis.displacement_field(v)
    total = 0.0
    xg, wg = gauss_rule(6, 0.0, 0.5)
    for ex in range(2):
        for ey in range(2):
            xs = xg + 0.5 * ex
            ys = xg + 0.5 * ey
            pts = np.stack(np.meshgrid(xs, ys, indexing="ij"), axis=-1).reshape(-1, 2)
            w2 = np.outer(wg, wg).ravel()
            Hu = fu.hessian3(pts)
            Hv = fv.hessian3(pts)
            tc = 2.0 * COEFS.lam_like / (COEFS.lam_like + 2.0)
            stress = tc * np.trace(Hu, axis1=1, axis2=2)[:, None, None] * np.eye(2) + 2.0 * Hu
            total += np.einsum("q,qab,qab->", w2, stress, Hv) / 12.0
    assert abs(u @ K @ v - total) < 1e-10 * max(abs(total), 1.0)


def test_coupling_moment_examples():
    basis, grid = plate_setup()
    coupling = assemble_coupling(basis, grid, COEFS)
    rng = np.random.default_rng(1)
    # constant-in-thickness pressure: zero moment, zero bending load
    pi_const = np.repeat(rng.normal(size=(basis.n_quad, 1)), grid.n_nodes, axis=1)
    assert np.abs(pi_const @ grid.moment_weights).max() < 1e-14
    assert np.abs(coupling.apply_pressure(pi_const)).max() < 1e-12
    # pi = z * s: moment is s/12 (quadrature reproduces int z^2 dz exactly)
    s = rng.normal(size=basis.n_quad)
    pi_lin = np.outer(s, grid.nodes)
    assert np.abs(pi_lin @ grid.moment_weights - s / 12.0).max() < 1e-14


def test_coupling_transpose_exact():
    basis, grid = plate_setup(n=2, nz=5, quad=2)
    coupling = assemble_coupling(basis, grid, COEFS)
    S = assemble_pressure_source(basis, grid, COEFS)
    C = coupling.to_dense()
    assert np.abs(C - S.T).max() <= 1e-12 * max(np.abs(C).max(), 1e-30)
    # adjointness on random vectors
    rng = np.random.default_rng(2)
    w = rng.normal(size=basis.ndof)
    pi = rng.normal(size=(basis.n_quad, grid.n_nodes))
    lhs = w @ coupling.apply_pressure(pi)
    rhs = np.sum(coupling.apply_displacement(w) * pi)
    assert abs(lhs - rhs) <= 1e-12 * max(abs(lhs), 1e-30)


def test_bending_spd_guard():
    basis, grid = plate_setup(n=2)
    K = assemble_bending(basis, COEFS)
    assert (K != K.T).nnz == 0 or abs(K - K.T).max() <= 1e-12 * abs(K).max()


# ---------------------------------------------------------------------------
# stepping
# ---------------------------------------------------------------------------

def test_zero_loads_stay_identically_zero():
    basis, grid = plate_setup()
    solver = CoupledSolver(basis, grid, COEFS, LoadProgram(), dt=1e-2)
    hist = solver.run(0.1)
    assert np.abs(hist.u).max() == 0.0
    assert np.abs(hist.pi_final).max() == 0.0
    for col in hist.energy.values():
        assert np.abs(col).max() == 0.0


def test_static_initial_solve_zero_under_compatible_loads():
    basis, grid = plate_setup()
    loads = LoadProgram(tractions=[TractionTerm(time=lambda t: t, shape=(0, 0, 1.0))])
    solver = CoupledSolver(basis, grid, COEFS, loads, dt=1e-2)
    assert np.abs(static_initial_solve(solver)).max() == 0.0


def test_static_solve_with_preload_override():
    basis, grid = plate_setup()
    loads = LoadProgram(tractions=[TractionTerm(time=lambda t: 1.0, shape=(0, 0, 1.0))],
                        allow_nonzero_initial=True)
    solver = CoupledSolver(basis, grid, COEFS, loads, dt=1e-2)
    state = solver.initial_state()
    F = solver.load_vector(0.0)
    resid = solver.K_row @ state.u - F
    assert np.abs(resid).max() <= 1e-10 * np.abs(F).max()


def test_incompatible_initial_loads_rejected():
    basis, grid = plate_setup()
    loads = LoadProgram(tractions=[TractionTerm(time=lambda t: 1.0, shape=(0, 0, 1.0))])
    with pytest.raises(SolverError, match="t=0"):
        CoupledSolver(basis, grid, COEFS, loads, dt=1e-2)


def test_zero_storage_rejected():
    basis, grid = plate_setup()
    import dataclasses

    dead = dataclasses.replace(COEFS, storage=0.0)
    with pytest.raises(SolverError, match="storage"):
        CoupledSolver(basis, grid, dead, LoadProgram(), dt=1e-2)


def test_alpha_zero_decouples():
    import dataclasses

    basis, grid = plate_setup()
    coefs0 = dataclasses.replace(COEFS, couple=0.0)
    loads = LoadProgram(
        tractions=[TractionTerm(time=lambda t: t, shape=(0, 0, 1.0))],
        fluxes=[FluxTerm(time=lambda t: t, shape=1.0)])
    solver = CoupledSolver(basis, grid, coefs0, loads, dt=5e-3)
    hist = solver.run(0.05)
    # displacement solves the static problem at each step
    for k, t in enumerate(hist.times):
        F = solver.load_vector(t)
        u_static, _ = solver.static_solve(F)
        assert np.abs(hist.u[k] - u_static).max() <= 1e-12 * max(np.abs(u_static).max(), 1e-30)
    # pressure equals the pure-diffusion run (no strain source)
    solver2 = CoupledSolver(basis, grid, coefs0,
                            LoadProgram(fluxes=loads.fluxes), dt=5e-3)
    hist2 = solver2.run(0.05)
    assert np.abs(hist.pi_final - hist2.pi_final).max() < 1e-14


def test_prescribed_zero_displacement_matches_series():
    basis, grid = plate_setup(n=2, nz=64, quad=2)
    loads = LoadProgram(fluxes=[FluxTerm(time=lambda t: t, shape=1.0)])
    solver = CoupledSolver(basis, grid, COEFS, loads, dt=1e-3,
                           prescribed=lambda t: np.zeros(basis.ndof))
    hist = solver.run(1.0)
    po = spectral_pressure(hist.times.copy(), None, hist.times, grid.nodes,
                           j_max=200, beta_bar=DP.beta_bar)
    pi_series = np.tile(po, (basis.n_quad, 1))
    err = solver.pressure_l2(hist.pi_final - pi_series) / solver.pressure_l2(pi_series)
    assert err < 1e-3


def _semi_discrete_exact(grid, storage, t, rate=1.0):
    """Exact solution of storage*M pi' + D pi = t*rate*face for the ramp flux."""
    lam, V = scipy.linalg.eigh(grid.stiffness, storage * grid.mass)
    g = V.T @ (rate * grid.face_vector)
    c = np.empty_like(g)
    for i, l in enumerate(lam):
        if l < 1e-12:
            c[i] = 0.5 * g[i] * t ** 2
        else:
            c[i] = g[i] * (t / l - (1.0 - np.exp(-l * t)) / l ** 2)
    return V @ c


@pytest.mark.parametrize("integrator,order", [("implicit_euler", 1), ("crank_nicolson", 2)])
def test_time_integration_order(integrator, order):
    basis, grid = plate_setup(n=2, nz=33, quad=2)
    t_end = 0.25
    exact = _semi_discrete_exact(grid, COEFS.storage, t_end)
    errs = []
    for dt in (t_end / 8, t_end / 16):
        loads = LoadProgram(fluxes=[FluxTerm(time=lambda t: t, shape=1.0)])
        solver = CoupledSolver(basis, grid, COEFS, loads, dt=dt,
                               integrator=integrator,
                               prescribed=lambda t: np.zeros(basis.ndof))
        hist = solver.run(t_end)
        errs.append(np.abs(hist.pi_final[0] - exact).max())
    observed = np.log2(errs[0] / errs[1])
    assert abs(observed - order) < 0.35


@pytest.mark.parametrize("integrator", ["implicit_euler", "crank_nicolson"])
def test_thickness_mean_invariant_coupled_run(integrator):
    basis, grid = plate_setup(n=2, nz=17)
    loads = LoadProgram(
        tractions=[TractionTerm(time=lambda t: np.sin(t), shape=(0, 0, 1.0))],
        fluxes=[FluxTerm(time=lambda t: t, shape=lambda p: 1.0 + 0.5 * p[:, 0])])
    solver = CoupledSolver(basis, grid, COEFS, loads, dt=2e-3, integrator=integrator)
    hist = solver.run(0.2)
    assert hist.max_abs_thickness_mean < 1e-12
    assert np.abs(hist.u[-1]).max() > 0.0
    assert (hist.energy["dissipation"] >= 0.0).all()


def test_crank_nicolson_coupled_matches_implicit_euler_limit():
    # both integrators converge to the same trajectory as dt -> 0
    basis, grid = plate_setup(n=2, nz=17)

    def run(integrator, dt):
        loads = LoadProgram(
            tractions=[TractionTerm(time=lambda t: np.sin(t), shape=(0, 0, 1.0))],
            fluxes=[FluxTerm(time=lambda t: t, shape=1.0)])
        solver = CoupledSolver(basis, grid, COEFS, loads, dt=dt, integrator=integrator)
        return solver, solver.run(0.1)

    s_cn, h_cn = run("crank_nicolson", 5e-3)
    _, h_ie = run("implicit_euler", 2.5e-4)
    gap = s_cn.pressure_l2(h_cn.pi_final - h_ie.pi_final) / s_cn.pressure_l2(h_ie.pi_final)
    assert gap < 2e-3
    assert np.abs(h_cn.u[-1] - h_ie.u[-1]).max() <= 1e-2 * np.abs(h_ie.u[-1]).max()


def test_energy_identity_residual_scaling():
    basis, grid = plate_setup(n=2, nz=17)

    def scenario(dt):
        loads = LoadProgram(
            tractions=[TractionTerm(time=lambda t: np.sin(2 * np.pi * t), shape=(0, 0, 1.0))],
            fluxes=[FluxTerm(time=lambda t: t, shape=1.0)])
        solver = CoupledSolver(basis, grid, COEFS, loads, dt=dt)
        return solver.run(0.2)

    h1, h2 = scenario(2e-3), scenario(1e-3)
    assert (h1.energy["dissipation"] >= 0.0).all()
    r1 = np.abs(h1.energy["residual"]).max()
    r2 = np.abs(h2.energy["residual"]).max()
    assert r1 <= 5 * 2e-3 * np.abs(h1.energy["work"]).max()
    assert 1.5 < r1 / r2 < 2.5


def test_determinism_bitwise():
    def run():
        basis, grid = plate_setup(n=2)
        loads = LoadProgram(
            tractions=[TractionTerm(time=lambda t: t, shape=(0, 0, 1.0))],
            fluxes=[FluxTerm(time=lambda t: t, shape=1.0)])
        solver = CoupledSolver(basis, grid, COEFS, loads, dt=5e-3)
        return solver.run(0.05)

    h1, h2 = run(), run()
    assert (h1.u == h2.u).all()
    assert (h1.pi_final == h2.pi_final).all()


def test_timeseries_interpolation_loads():
    ts = TimeSeries([0.0, 1.0, 2.0], [0.0, 2.0, 0.0])
    assert ts(0.5) == 1.0
    basis, grid = plate_setup(n=2)
    loads = LoadProgram(tractions=[TractionTerm(time=ts, shape=(0, 0, 1.0))])
    solver = CoupledSolver(basis, grid, COEFS, loads, dt=0.25)
    F_half = solver.load_vector(0.5)
    F_one = solver.load_vector(1.0)
    assert np.abs(2.0 * F_half - F_one).max() < 1e-14


def test_multiplier_backend_matches_reduced_on_plate():
    chart = geo.plate_chart()
    grid = ThicknessGrid(9)
    loads = LoadProgram(
        tractions=[TractionTerm(time=lambda t: t, shape=(0, 0, 1.0))],
        fluxes=[FluxTerm(time=lambda t: t, shape=1.0)])
    bm = general_multiplier_basis(chart, (4, 4), quad_order=3)
    br = plate_deflection_basis(chart, (4, 4), quad_order=3)
    sm = CoupledSolver(bm, grid, COEFS, loads, dt=5e-3)
    sr = CoupledSolver(br, grid, COEFS, loads, dt=5e-3)
    hm, hr = sm.run(0.05), sr.run(0.05)
    pts = chart.sample_grid(5)
    wm = bm.displacement_field(hm.u[-1]).value(pts)[:, 2]
    wr = br.displacement_field(hr.u[-1]).value(pts)[:, 2]
    assert np.abs(wm - wr).max() <= 1e-10 * np.abs(wr).max()
    assert np.abs(bm.constraint @ hm.u[-1]).max() < 1e-12


def test_trivial_space_rejected():
    # clamping everything on a 1-element plate leaves no dofs
    with pytest.raises(ValueError, match="empty|trivial"):
        plate_deflection_basis(geo.plate_chart(), (1, 1))


def test_step_with_dt_override_refactorizes():
    basis, grid = plate_setup(n=2, nz=9)
    loads = LoadProgram(fluxes=[FluxTerm(time=lambda t: t, shape=1.0)])
    solver = CoupledSolver(basis, grid, COEFS, loads, dt=1e-2)
    state = solver.initial_state()
    state, _ = solver.step(state)
    after_override, _ = solver.step(state, dt=5e-3)
    assert abs(after_override.t - 0.015) < 1e-12
    # a solver built at the overridden dt advances the same intermediate state identically
    fresh = CoupledSolver(basis, grid, COEFS, loads, dt=5e-3)
    expected, _ = fresh.step(state)
    assert np.abs(after_override.pi - expected.pi).max() < 1e-15


def test_multiplier_backend_partial_clamping_runs():
    chart = geo.plate_chart()
    basis = general_multiplier_basis(chart, (4, 4), quad_order=3,
                                     clamped_edges=("y1min", "y2min"))
    grid = ThicknessGrid(9)
    loads = LoadProgram(tractions=[TractionTerm(time=lambda t: t, shape=(0, 0, 1.0))])
    solver = CoupledSolver(basis, grid, COEFS, loads, dt=5e-3)
    hist = solver.run(0.05)
    field = basis.displacement_field(hist.u[-1])
    free_corner = np.array([[0.95, 0.95]])
    clamped_corner = np.array([[0.02, 0.02]])
    assert np.abs(field.value(free_corner)).max() > np.abs(field.value(clamped_corner)).max()
    assert np.abs(basis.constraint @ hist.u[-1]).max() < 1e-12
