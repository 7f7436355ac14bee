"""Coupled bending / transversal-diffusion solver.

Semi-discrete system, in scaled variables on the flexural basis {phi_i} and
the per-node thickness grid:

    bending row   K u(t) + C pi(t) = F(t)
    pressure row  M d/dt pi - C^T d/dt u + D pi = G(t)

with
    K_ij = bend * int Cs(A^c rho(phi_j)) : rho(phi_i) A^c sqrt(a)
    (C pi)_i = couple * int (int z pi dz) (A^c : rho(phi_i)) sqrt(a)
    M = storage-weighted thickness mass per node, D = transversal stiffness,
    G = face flux data  (+V at the bottom face, -V at the top face).

The coupling block of the pressure row is exactly the transpose of C, so the
discrete energy identity mirrors the continuous one with the coupling terms
cancelling at machine precision.

Time stepping is a theta-scheme (implicit Euler by default, Crank-Nicolson
optional) solved monolithically: each ny-node thickness problem shares one
small factorized matrix, and its exact elimination leaves a fixed SPD (or
saddle-point, for the multiplier backend) system for the displacement that is
factorized once per run.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

__all__ = [
    "SolverError",
    "TimeSeries",
    "TractionTerm",
    "FluxTerm",
    "LoadProgram",
    "ShellState",
    "History",
    "CoupledSolver",
    "assemble_bending",
    "assemble_membrane",
    "assemble_rho_trace",
    "assemble_load_vector",
    "assemble_coupling",
    "assemble_pressure_source",
    "CouplingOperator",
    "static_initial_solve",
]


class SolverError(RuntimeError):
    pass


class TimeSeries:
    """Sampled time series with linear interpolation between samples."""

    def __init__(self, times, values):
        self.times = np.asarray(times, dtype=float)
        self.values = np.asarray(values, dtype=float)
        if self.times.ndim != 1 or self.times.size != self.values.shape[0]:
            raise ValueError("times and values must have matching leading length")

    def __call__(self, t):
        return np.interp(t, self.times, self.values)


def _as_time_function(x):
    if callable(x):
        return x
    if isinstance(x, (tuple, list)) and len(x) == 2:
        return TimeSeries(*x)
    value = float(x)
    return lambda t: value


@dataclass
class TractionTerm:
    """One separable traction contribution s(t) * g(y) (covariant components)."""

    time: object
    shape: object = (0.0, 0.0, 1.0)

    def __post_init__(self):
        self.time = _as_time_function(self.time)

    def spatial(self, pts):
        if callable(self.shape):
            return np.asarray(self.shape(pts), dtype=float)
        vec = np.asarray(self.shape, dtype=float)
        return np.broadcast_to(vec, pts.shape[:-1] + (3,)).copy()


@dataclass
class FluxTerm:
    """One separable normal-flux contribution s(t) * g(y), same V at both faces."""

    time: object
    shape: object = 1.0

    def __post_init__(self):
        self.time = _as_time_function(self.time)

    def spatial(self, pts):
        if callable(self.shape):
            return np.asarray(self.shape(pts), dtype=float)
        return np.full(pts.shape[:-1], float(self.shape))


@dataclass
class LoadProgram:
    """Surface tractions on both faces (already summed) and normal flux data.

    Compatibility requires zero data at t = 0; a nonzero static preload can be
    allowed explicitly for synthetic initial-value studies.
    """

    tractions: list = field(default_factory=list)
    fluxes: list = field(default_factory=list)
    allow_nonzero_initial: bool = False

    def validate(self, sample_pts):
        if self.allow_nonzero_initial:
            return []
        errs = []
        for i, term in enumerate(self.tractions):
            v0 = abs(term.time(0.0)) * float(np.abs(term.spatial(sample_pts)).max(initial=0.0))
            if v0 > 1e-12:
                errs.append(f"traction term {i} violates zero initial data: |P(0)| = {v0:.3e}")
        for i, term in enumerate(self.fluxes):
            v0 = abs(term.time(0.0)) * float(np.abs(term.spatial(sample_pts)).max(initial=0.0))
            if v0 > 1e-12:
                errs.append(f"flux term {i} violates V(0) = 0: |V(0)| = {v0:.3e}")
        return errs

    def traction(self, t, pts):
        out = np.zeros(pts.shape[:-1] + (3,))
        for term in self.tractions:
            out += term.time(t) * term.spatial(pts)
        return out

    def flux(self, t, pts):
        out = np.zeros(pts.shape[:-1])
        for term in self.fluxes:
            out += term.time(t) * term.spatial(pts)
        return out


@dataclass
class ShellState:
    """Simulation state: time, displacement coefficients, nodal pressure."""

    t: float
    u: np.ndarray
    pi: np.ndarray                     # (n_quad, n_thickness_nodes)
    multipliers: np.ndarray | None = None


# ---------------------------------------------------------------------------
# assembly
# ---------------------------------------------------------------------------

def assemble_bending(basis, coefs):
    """Bending stiffness K (sparse CSR), symmetric positive definite.

    Bases may carry a prebuilt closed-form matrix (``bending_matrix``); the
    generic path contracts the shell tensor with the bending strains.
    """
    if hasattr(basis, "bending_matrix"):
        return basis.bending_matrix(coefs)
    W = basis.weighted_measure
    A = basis.geometry.metric_con
    rows, cols, vals = [], [], []
    for el in basis.elements:
        if el.dofs.size == 0:
            continue
        Ael = A[el.sl]
        wel = W[el.sl]
        arho = np.einsum("qab,kqbc->kqac", Ael, el.rho)
        tr = np.einsum("kqaa->kq", arho)
        tc = 2.0 * coefs.mu_like * coefs.lam_like / (coefs.lam_like + 2.0 * coefs.mu_like)
        stress = 2.0 * coefs.mu_like * arho
        stress[:, :, 0, 0] += tc * tr
        stress[:, :, 1, 1] += tc * tr
        rhoa = np.einsum("kqab,qbc->kqac", el.rho, Ael)
        ke = coefs.bend * np.einsum("q,iqab,jqab->ij", wel, stress, rhoa)
        idx = el.dofs
        rows.append(np.repeat(idx, idx.size))
        cols.append(np.tile(idx, idx.size))
        vals.append(ke.ravel())
    K = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(basis.ndof, basis.ndof))
    asym = abs(K - K.T).max()
    scale = max(abs(K).max(), 1e-300)
    if asym > 1e-12 * scale:
        raise SolverError(f"bending matrix asymmetry {asym/scale:.2e}: "
                          "geometry/basis inconsistency")
    return K


def assemble_membrane(basis, coefs):
    """Membrane stiffness int Cs(A^c gamma(u)) : gamma(v) A^c sqrt(a) (no bend factor)."""
    W = basis.weighted_measure
    A = basis.geometry.metric_con
    rows, cols, vals = [], [], []
    for el in basis.elements:
        if el.dofs.size == 0:
            continue
        Ael = A[el.sl]
        wel = W[el.sl]
        ag = np.einsum("qab,kqbc->kqac", Ael, el.gamma)
        tr = np.einsum("kqaa->kq", ag)
        tc = 2.0 * coefs.mu_like * coefs.lam_like / (coefs.lam_like + 2.0 * coefs.mu_like)
        stress = 2.0 * coefs.mu_like * ag
        stress[:, :, 0, 0] += tc * tr
        stress[:, :, 1, 1] += tc * tr
        ga = np.einsum("kqab,qbc->kqac", el.gamma, Ael)
        ke = np.einsum("q,iqab,jqab->ij", wel, stress, ga)
        idx = el.dofs
        rows.append(np.repeat(idx, idx.size))
        cols.append(np.tile(idx, idx.size))
        vals.append(ke.ravel())
    return sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                         shape=(basis.ndof, basis.ndof))


def assemble_rho_trace(basis):
    """Sparse map R: displacement dofs -> A^c : rho(u) at the quadrature points."""
    if hasattr(basis, "rho_trace_matrix"):
        return basis.rho_trace_matrix()
    A = basis.geometry.metric_con
    rows, cols, vals = [], [], []
    for el in basis.elements:
        if el.dofs.size == 0:
            continue
        r = np.einsum("qab,kqab->kq", A[el.sl], el.rho)
        qidx = np.arange(el.sl.start, el.sl.stop)
        rows.append(np.tile(qidx, el.dofs.size))
        cols.append(np.repeat(el.dofs, qidx.size))
        vals.append(r.ravel())
    return sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                         shape=(basis.n_quad, basis.ndof))


def assemble_load_vector(basis, shape3):
    """Spatial load vector F_i = int phi_i . g sqrt(a) for a traction shape g."""
    if hasattr(basis, "load_vector"):
        return basis.load_vector(shape3)
    if callable(shape3):
        gvals = np.asarray(shape3(basis.quad_points), dtype=float)
    else:
        gvals = np.broadcast_to(np.asarray(shape3, dtype=float),
                                (basis.n_quad, 3)).copy()
    W = basis.weighted_measure
    out = np.zeros(basis.ndof)
    for el in basis.elements:
        if el.dofs.size == 0:
            continue
        fe = np.einsum("q,kqc,qc->k", W[el.sl], el.phi, gvals[el.sl])
        np.add.at(out, el.dofs, fe)
    return out


@dataclass
class CouplingOperator:
    """Pressure-moment coupling C and its exact transpose.

    (C pi)_i   = couple * sum_g W_g r_gi (zbar . pi_g)          (bending load)
    (C^T w)_gk = couple * W_g (R w)_g zbar_k                    (pressure source)
    """

    rho_trace: sp.csr_matrix
    weights: np.ndarray
    moment_weights: np.ndarray
    couple: float

    def apply_pressure(self, pi):
        mom = pi @ self.moment_weights
        return self.couple * (self.rho_trace.T @ (self.weights * mom))

    def apply_displacement(self, u):
        r = self.rho_trace @ u
        return self.couple * np.outer(self.weights * r, self.moment_weights)

    def to_dense(self):
        R = self.rho_trace.toarray()
        return self.couple * np.einsum("g,gi,k->igk", self.weights, R,
                                       self.moment_weights).reshape(
                                           R.shape[1], -1)


def assemble_coupling(basis, grid, coefs):
    """Coupling operator between bending dofs and the pressure grid."""
    if grid.n_nodes < 3:
        raise SolverError("pressure grid needs at least 3 thickness nodes")
    return CouplingOperator(rho_trace=assemble_rho_trace(basis),
                            weights=basis.weighted_measure,
                            moment_weights=grid.moment_weights,
                            couple=coefs.couple)


def assemble_pressure_source(basis, grid, coefs):
    """Strain-rate source operator of the pressure row, assembled independently.

    Returns the dense matrix S with S[(g, k), i] such that the pressure-row
    source for test function (g, k) is S @ du/dt.  By the energy identity this
    must equal the transpose of the dense coupling matrix; the independent
    quadrature loop below makes that a real check rather than a tautology.
    """
    W = basis.weighted_measure
    A = basis.geometry.metric_con
    nz = grid.n_nodes
    S = np.zeros((basis.n_quad * nz, basis.ndof))
    for el in basis.elements:
        for a, dof in enumerate(el.dofs):
            for jq, g in enumerate(range(el.sl.start, el.sl.stop)):
                r = float(np.tensordot(A[g], el.rho[a, jq], axes=2))
                S[g * nz:(g + 1) * nz, dof] += coefs.couple * W[g] * r * grid.moment_weights
    return S


# ---------------------------------------------------------------------------
# coupled solver
# ---------------------------------------------------------------------------

@dataclass
class History:
    """Recorded trajectory of a run."""

    times: np.ndarray
    u: np.ndarray                      # (nt, ndof)
    rho_trace: np.ndarray              # (nt, n_quad) values of A^c : rho(u)
    flux_nodes: np.ndarray             # (nt, n_quad) applied V at the nodes
    energy: dict                       # per-step columns, each length nt-1
    pi_final: np.ndarray
    pi_snapshots: dict
    multipliers: np.ndarray | None
    max_abs_thickness_mean: float
    dt: float

    @property
    def n_steps(self):
        return self.times.size - 1


class CoupledSolver:
    """Advances the coupled flexural/pressure system on a fixed basis."""

    def __init__(self, basis, grid, coefs, loads=None, dt=1e-2,
                 integrator="implicit_euler", prescribed=None, penalty=1.0):
        if dt <= 0:
            raise SolverError(f"dt must be positive, got {dt}")
        if integrator not in ("implicit_euler", "crank_nicolson"):
            raise SolverError(f"unknown integrator {integrator!r}")
        if basis.ndof == 0:
            raise SolverError("constrained displacement space is trivial: the shell "
                              "behaves as a generalized membrane and the flexural "
                              "model does not apply")
        self.basis = basis
        self.grid = grid
        self.coefs = coefs
        self.loads = loads or LoadProgram()
        self.dt = float(dt)
        self.theta = 1.0 if integrator == "implicit_euler" else 0.5
        self.integrator = integrator
        self.prescribed = prescribed
        self.penalty = float(penalty)

        if coefs.storage <= 0:
            raise SolverError("effective storage is zero (alpha = beta_g = 0): the "
                              "pressure equation has no time derivative; rejected")
        if abs(grid.half - coefs.half_thickness) > 1e-12 * max(1.0, coefs.half_thickness):
            raise SolverError(f"thickness grid half-width {grid.half} does not match "
                              f"the material half thickness {coefs.half_thickness}")

        self.W = basis.weighted_measure
        self.K = assemble_bending(basis, coefs)
        if basis.backend == "multiplier":
            self.K_row = (self.K + self.penalty * assemble_membrane(basis, coefs)).tocsr()
        else:
            self.K_row = self.K
        self.R = assemble_rho_trace(basis)
        self.G_rho = (self.R.T @ sp.diags(self.W) @ self.R).tocsr()
        self.coupling = CouplingOperator(self.R, self.W, grid.moment_weights, coefs.couple)

        self._spd_check()

        # thickness operators (plain; coefficients applied here)
        self.Mz = coefs.storage * grid.mass
        self.Dz = coefs.diffusion * grid.stiffness
        self._build_time_operators(self.dt)

        # separable load data
        pts = basis.quad_points
        errs = self.loads.validate(pts)
        if errs:
            raise SolverError("incompatible loads at t=0: " + "; ".join(errs))
        self._traction_vectors = [(term.time, assemble_load_vector(basis, term.shape))
                                  for term in self.loads.tractions]
        self._flux_vectors = [(term.time, term.spatial(pts)) for term in self.loads.fluxes]

        self._static_lu = None

    # -- operator setup ----------------------------------------------------

    def _spd_check(self):
        if self.basis.backend == "multiplier" or self.basis.ndof > 1500:
            return
        try:
            np.linalg.cholesky(self.K_row.toarray()
                               + 1e-14 * abs(self.K_row).max() * np.eye(self.basis.ndof))
        except np.linalg.LinAlgError as exc:
            raise SolverError("bending matrix is not positive definite: "
                              "geometry/basis inconsistency") from exc

    def _build_time_operators(self, dt):
        theta = self.theta
        T = self.Mz + theta * dt * self.Dz
        nz = self.grid.n_nodes
        ab = np.zeros((2, nz))
        ab[1] = np.diag(T)
        ab[0, 1:] = np.diag(T, 1)
        self._T_chol = scipy.linalg.cholesky_banded(ab, lower=False)
        self.Mz_minus = self.Mz - (1.0 - theta) * dt * self.Dz
        self._T_inv_moment = scipy.linalg.cho_solve_banded(
            (self._T_chol, False), self.grid.moment_weights)
        self.schur_scale = float(self.grid.moment_weights @ self._T_inv_moment)
        S = self.K_row + self.coefs.couple ** 2 * self.schur_scale * self.G_rho
        if self.basis.backend == "multiplier":
            B = self.basis.constraint
            nm = self.basis.n_multipliers
            full = sp.bmat([[S, B.T], [B, None]], format="csc")
            try:
                self._step_lu = spla.splu(full)
            except RuntimeError as exc:
                raise SolverError(
                    "monolithic saddle-point matrix is singular; the multiplier "
                    "space may be rank deficient on this mesh "
                    f"(ndof={self.basis.ndof}, multipliers={nm})") from exc
            self._n_mult = nm
        else:
            self._step_lu = spla.splu(S.tocsc())
            self._n_mult = 0
        self._dt_built = dt

    def _solve_displacement(self, rhs):
        if self._n_mult:
            full = np.concatenate([rhs, np.zeros(self._n_mult)])
            sol = self._step_lu.solve(full)
            return sol[:self.basis.ndof], sol[self.basis.ndof:]
        return self._step_lu.solve(rhs), None

    # -- loads --------------------------------------------------------------

    def load_vector(self, t):
        out = np.zeros(self.basis.ndof)
        for timef, vec in self._traction_vectors:
            out += timef(t) * vec
        return out

    def flux_nodes(self, t):
        out = np.zeros(self.basis.n_quad)
        for timef, vec in self._flux_vectors:
            out += timef(t) * vec
        return out

    # -- solves --------------------------------------------------------------

    def static_solve(self, F):
        """Solve the static bending problem K u = F (with constraint rows)."""
        if self._static_lu is None:
            if self._n_mult:
                B = self.basis.constraint
                full = sp.bmat([[self.K_row, B.T], [B, None]], format="csc")
            else:
                full = self.K_row.tocsc()
            try:
                self._static_lu = spla.splu(full)
            except RuntimeError as exc:
                raise SolverError("static bending matrix is singular") from exc
        if self._n_mult:
            sol = self._static_lu.solve(np.concatenate([F, np.zeros(self._n_mult)]))
            return sol[:self.basis.ndof], sol[self.basis.ndof:]
        return self._static_lu.solve(F), None

    def initial_state(self):
        """State at t = 0: zero pressure, static equilibrium under the t=0 loads."""
        pi0 = np.zeros((self.basis.n_quad, self.grid.n_nodes))
        if self.prescribed is not None:
            return ShellState(0.0, np.asarray(self.prescribed(0.0), dtype=float), pi0)
        F0 = self.load_vector(0.0)
        if np.abs(F0).max(initial=0.0) == 0.0:
            return ShellState(0.0, np.zeros(self.basis.ndof), pi0)
        u0, mult = self.static_solve(F0)
        return ShellState(0.0, u0, pi0, mult)

    def step(self, state, dt=None):
        """Advance one step; returns (new_state, stats dict)."""
        dt = self.dt if dt is None else float(dt)
        if dt != self._dt_built:
            self.dt = dt
            self._build_time_operators(dt)
        theta = self.theta
        t_new = state.t + dt
        v_old = self.flux_nodes(state.t)
        v_new = self.flux_nodes(t_new)
        v_eff = theta * v_new + (1.0 - theta) * v_old
        face = self.grid.face_vector

        rhs_known = state.pi @ self.Mz_minus + dt * np.outer(v_eff, face)
        known = scipy.linalg.cho_solve_banded((self._T_chol, False), rhs_known.T).T

        F_new = self.load_vector(t_new)
        if self.prescribed is not None:
            u_new = np.asarray(self.prescribed(t_new), dtype=float)
            mult = None
        else:
            rhs = (F_new
                   + self.coefs.couple ** 2 * self.schur_scale * (self.G_rho @ state.u)
                   - self.coupling.apply_pressure(known))
            u_new, mult = self._solve_displacement(rhs)
        dr = self.R @ (u_new - state.u)
        pi_new = known + self.coefs.couple * np.outer(dr, self._T_inv_moment)

        pi_star = theta * pi_new + (1.0 - theta) * state.pi
        diss = float(np.einsum("g,gi,gi->", self.W, pi_star @ self.Dz, pi_star))
        work_flux = float(self.W @ (v_eff * (pi_star[:, 0] - pi_star[:, -1])))
        work = float((u_new - state.u) @ F_new) / dt + work_flux
        e_el_new = 0.5 * float(u_new @ (self.K_row @ u_new))
        e_pr_new = 0.5 * float(np.einsum("g,gi,gi->", self.W, pi_new @ self.Mz, pi_new))
        e_el_old = 0.5 * float(state.u @ (self.K_row @ state.u))
        e_pr_old = 0.5 * float(np.einsum("g,gi,gi->", self.W, state.pi @ self.Mz, state.pi))
        stats = {
            "elastic_energy": e_el_new,
            "pressure_energy": e_pr_new,
            "dissipation": diss,
            "work": work,
            "residual": (e_el_new + e_pr_new - e_el_old - e_pr_old) / dt + diss - work,
            "thickness_mean": float(np.abs(pi_new @ self.grid.mean_weights).max(initial=0.0)),
        }
        return ShellState(t_new, u_new, pi_new, mult), stats

    def run(self, t_end, cadence=0, record=True):
        """March from the initial state to t_end; returns a :class:`History`."""
        n_steps = int(round(t_end / self.dt))
        if abs(n_steps * self.dt - t_end) > 1e-9 * max(1.0, t_end) or n_steps < 1:
            raise SolverError(f"t_end={t_end} is not a positive multiple of dt={self.dt}")
        state = self.initial_state()
        times = [0.0]
        us = [state.u.copy()]
        rhos = [np.asarray(self.R @ state.u)]
        fluxes = [self.flux_nodes(0.0)]
        energy = {k: [] for k in ("elastic_energy", "pressure_energy", "dissipation",
                                  "work", "residual", "thickness_mean")}
        snapshots = {}
        mean_max = float(np.abs(state.pi @ self.grid.mean_weights).max(initial=0.0))
        for n in range(n_steps):
            state, stats = self.step(state)
            mean_max = max(mean_max, stats["thickness_mean"])
            if record:
                times.append(state.t)
                us.append(state.u.copy())
                rhos.append(np.asarray(self.R @ state.u))
                fluxes.append(self.flux_nodes(state.t))
                for k in energy:
                    energy[k].append(stats[k])
                if cadence and (n + 1) % cadence == 0:
                    snapshots[n + 1] = state.pi.copy()
        self.final_state = state
        return History(times=np.array(times), u=np.array(us),
                       rho_trace=np.array(rhos), flux_nodes=np.array(fluxes),
                       energy={k: np.array(v) for k, v in energy.items()},
                       pi_final=state.pi.copy(), pi_snapshots=snapshots,
                       multipliers=state.multipliers,
                       max_abs_thickness_mean=mean_max, dt=self.dt)

    # -- norms ---------------------------------------------------------------

    def pressure_l2(self, pi):
        """L2(Omega) norm of a nodal pressure field (consistent thickness mass)."""
        return float(np.sqrt(np.einsum("g,gi,gi->", self.W, pi @ self.grid.mass, pi)))


def static_initial_solve(solver: CoupledSolver):
    """Displacement at t = 0 (zero under compatible loads)."""
    return solver.initial_state().u
