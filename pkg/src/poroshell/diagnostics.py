"""Post-processing: limit stress, bending moments, contact forces, energy.

The limit stress in the local contravariant frame has the closed form

    Q^T sigma Q = [[ -couple * pi * A^c - z * Cs(A^c rho(u)) A^c , 0 ],
                   [            0                               , 0 ]]

with couple = 2*mu_t*alpha/(lam_t + 2*mu_t) and Cs the shell elasticity
tensor; rows and columns bordering the normal direction vanish.  The same
stress follows from the limit three-dimensional strain

    g0 = [[ -z rho(u), 0 ],
          [ 0, alpha/(lam_t+2*mu_t) pi + z lam_t/(lam_t+2*mu_t) A^c:rho(u) ]]

through sigma = C(Q g0 Q^T) - alpha pi I with the full isotropic tensor C;
the test suite checks both routes against each other.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .material import full_tensor_apply, shell_tensor_apply

__all__ = [
    "UnavailableOutputError",
    "limit_stress",
    "limit_strain_matrix",
    "stress_from_limit_strain",
    "bending_moment",
    "contact_forces",
    "EnergyReport",
    "energy_balance",
    "tangential_equilibrium_residual",
]


class UnavailableOutputError(RuntimeError):
    """Requested output is not computed by the active backend."""


def limit_stress(rho_u, pi0, metric_con, dp, z3):
    """Limit stress (3x3) in the local contravariant frame at one point.

    rho_u: 2x2 bending strain, pi0: scaled pressure value, metric_con: A^c,
    z3: transversal coordinate in (-1/2, 1/2).
    """
    A = np.asarray(metric_con, dtype=float)
    rho_u = np.asarray(rho_u, dtype=float)
    couple = 2.0 * dp.mu_t * dp.alpha / (dp.lam_t + 2.0 * dp.mu_t)
    block = -couple * pi0 * A - z3 * shell_tensor_apply(A @ rho_u, dp) @ A
    out = np.zeros((3, 3))
    out[:2, :2] = block
    return out


def limit_strain_matrix(rho_u, pi0, metric_con, dp, z3):
    """Limit of the scaled 3D strain: bending part and the normal entry."""
    out = np.zeros((3, 3))
    out[:2, :2] = -z3 * np.asarray(rho_u, dtype=float)
    denom = dp.lam_t + 2.0 * dp.mu_t
    trace = float(np.tensordot(metric_con, rho_u, axes=2))
    out[2, 2] = dp.alpha / denom * pi0 + z3 * dp.lam_t / denom * trace
    return out


def stress_from_limit_strain(rho_u, pi0, q_local, metric_con, dp, z3):
    """Cartesian-frame limit stress via the full isotropic tensor.

    ``q_local`` is the 3x3 matrix of contravariant basis columns at the point.
    Independent route to :func:`limit_stress`:
    sigma = C(Q g0 Q^T) - alpha pi I.
    """
    Q = np.asarray(q_local, dtype=float)
    g0 = limit_strain_matrix(rho_u, pi0, metric_con, dp, z3)
    return full_tensor_apply(Q @ g0 @ Q.T, dp) - dp.alpha * pi0 * np.eye(3)


def bending_moment(rho_u, pressure_moment, metric_con, params):
    """Dimensional contact couple at one midsurface point.

    m = (ell^3/12) Cs_dim(A^c rho) A^c + (2 mu alpha/(lam+2 mu)) (int z p dz) A^c
    with rho the bending strain of the effective displacement and the pressure
    moment taken across the physical thickness.
    """
    A = np.asarray(metric_con, dtype=float)
    elastic = params.thickness ** 3 / 12.0 * (
        shell_tensor_apply(A @ np.asarray(rho_u, dtype=float), params.lam, params.mu) @ A)
    pore = (2.0 * params.mu * params.alpha / (params.lam + 2.0 * params.mu)
            * pressure_moment * A)
    return elastic + pore


def contact_forces(solver, state):
    """Membrane contact forces: the multiplier field of the constrained solve.

    Returns (centers, tensors) with one constant symmetric 2x2 tensor per
    element.  Only the multiplier backend computes these.
    """
    basis = solver.basis
    if basis.backend != "multiplier" or state.multipliers is None:
        raise UnavailableOutputError(
            "contact forces are the membrane multipliers; the reduced-basis "
            "backend enforces the constraint exactly and does not compute them")
    vals = np.asarray(state.multipliers, dtype=float).reshape(-1, 3)
    tensors = np.empty((vals.shape[0], 2, 2))
    tensors[:, 0, 0] = vals[:, 0]
    tensors[:, 1, 1] = vals[:, 1]
    tensors[:, 0, 1] = vals[:, 2]
    tensors[:, 1, 0] = vals[:, 2]
    centers = np.stack([basis.quad_points[el.sl].mean(axis=0)
                        for el in basis.elements])
    return centers, tensors


@dataclass
class EnergyReport:
    """Per-step energy bookkeeping of a run.

    residual is the defect of the discrete energy identity
    (E_new - E_old)/dt + dissipation - work; for the implicit Euler scheme it
    equals the (nonpositive-definite-free) numerical dissipation and scales
    linearly with dt on smooth data.
    """

    times: np.ndarray
    elastic: np.ndarray
    pressure: np.ndarray
    dissipation: np.ndarray
    work: np.ndarray
    residual: np.ndarray

    @property
    def max_abs_residual(self):
        return float(np.abs(self.residual).max(initial=0.0))

    @property
    def cumulative_residual(self):
        return float(np.sum(self.residual))

    @property
    def peak_power(self):
        return float(np.abs(self.work).max(initial=0.0))

    def rows(self):
        for k in range(self.residual.size):
            yield (self.times[k + 1], self.elastic[k], self.pressure[k],
                   self.dissipation[k], self.work[k], self.residual[k])


def energy_balance(history):
    """Energy report from a recorded :class:`poroshell.solver.History`."""
    e = history.energy
    return EnergyReport(times=history.times, elastic=e["elastic_energy"],
                        pressure=e["pressure_energy"], dissipation=e["dissipation"],
                        work=e["work"], residual=e["residual"])


def _recovered_multiplier_field(solver, state):
    """Per-element multiplier constants -> smooth nodal tensor field (flat meshes)."""
    from .strain import SurfaceTensorField

    basis = solver.basis
    nx, ny = basis.meta["n_elems"]
    (x0, x1), (y0, y1) = basis.chart.domain
    hx, hy = (x1 - x0) / nx, (y1 - y0) / ny
    vals = np.asarray(state.multipliers, dtype=float).reshape(nx, ny, 3)
    nodal = np.zeros((nx + 1, ny + 1, 3))
    count = np.zeros((nx + 1, ny + 1, 1))
    for ex in range(nx):
        for ey in range(ny):
            for dx in (0, 1):
                for dy in (0, 1):
                    nodal[ex + dx, ey + dy] += vals[ex, ey]
                    count[ex + dx, ey + dy] += 1.0
    nodal /= count

    def value(pts):
        pts = np.atleast_2d(pts)
        fx = np.clip((pts[:, 0] - x0) / hx, 0.0, nx - 1e-12)
        fy = np.clip((pts[:, 1] - y0) / hy, 0.0, ny - 1e-12)
        ix, iy = fx.astype(int), fy.astype(int)
        tx, ty = fx - ix, fy - iy
        v = ((1 - tx)[:, None] * (1 - ty)[:, None] * nodal[ix, iy]
             + tx[:, None] * (1 - ty)[:, None] * nodal[ix + 1, iy]
             + (1 - tx)[:, None] * ty[:, None] * nodal[ix, iy + 1]
             + tx[:, None] * ty[:, None] * nodal[ix + 1, iy + 1])
        out = np.empty(pts.shape[:-1] + (2, 2))
        out[:, 0, 0] = v[:, 0]
        out[:, 1, 1] = v[:, 1]
        out[:, 0, 1] = v[:, 2]
        out[:, 1, 0] = v[:, 2]
        return out

    return SurfaceTensorField(value, fd_step=min(hx, hy) / 4.0)


def tangential_equilibrium_residual(solver, state, sample_pts, load_t):
    """Residual of the tangential momentum balance on a flat chart.

    With zero curvature the first two equations of the differential form
    reduce to -n_ab|_b = (P+ + P-)_a; the multiplier field is recovered to a
    nodal tensor and its covariant divergence is compared to the applied
    tangential traction at the sample points.  Consistency (not accuracy) of
    the variational solution: the residual decreases under mesh refinement.
    """
    from .geometry import geometry_at
    from .strain import covariant_divergence

    field = _recovered_multiplier_field(solver, state)
    g = geometry_at(solver.basis.chart, np.atleast_2d(sample_pts), with_third=False)
    div = covariant_divergence(field, g)
    traction = solver.loads.traction(load_t, np.atleast_2d(sample_pts))[:, :2]
    return -div - traction
