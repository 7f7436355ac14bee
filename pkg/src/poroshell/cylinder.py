"""Closed-form cylindrical specialization.

On the cylinder (R cos t, R sin t, z), clamped along the two generatrices
t = 0 and t = d (0 < d < 2*pi), the inextensional space is parametrized by
two one-dimensional generator fields u_z(t) and w_t(t):

    v_z = u_z(t),
    v_t = -(z/R) u_z'(t) + w_t(t),
    v_r =  (z/R) u_z''(t) - w_t'(t),

with u_z clamped to order 3 and w_t to order 2 at both ends.  The bending
strain then reads

    rho = [[0,                -(u_z'' + u_z)'/R                         ],
           [-(u_z''+u_z)'/R,  -(z/R)(u_z''+u_z)'' + (w_t''+w_t)'        ]]

and after exact integration over the axial coordinate the elastic form
separates into two SPD one-dimensional blocks with material coefficient
c_m = 4*mu*(lam + mu)/(lam + 2*mu):

    a_z(u, v) = bend * int (1/R^3) [ c_m L^3/(12 R^2) (u''+u)'' (v''+v)''
                                     + 4*mu*L (u''+u)' (v''+v)' ] dt
    a_w(o, w) = bend * int (L/R^3) c_m (o''+o)' (w''+w)' dt

This module assembles that system directly from the displayed formulas; it is
an independent code path from the general assembler and is cross-checked
against it by the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .geometry import cylinder_chart
from .hermite import HermiteSpace1D, gauss_rule
from .strain import CallableDisplacement

__all__ = [
    "CylinderConfigError",
    "CylinderConfig",
    "reconstruct_displacement",
    "ClosedFormCylinderBasis",
    "reduced_assemble",
    "run_cylinder_scenario",
]


class CylinderConfigError(ValueError):
    pass


@dataclass(frozen=True)
class CylinderConfig:
    """Cylindrical shell: radius, axial length, angular extent, clamped generatrices."""

    radius: float
    axial_length: float
    angle: float

    def __post_init__(self):
        if self.radius <= 0:
            raise CylinderConfigError(f"radius must be positive, got {self.radius}")
        if self.axial_length <= 0:
            raise CylinderConfigError(f"axial length must be positive, got {self.axial_length}")
        if not 0 < self.angle < 2 * np.pi:
            raise CylinderConfigError(
                f"angular extent must lie strictly inside (0, 2*pi), got {self.angle}; "
                "the fully clamped closed cylinder admits no inextensional bending "
                "(generalized membrane regime) and is outside this model")

    def chart(self):
        return cylinder_chart(self.radius, self.axial_length, self.angle)


def reconstruct_displacement(vz_derivs, wt_derivs, radius):
    """Midsurface displacement from the two generator fields.

    ``vz_derivs``/``wt_derivs`` map derivative order to a callable of the
    angular coordinate (orders 0..4 and 0..3; order 4 of u_z is needed only
    for bending-strain evaluation).  Returns covariant components
    (v_1, v_2, v_3) = (v_z, R v_t, -v_r).
    """
    R = float(radius)

    def vz(r, t):
        return np.asarray(vz_derivs[r](t), dtype=float)

    def wt(r, t):
        return np.asarray(wt_derivs[r](t), dtype=float)

    def value(p):
        z, t = p[..., 0], p[..., 1]
        v1 = vz(0, t)
        v2 = R * (-(z / R) * vz(1, t) + wt(0, t))
        v3 = -((z / R) * vz(2, t) - wt(1, t))
        return np.stack([v1, v2, v3], axis=-1)

    def gradient(p):
        z, t = p[..., 0], p[..., 1]
        out = np.zeros(p.shape[:-1] + (3, 2))
        out[..., 0, 1] = vz(1, t)
        out[..., 1, 0] = -vz(1, t)
        out[..., 1, 1] = -z * vz(2, t) + R * wt(1, t)
        out[..., 2, 0] = -vz(2, t) / R
        out[..., 2, 1] = -(z / R) * vz(3, t) + wt(2, t)
        return out

    def hessian3(p):
        z, t = p[..., 0], p[..., 1]
        out = np.zeros(p.shape[:-1] + (2, 2))
        out[..., 0, 1] = -vz(3, t) / R
        out[..., 1, 0] = out[..., 0, 1]
        out[..., 1, 1] = -(z / R) * vz(4, t) + wt(3, t)
        return out

    return CallableDisplacement(value, gradient, hessian3)


class ClosedFormCylinderBasis:
    """Reduced cylinder system assembled from the separated 1D formulas.

    Quadrature grid, dof ordering and generator spaces are identical to
    :func:`poroshell.basis.cylinder_reduced_basis`, so the two assembly routes
    are directly comparable; here every matrix entry comes from the separated
    closed-form integrals rather than from chart geometry plus strain
    operators.
    """

    backend = "reduced"
    constraint = None
    n_multipliers = 0

    def __init__(self, config: CylinderConfig, n_elems=16, quad_theta=10, quad_z=8):
        self.config = config
        R, L, d = config.radius, config.axial_length, config.angle
        self.vz = HermiteSpace1D(0.0, d, n_elems, 3)
        self.wt = HermiteSpace1D(0.0, d, n_elems, 2)
        self.ndof = self.vz.ndof + self.wt.ndof
        self.n_theta_elems = n_elems
        self.theta_ref, self.theta_wref = gauss_rule(quad_theta)
        self.zq, self.zw = gauss_rule(quad_z, -L / 2, L / 2)
        self.quad_theta = quad_theta
        self.quad_z = quad_z

        pts, wts = [], []
        for e in range(n_elems):
            th = self.vz.a + (e + self.theta_ref) * self.vz.h
            pts.append(np.stack(np.meshgrid(self.zq, th, indexing="ij"),
                                axis=-1).reshape(-1, 2))
            wts.append((self.zw[:, None] * (self.theta_wref * self.vz.h)[None, :]).ravel())
        self.quad_points = np.concatenate(pts)
        self.quad_weights = np.concatenate(wts)
        self.weighted_measure = self.quad_weights * R   # sqrt(a) = R
        self.n_quad = self.quad_points.shape[0]

    # -- closed-form operators ------------------------------------------------

    def bending_matrix(self, coefs):
        R, L = self.config.radius, self.config.axial_length
        mu, lam = coefs.mu_like, coefs.lam_like
        cm = 4.0 * mu * (lam + mu) / (lam + 2.0 * mu)
        th_w = np.tile(self.theta_wref * self.vz.h, self.n_theta_elems)

        def block(space, op_hi, op_lo, hi_coef, lo_coef):
            nd = space.ndof
            mat = np.zeros((nd, nd))
            for e in range(space.n_elems):
                loc, glob = space.element_dofs(e)
                hi = op_hi(space, loc)
                ke = hi_coef * np.einsum("q,iq,jq->ij", self.theta_wref * space.h, hi, hi)
                if op_lo is not None:
                    lo = op_lo(space, loc)
                    ke += lo_coef * np.einsum("q,iq,jq->ij", self.theta_wref * space.h, lo, lo)
                mat[np.ix_(glob, glob)] += ke
            return mat

        def d2_plus_id_d2(space, loc):
            # (b'' + b)'' = b'''' + b''
            return space.local_shapes(self.theta_ref, 4)[loc] + \
                space.local_shapes(self.theta_ref, 2)[loc]

        def d2_plus_id_d1(space, loc):
            # (b'' + b)' = b''' + b'
            return space.local_shapes(self.theta_ref, 3)[loc] + \
                space.local_shapes(self.theta_ref, 1)[loc]

        az = block(self.vz, d2_plus_id_d2, d2_plus_id_d1,
                   coefs.bend * cm * L ** 3 / (12.0 * R ** 5),
                   coefs.bend * 4.0 * mu * L / R ** 3)
        aw = block(self.wt, d2_plus_id_d1, None,
                   coefs.bend * cm * L / R ** 3, 0.0)
        K = np.zeros((self.ndof, self.ndof))
        K[:self.vz.ndof, :self.vz.ndof] = az
        K[self.vz.ndof:, self.vz.ndof:] = aw
        return sp.csr_matrix(K)

    def rho_trace_matrix(self):
        """A^c : rho at the quadrature points: (1/R^2) rho_tt from the closed forms."""
        R = self.config.radius
        nzq, ntq = self.quad_z, self.quad_theta
        rows, cols, vals = [], [], []
        for e in range(self.n_theta_elems):
            base = e * nzq * ntq
            locz, globz = self.vz.element_dofs(e)
            hi = self.vz.local_shapes(self.theta_ref, 4)[locz] + \
                self.vz.local_shapes(self.theta_ref, 2)[locz]    # (k, ntq)
            for iz, z in enumerate(self.zq):
                qidx = base + iz * ntq + np.arange(ntq)
                r = -(z / R ** 3) * hi
                rows.append(np.tile(qidx, globz.size))
                cols.append(np.repeat(globz, ntq))
                vals.append(r.ravel())
            locw, globw = self.wt.element_dofs(e)
            lo = self.wt.local_shapes(self.theta_ref, 3)[locw] + \
                self.wt.local_shapes(self.theta_ref, 1)[locw]
            for iz in range(nzq):
                qidx = base + iz * ntq + np.arange(ntq)
                r = lo / R ** 2
                rows.append(np.tile(qidx, globw.size))
                cols.append(np.repeat(self.vz.ndof + globw, ntq))
                vals.append(r.ravel())
        return sp.csr_matrix((np.concatenate(vals),
                              (np.concatenate(rows), np.concatenate(cols))),
                             shape=(self.n_quad, self.ndof))

    def load_vector(self, shape3):
        """Traction load from the separated right-hand sides.

        ``shape3`` gives covariant components; physical components on the
        cylinder are P_z = g1, P_t = R g2, P_r = -g3.  The axial integrals
        int P dz and int P z dz use this basis's axial quadrature.
        """
        R = self.config.radius
        if callable(shape3):
            gfun = shape3
        else:
            vec = np.asarray(shape3, dtype=float)
            gfun = lambda p: np.broadcast_to(vec, p.shape[:-1] + (3,)).copy()
        out = np.zeros(self.ndof)
        for e in range(self.n_theta_elems):
            th = self.vz.a + (e + self.theta_ref) * self.vz.h
            pts = np.stack(np.meshgrid(self.zq, th, indexing="ij"), axis=-1).reshape(-1, 2)
            g = gfun(pts).reshape(self.quad_z, self.quad_theta, 3)
            pz = g[..., 0]
            pt = R * g[..., 1]
            pr = -g[..., 2]
            i_z0 = self.zw @ pz                 # int P_z dz        (ntq,)
            i_t1 = (self.zw * self.zq) @ pt     # int P_t z dz
            i_r1 = (self.zw * self.zq) @ pr     # int P_r z dz
            i_t0 = self.zw @ pt
            i_r0 = self.zw @ pr
            wq = self.theta_wref * self.vz.h

            locz, globz = self.vz.element_dofs(e)
            b0 = self.vz.local_shapes(self.theta_ref, 0)[locz]
            b1 = self.vz.local_shapes(self.theta_ref, 1)[locz]
            b2 = self.vz.local_shapes(self.theta_ref, 2)[locz]
            fz = np.einsum("q,iq->i", wq, R * i_z0 * b0 - i_t1 * b1 + i_r1 * b2)
            np.add.at(out, globz, fz)

            locw, globw = self.wt.element_dofs(e)
            c0 = self.wt.local_shapes(self.theta_ref, 0)[locw]
            c1 = self.wt.local_shapes(self.theta_ref, 1)[locw]
            fw = np.einsum("q,iq->i", wq, R * (i_t0 * c0 - i_r0 * c1))
            np.add.at(out, globw + self.vz.ndof, fw)
        return out

    def displacement_field(self, coeffs):
        cz = np.asarray(coeffs[:self.vz.ndof], dtype=float)
        cw = np.asarray(coeffs[self.vz.ndof:], dtype=float)
        return reconstruct_displacement(
            {r: (lambda t, r=r: self.vz.evaluate(cz, t, r)) for r in range(5)},
            {r: (lambda t, r=r: self.wt.evaluate(cw, t, r)) for r in range(4)},
            self.config.radius)

    def rho_at_quad(self, coeffs):
        """Bending strain of the reconstructed field at the quadrature points."""
        R = self.config.radius
        cz = np.asarray(coeffs[:self.vz.ndof], dtype=float)
        cw = np.asarray(coeffs[self.vz.ndof:], dtype=float)
        z, th = self.quad_points[:, 0], self.quad_points[:, 1]
        hi = self.vz.evaluate(cz, th, 4) + self.vz.evaluate(cz, th, 2)
        mid = self.vz.evaluate(cz, th, 3) + self.vz.evaluate(cz, th, 1)
        lo = self.wt.evaluate(cw, th, 3) + self.wt.evaluate(cw, th, 1)
        out = np.zeros((self.n_quad, 2, 2))
        out[:, 0, 1] = -mid / R
        out[:, 1, 0] = out[:, 0, 1]
        out[:, 1, 1] = -(z / R) * hi + lo
        return out

    @property
    def geometry(self):
        """Geometry cache at the quadrature points (built on first use)."""
        if not hasattr(self, "_geometry"):
            from .geometry import geometry_at

            self._geometry = geometry_at(self.config.chart(), self.quad_points)
        return self._geometry


def reduced_assemble(config, params, n_elems=16, quad_theta=10, quad_z=8,
                     dimensionless=False):
    """Assemble the separated cylinder system in dimensional form.

    Returns (basis, coefficients, stiffness) with the stiffness block-diagonal
    over the two generator families.  ``params`` is a
    :class:`poroshell.material.MaterialParams`; pass ``dimensionless=True``
    together with :class:`DimensionlessParams` to assemble the scaled twin.
    """
    from .material import FormCoefficients

    basis = ClosedFormCylinderBasis(config, n_elems, quad_theta, quad_z)
    coefs = (FormCoefficients.dimensionless(params) if dimensionless
             else FormCoefficients.dimensional(params))
    return basis, coefs, basis.bending_matrix(coefs)


def run_cylinder_scenario(config, params, loads, dt, t_end, n_elems=16,
                          n_thickness=33, quad_theta=10, quad_z=8,
                          integrator="implicit_euler", path="closed_form",
                          dimensionless=False, cadence=0):
    """Advance the coupled cylinder problem and return (solver, history).

    ``path='closed_form'`` uses the separated 1D assembly of this module;
    ``path='general'`` routes the identical generator basis through the
    general chart/strain/assembly pipeline.  Both paths share quadrature and
    dof ordering, so their outputs are directly comparable.
    """
    from .material import FormCoefficients
    from .solver import CoupledSolver
    from .thickness import ThicknessGrid

    coefs = (FormCoefficients.dimensionless(params) if dimensionless
             else FormCoefficients.dimensional(params))
    if path == "closed_form":
        basis = ClosedFormCylinderBasis(config, n_elems, quad_theta, quad_z)
    elif path == "general":
        from .basis import cylinder_reduced_basis

        basis = cylinder_reduced_basis(config.chart(), n_elems, quad_theta, quad_z)
    else:
        raise ValueError(f"unknown path {path!r}")
    grid = ThicknessGrid(n_thickness, half=coefs.half_thickness)
    solver = CoupledSolver(basis, grid, coefs, loads, dt, integrator=integrator)
    history = solver.run(t_end, cadence=cadence)
    return solver, history
