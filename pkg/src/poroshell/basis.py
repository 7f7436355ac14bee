"""Discrete bases for the constrained flexural displacement space.

The coupled model lives on clamped midsurface displacements with vanishing
membrane strain.  Three constructions are provided:

* ``plate_deflection_basis``   -- on a flat chart the constrained space is
  (0, 0, v3) with v3 clamped; v3 is discretized by C^1 bicubic Hermite
  rectangles (tensor products of 1D cubic Hermite elements).

* ``cylinder_reduced_basis``   -- on a cylindrical chart clamped along two
  generatrices the constrained space is parametrized by two 1D generator
  fields: an axial-profile field with clamped-to-order-3 ends (C^3 septic
  Hermite elements) and a tangential-rotation field with clamped-to-order-2
  ends (C^2 quintic Hermite).  The midsurface field is reconstructed from the
  generators so the membrane strain vanishes identically.

* ``general_multiplier_basis`` -- on arbitrary charts: biquadratic tangential
  components, bicubic Hermite normal component, and a per-element constant
  symmetric tensor multiplier enforcing the membrane constraint weakly.

Every basis evaluates its functions (value, gradient, normal Hessian) at the
assembly quadrature points; bending and membrane strains are then produced by
the generic strain operators, so all backends share one strain code path.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .geometry import geometry_at
from .hermite import HermiteSpace1D, LagrangeSpace1D, gauss_rule
from .strain import bending_strain_arrays, membrane_strain_arrays

__all__ = [
    "FlexuralBasis",
    "plate_deflection_basis",
    "cylinder_reduced_basis",
    "general_multiplier_basis",
    "TensorSpace2D",
]


@dataclass
class ElementBlock:
    """Basis data local to one assembly element."""

    dofs: np.ndarray          # (k,) global dof indices
    sl: slice                 # slice into the global quadrature arrays
    phi: np.ndarray           # (k, q, 3) covariant components
    rho: np.ndarray           # (k, q, 2, 2) bending strain
    gamma: np.ndarray         # (k, q, 2, 2) membrane strain


@dataclass
class FlexuralBasis:
    """A finite-dimensional subspace of the constrained displacement space."""

    backend: str
    chart: object
    ndof: int
    quad_points: np.ndarray
    quad_weights: np.ndarray  # plain quadrature weights, without sqrt(a)
    geometry: object
    elements: list
    constraint: sp.csr_matrix | None = None
    n_multipliers: int = 0
    meta: dict = field(default_factory=dict)

    @property
    def n_quad(self):
        return self.quad_points.shape[0]

    @property
    def weighted_measure(self):
        """Quadrature weights including the area element sqrt(a)."""
        return self.quad_weights * self.geometry.sqrt_a

    def max_gamma(self):
        """Largest membrane strain entry over all basis functions (constraint check)."""
        worst = 0.0
        for el in self.elements:
            if el.gamma.size:
                worst = max(worst, float(np.abs(el.gamma).max()))
        return worst

    def rho_at_quad(self, coeffs):
        """Bending strain of the field with the given coefficients, (n_quad, 2, 2)."""
        coeffs = np.asarray(coeffs, dtype=float)
        out = np.zeros((self.n_quad, 2, 2))
        for el in self.elements:
            if el.dofs.size:
                out[el.sl] += np.einsum("k,kqab->qab", coeffs[el.dofs], el.rho)
        return out

    def gamma_at_quad(self, coeffs):
        """Membrane strain of the field with the given coefficients, (n_quad, 2, 2)."""
        coeffs = np.asarray(coeffs, dtype=float)
        out = np.zeros((self.n_quad, 2, 2))
        for el in self.elements:
            if el.dofs.size:
                out[el.sl] += np.einsum("k,kqab->qab", coeffs[el.dofs], el.gamma)
        return out

    def displacement_field(self, coeffs):
        """Callable displacement field for the given coefficients, if supported."""
        maker = self.meta.get("field_maker")
        if maker is None:
            raise NotImplementedError(f"{self.backend} basis has no field reconstruction")
        return maker(np.asarray(coeffs, dtype=float))


def _finalize_elements(raw_elements, geometry):
    """Compute rho/gamma for each element through the generic strain operators."""
    out = []
    for dofs, sl, phi, grad, hess3 in raw_elements:
        k, q = phi.shape[0], phi.shape[1]
        if k == 0:
            out.append(ElementBlock(dofs, sl, phi, np.zeros((0, q, 2, 2)),
                                    np.zeros((0, q, 2, 2))))
            continue
        idx = np.tile(np.arange(sl.start, sl.stop), k)
        g = geometry.take(idx)
        val_f = phi.reshape(k * q, 3)
        grad_f = grad.reshape(k * q, 3, 2)
        hess_f = hess3.reshape(k * q, 2, 2)
        gamma = membrane_strain_arrays(val_f, grad_f, g).reshape(k, q, 2, 2)
        rho = bending_strain_arrays(val_f, grad_f, hess_f, g).reshape(k, q, 2, 2)
        out.append(ElementBlock(dofs, sl, phi, rho, gamma))
    return out


# ---------------------------------------------------------------------------
# tensor-product 2D spaces
# ---------------------------------------------------------------------------

class TensorSpace2D:
    """Tensor product of two 1D spaces on a rectangle mesh."""

    def __init__(self, space_x, space_y):
        self.sx = space_x
        self.sy = space_y
        self.ndof = space_x.ndof * space_y.ndof

    def dof_index(self, i, j):
        return i * self.sy.ndof + j

    def element_dofs(self, ex, ey):
        """(local pairs, global indices) of active dofs on element (ex, ey)."""
        lx, gx = self.sx.element_dofs(ex)
        ly, gy = self.sy.element_dofs(ey)
        glob = (gx[:, None] * self.sy.ndof + gy[None, :]).ravel()
        return (lx, ly), glob

    def local_values(self, ex, ey, ref_x, ref_y, dx, dy):
        """Shape values on the element grid, (k, qx*qy) with y running fastest."""
        lx, _ = self.sx.element_dofs(ex)
        ly, _ = self.sy.element_dofs(ey)
        vx = self.sx.local_shapes(ref_x, dx)[lx]        # (kx, qx)
        vy = self.sy.local_shapes(ref_y, dy)[ly]        # (ky, qy)
        out = vx[:, None, :, None] * vy[None, :, None, :]
        kx, ky, qx, qy = out.shape
        return out.reshape(kx * ky, qx * qy)

    def evaluate(self, coeffs, pts, dx=0, dy=0):
        """Field values at arbitrary points for active-dof coefficients."""
        pts = np.atleast_2d(pts)
        ex, xix = self.sx.locate(pts[:, 0])
        ey, xiy = self.sy.locate(pts[:, 1])
        cmat = np.asarray(coeffs, dtype=float).reshape(self.sx.ndof, self.sy.ndof)
        out = np.zeros(pts.shape[0])
        for p in range(pts.shape[0]):
            lx, gx = self.sx.element_dofs(ex[p])
            ly, gy = self.sy.element_dofs(ey[p])
            vx = self.sx.local_shapes(np.array([xix[p]]), dx)[lx, 0]
            vy = self.sy.local_shapes(np.array([xiy[p]]), dy)[ly, 0]
            out[p] = vx @ cmat[np.ix_(gx, gy)] @ vy
        return out


def _rect_mesh_quadrature(domain, n_elems, q):
    """Tensor Gauss rule per rectangle element; returns per-element data."""
    (x0, x1), (y0, y1) = domain
    nx, ny = n_elems
    hx, hy = (x1 - x0) / nx, (y1 - y0) / ny
    ref, wref = gauss_rule(q)
    cells = []
    for ex in range(nx):
        for ey in range(ny):
            xs = x0 + (ex + ref) * hx
            ys = y0 + (ey + ref) * hy
            pts = np.stack(np.meshgrid(xs, ys, indexing="ij"), axis=-1).reshape(-1, 2)
            w = (wref[:, None] * hx * wref[None, :] * hy).ravel()
            cells.append((ex, ey, pts, w))
    return cells, ref, wref


def _clamp_flags(clamped_edges):
    edges = set(clamped_edges)
    known = {"y1min", "y1max", "y2min", "y2max"}
    if not edges <= known:
        raise ValueError(f"unknown clamped edges {edges - known}")
    return ("y1min" in edges, "y1max" in edges, "y2min" in edges, "y2max" in edges)


# ---------------------------------------------------------------------------
# plate deflection basis (reduced backend on flat charts)
# ---------------------------------------------------------------------------

def plate_deflection_basis(chart, n_elems=(8, 8), quad_order=4,
                           clamped_edges=("y1min", "y1max", "y2min", "y2max")):
    """Normal-deflection basis (0, 0, v3) with v3 in C^1 bicubic Hermite.

    Valid on flat charts, where tangential components decouple from bending
    and the membrane constraint of a pure deflection is satisfied identically.
    """
    (l0, l1), (r0, r1) = chart.domain
    cl = _clamp_flags(clamped_edges)
    sx = HermiteSpace1D(l0, l1, n_elems[0], 1, clamp_left=cl[0], clamp_right=cl[1])
    sy = HermiteSpace1D(r0, r1, n_elems[1], 1, clamp_left=cl[2], clamp_right=cl[3])
    w3 = TensorSpace2D(sx, sy)
    if w3.ndof == 0:
        raise ValueError("deflection space is empty; relax the clamping or refine")

    cells, ref, _ = _rect_mesh_quadrature(chart.domain, n_elems, quad_order)
    pts = np.concatenate([c[2] for c in cells])
    wts = np.concatenate([c[3] for c in cells])
    geom = geometry_at(chart, pts)

    raw = []
    offset = 0
    for ex, ey, cpts, cw in cells:
        q = cpts.shape[0]
        _, glob = w3.element_dofs(ex, ey)
        k = glob.size
        val = w3.local_values(ex, ey, ref, ref, 0, 0)
        vx = w3.local_values(ex, ey, ref, ref, 1, 0)
        vy = w3.local_values(ex, ey, ref, ref, 0, 1)
        vxx = w3.local_values(ex, ey, ref, ref, 2, 0)
        vxy = w3.local_values(ex, ey, ref, ref, 1, 1)
        vyy = w3.local_values(ex, ey, ref, ref, 0, 2)
        phi = np.zeros((k, q, 3))
        phi[:, :, 2] = val
        grad = np.zeros((k, q, 3, 2))
        grad[:, :, 2, 0] = vx
        grad[:, :, 2, 1] = vy
        hess = np.empty((k, q, 2, 2))
        hess[:, :, 0, 0] = vxx
        hess[:, :, 0, 1] = vxy
        hess[:, :, 1, 0] = vxy
        hess[:, :, 1, 1] = vyy
        raw.append((glob, slice(offset, offset + q), phi, grad, hess))
        offset += q

    elements = _finalize_elements(raw, geom)

    def field_maker(coeffs):
        from .strain import CallableDisplacement

        def value(p):
            out = np.zeros(p.shape[:-1] + (3,))
            out[..., 2] = w3.evaluate(coeffs, p)
            return out

        def gradient(p):
            out = np.zeros(p.shape[:-1] + (3, 2))
            out[..., 2, 0] = w3.evaluate(coeffs, p, 1, 0)
            out[..., 2, 1] = w3.evaluate(coeffs, p, 0, 1)
            return out

        def hessian3(p):
            out = np.empty(p.shape[:-1] + (2, 2))
            out[..., 0, 0] = w3.evaluate(coeffs, p, 2, 0)
            out[..., 0, 1] = w3.evaluate(coeffs, p, 1, 1)
            out[..., 1, 0] = out[..., 0, 1]
            out[..., 1, 1] = w3.evaluate(coeffs, p, 0, 2)
            return out

        return CallableDisplacement(value, gradient, hessian3)

    return FlexuralBasis(backend="reduced", chart=chart, ndof=w3.ndof,
                         quad_points=pts, quad_weights=wts, geometry=geom,
                         elements=elements,
                         meta={"space_v3": w3, "field_maker": field_maker,
                               "kind": "plate-deflection"})


# ---------------------------------------------------------------------------
# cylinder reduced basis
# ---------------------------------------------------------------------------

def cylinder_reduced_basis(chart, n_elems=16, quad_theta=10, quad_z=8):
    """Inextensional basis on a cylinder clamped along both generatrices.

    Generators: axial profile u_z(theta) (septic Hermite, all four end
    derivatives clamped) and rotation w_theta(theta) (quintic Hermite, three
    end derivatives clamped).  The reconstruction

        v_theta = -(z/R) u_z' + w_theta,   v_r = (z/R) u_z'' - w_theta'

    annihilates the membrane strain identically; covariant components are
    (u_z, R v_theta, -v_r).
    """
    (z0, z1), (t0, t1) = chart.domain
    R = float(np.linalg.norm(chart.position(np.array([z0, t0]))[:2]))
    span = t1 - t0
    if span >= 2 * np.pi - 1e-12:
        raise ValueError("full cylinder is fully clamped: the constrained space "
                         "is trivial (generalized membrane regime)")
    vz = HermiteSpace1D(t0, t1, n_elems, 3)
    wt = HermiteSpace1D(t0, t1, n_elems, 2)
    ndof = vz.ndof + wt.ndof
    if ndof == 0:
        raise ValueError("cylinder basis is empty; refine the mesh")

    tq_ref, tw_ref = gauss_rule(quad_theta)
    zq, zw = gauss_rule(quad_z, z0, z1)

    cells = []
    for e in range(n_elems):
        th = vz.a + (e + tq_ref) * vz.h
        pts = np.stack(np.meshgrid(zq, th, indexing="ij"), axis=-1).reshape(-1, 2)
        w = (zw[:, None] * (tw_ref * vz.h)[None, :]).ravel()
        cells.append((e, pts, w))
    pts = np.concatenate([c[1] for c in cells])
    wts = np.concatenate([c[2] for c in cells])
    geom = geometry_at(chart, pts)

    vz_shapes = {r: vz.local_shapes(tq_ref, r) for r in range(5)}
    wt_shapes = {r: wt.local_shapes(tq_ref, r) for r in range(4)}

    raw = []
    offset = 0
    nzq, ntq = quad_z, quad_theta
    zcol = np.repeat(zq, ntq)          # z value at each tensor point
    for e, cpts, cw in cells:
        q = cpts.shape[0]
        lz, gz = vz.element_dofs(e)
        lw, gw = wt.element_dofs(e)
        k = gz.size + gw.size
        phi = np.zeros((k, q, 3))
        grad = np.zeros((k, q, 3, 2))
        hess = np.zeros((k, q, 2, 2))

        def tile(arr_1d):
            # theta-profile -> value at every (z, theta) tensor point
            return np.tile(arr_1d, (nzq, 1)).reshape(-1)

        for a, loc in enumerate(lz):
            b = {r: tile(vz_shapes[r][loc]) for r in range(5)}
            phi[a, :, 0] = b[0]
            phi[a, :, 1] = -zcol * b[1]
            phi[a, :, 2] = -(zcol / R) * b[2]
            grad[a, :, 0, 1] = b[1]
            grad[a, :, 1, 0] = -b[1]
            grad[a, :, 1, 1] = -zcol * b[2]
            grad[a, :, 2, 0] = -b[2] / R
            grad[a, :, 2, 1] = -(zcol / R) * b[3]
            hess[a, :, 0, 1] = -b[3] / R
            hess[a, :, 1, 0] = -b[3] / R
            hess[a, :, 1, 1] = -(zcol / R) * b[4]
        for a, loc in enumerate(lw):
            i = gz.size + a
            c = {r: tile(wt_shapes[r][loc]) for r in range(4)}
            phi[i, :, 1] = R * c[0]
            phi[i, :, 2] = c[1]
            grad[i, :, 1, 1] = R * c[1]
            grad[i, :, 2, 1] = c[2]
            hess[i, :, 1, 1] = c[3]
        dofs = np.concatenate([gz, vz.ndof + gw])
        raw.append((dofs, slice(offset, offset + q), phi, grad, hess))
        offset += q

    elements = _finalize_elements(raw, geom)

    def field_maker(coeffs):
        from .cylinder import reconstruct_displacement

        cz = coeffs[:vz.ndof]
        cw = coeffs[vz.ndof:]
        return reconstruct_displacement(
            {r: (lambda th, r=r: vz.evaluate(cz, th, r)) for r in range(5)},
            {r: (lambda th, r=r: wt.evaluate(cw, th, r)) for r in range(4)}, R)

    return FlexuralBasis(backend="reduced", chart=chart, ndof=ndof,
                         quad_points=pts, quad_weights=wts, geometry=geom,
                         elements=elements,
                         meta={"space_vz": vz, "space_wt": wt, "radius": R,
                               "theta_rule": (tq_ref, tw_ref), "z_rule": (zq, zw),
                               "n_theta_elems": n_elems, "field_maker": field_maker,
                               "kind": "cylinder-reduced"})


# ---------------------------------------------------------------------------
# general multiplier basis
# ---------------------------------------------------------------------------

def general_multiplier_basis(chart, n_elems=(8, 8), quad_order=3,
                             clamped_edges=("y1min", "y1max", "y2min", "y2max")):
    """Unconstrained displacement basis plus per-element membrane multipliers.

    Tangential components are biquadratic, the normal component is bicubic
    Hermite.  The membrane constraint is imposed weakly against per-element
    constant symmetric tensors; the multiplier doubles as the contact-force
    output.  Dof layout: [v1 | v2 | v3].
    """
    (l0, l1), (r0, r1) = chart.domain
    cl = _clamp_flags(clamped_edges)
    lx = LagrangeSpace1D(l0, l1, n_elems[0], clamp_left=cl[0], clamp_right=cl[1])
    ly = LagrangeSpace1D(r0, r1, n_elems[1], clamp_left=cl[2], clamp_right=cl[3])
    hx = HermiteSpace1D(l0, l1, n_elems[0], 1, clamp_left=cl[0], clamp_right=cl[1])
    hy = HermiteSpace1D(r0, r1, n_elems[1], 1, clamp_left=cl[2], clamp_right=cl[3])
    vt = TensorSpace2D(lx, ly)
    w3 = TensorSpace2D(hx, hy)
    nd_t, nd_3 = vt.ndof, w3.ndof
    ndof = 2 * nd_t + nd_3
    if ndof == 0:
        raise ValueError("multiplier-backend displacement space is empty")

    cells, ref, _ = _rect_mesh_quadrature(chart.domain, n_elems, quad_order)
    pts = np.concatenate([c[2] for c in cells])
    wts = np.concatenate([c[3] for c in cells])
    geom = geometry_at(chart, pts)

    raw = []
    offset = 0
    for ex, ey, cpts, cw in cells:
        q = cpts.shape[0]
        _, gt = vt.element_dofs(ex, ey)
        _, g3 = w3.element_dofs(ex, ey)
        kt, k3 = gt.size, g3.size
        k = 2 * kt + k3
        phi = np.zeros((k, q, 3))
        grad = np.zeros((k, q, 3, 2))
        hess = np.zeros((k, q, 2, 2))
        tval = vt.local_values(ex, ey, ref, ref, 0, 0)
        tdx = vt.local_values(ex, ey, ref, ref, 1, 0)
        tdy = vt.local_values(ex, ey, ref, ref, 0, 1)
        for comp in range(2):
            sl_loc = slice(comp * kt, (comp + 1) * kt)
            phi[sl_loc, :, comp] = tval
            grad[sl_loc, :, comp, 0] = tdx
            grad[sl_loc, :, comp, 1] = tdy
        base = 2 * kt
        phi[base:, :, 2] = w3.local_values(ex, ey, ref, ref, 0, 0)
        grad[base:, :, 2, 0] = w3.local_values(ex, ey, ref, ref, 1, 0)
        grad[base:, :, 2, 1] = w3.local_values(ex, ey, ref, ref, 0, 1)
        hess[base:, :, 0, 0] = w3.local_values(ex, ey, ref, ref, 2, 0)
        hess[base:, :, 0, 1] = w3.local_values(ex, ey, ref, ref, 1, 1)
        hess[base:, :, 1, 0] = hess[base:, :, 0, 1]
        hess[base:, :, 1, 1] = w3.local_values(ex, ey, ref, ref, 0, 2)
        dofs = np.concatenate([gt, nd_t + gt, 2 * nd_t + g3])
        raw.append((dofs, slice(offset, offset + q), phi, grad, hess))
        offset += q

    elements = _finalize_elements(raw, geom)

    # weak membrane constraint: rows (e, c) with c in {11, 22, 12(doubled)}
    wsa = wts * geom.sqrt_a
    rows, cols, vals = [], [], []
    for e, el in enumerate(elements):
        wloc = wsa[el.sl]
        g11 = el.gamma[:, :, 0, 0] @ wloc
        g22 = el.gamma[:, :, 1, 1] @ wloc
        g12 = 2.0 * (el.gamma[:, :, 0, 1] @ wloc)
        for c, gvals in enumerate((g11, g22, g12)):
            rows.extend([3 * e + c] * el.dofs.size)
            cols.extend(el.dofs.tolist())
            vals.extend(gvals.tolist())
    constraint = sp.csr_matrix((vals, (rows, cols)),
                               shape=(3 * len(elements), ndof))

    def field_maker(coeffs):
        from .strain import CallableDisplacement

        c1 = coeffs[:nd_t]
        c2 = coeffs[nd_t:2 * nd_t]
        c3 = coeffs[2 * nd_t:]

        def value(p):
            return np.stack([vt.evaluate(c1, p), vt.evaluate(c2, p),
                             w3.evaluate(c3, p)], axis=-1)

        def gradient(p):
            out = np.empty(p.shape[:-1] + (3, 2))
            out[..., 0, 0] = vt.evaluate(c1, p, 1, 0)
            out[..., 0, 1] = vt.evaluate(c1, p, 0, 1)
            out[..., 1, 0] = vt.evaluate(c2, p, 1, 0)
            out[..., 1, 1] = vt.evaluate(c2, p, 0, 1)
            out[..., 2, 0] = w3.evaluate(c3, p, 1, 0)
            out[..., 2, 1] = w3.evaluate(c3, p, 0, 1)
            return out

        def hessian3(p):
            out = np.empty(p.shape[:-1] + (2, 2))
            out[..., 0, 0] = w3.evaluate(c3, p, 2, 0)
            out[..., 0, 1] = w3.evaluate(c3, p, 1, 1)
            out[..., 1, 0] = out[..., 0, 1]
            out[..., 1, 1] = w3.evaluate(c3, p, 0, 2)
            return out

        return CallableDisplacement(value, gradient, hessian3)

    return FlexuralBasis(backend="multiplier", chart=chart, ndof=ndof,
                         quad_points=pts, quad_weights=wts, geometry=geom,
                         elements=elements, constraint=constraint,
                         n_multipliers=3 * len(elements),
                         meta={"space_t": vt, "space_v3": w3,
                               "n_elems": tuple(n_elems),
                               "field_maker": field_maker,
                               "kind": "general-multiplier"})
