"""One-dimensional C^m Hermite elements and quadratic Lagrange elements.

A C^m Hermite element on [0, 1] carries the derivatives of order 0..m at both
endpoints as degrees of freedom and spans polynomials of degree 2m+1:

    m = 1  cubic    (H^2-conforming)
    m = 2  quintic  (H^3-conforming)
    m = 3  septic   (H^4-conforming)

Shape-function coefficients are computed once in exact rational arithmetic.
Spaces live on uniform meshes; a dof for the d-th derivative at a node scales
like h^d so that coefficient vectors hold physical derivative values.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from math import factorial

import numpy as np

__all__ = ["gauss_rule", "hermite_coefficients", "HermiteSpace1D", "LagrangeSpace1D"]


def gauss_rule(npts, a=0.0, b=1.0):
    """Gauss-Legendre points and weights on (a, b)."""
    x, w = np.polynomial.legendre.leggauss(npts)
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    return mid + half * x, half * w


def _solve_fractions(mat, rhs):
    n = len(mat)
    a = [row[:] + [rhs[i]] for i, row in enumerate(mat)]
    for col in range(n):
        piv = next(r for r in range(col, n) if a[r][col] != 0)
        a[col], a[piv] = a[piv], a[col]
        inv = Fraction(1, 1) / a[col][col]
        a[col] = [v * inv for v in a[col]]
        for r in range(n):
            if r != col and a[r][col] != 0:
                f = a[r][col]
                a[r] = [vr - f * vc for vr, vc in zip(a[r], a[col])]
    return [a[r][n] for r in range(n)]


@lru_cache(maxsize=None)
def hermite_coefficients(smoothness):
    """Monomial coefficients of the 2(m+1) shape functions on [0, 1].

    Row order: (node 0, d=0..m), (node 1, d=0..m).  Exact rationals converted
    to float.  Shape j satisfies  d^r/dx^r shape_j(node) = delta.
    """
    m = smoothness
    nsh = 2 * (m + 1)
    deg = 2 * m + 1

    def drow(node, r):
        # p^(r)(node) as a linear form in the monomial coefficients
        row = []
        for k in range(deg + 1):
            if k < r:
                row.append(Fraction(0))
            else:
                c = Fraction(factorial(k), factorial(k - r))
                row.append(c if node == 1 else (c if k == r else Fraction(0)))
        return row

    conditions = [drow(node, r) for node in (0, 1) for r in range(m + 1)]
    shapes = np.empty((nsh, deg + 1))
    for j in range(nsh):
        rhs = [Fraction(1) if i == j else Fraction(0) for i in range(nsh)]
        sol = _solve_fractions(conditions, rhs)
        shapes[j] = [float(c) for c in sol]
    return shapes


def _poly_eval(coeffs, x, deriv):
    """Evaluate d^r/dx^r of polynomials given monomial coefficient rows."""
    nsh, ncf = coeffs.shape
    out = np.zeros((nsh,) + np.shape(x))
    for k in range(deriv, ncf):
        fac = factorial(k) / factorial(k - deriv)
        out += fac * coeffs[:, k][(slice(None),) + (None,) * np.ndim(x)] * x ** (k - deriv)
    return out


class HermiteSpace1D:
    """C^m Hermite space on a uniform mesh of (a, b).

    ``clamp_left``/``clamp_right`` remove all m+1 dofs at the corresponding
    endpoint, imposing f = f' = ... = f^(m) = 0 there.
    """

    def __init__(self, a, b, n_elems, smoothness, clamp_left=True, clamp_right=True):
        if n_elems < 1:
            raise ValueError("need at least one element")
        self.a, self.b = float(a), float(b)
        self.n_elems = int(n_elems)
        self.m = int(smoothness)
        self.h = (self.b - self.a) / self.n_elems
        self.clamp_left = clamp_left
        self.clamp_right = clamp_right
        dpn = self.m + 1
        nfull = (self.n_elems + 1) * dpn
        active = np.ones(nfull, dtype=bool)
        if clamp_left:
            active[:dpn] = False
        if clamp_right:
            active[-dpn:] = False
        self._active = active
        self._full_to_active = np.full(nfull, -1, dtype=int)
        self._full_to_active[active] = np.arange(active.sum())
        self.ndof = int(active.sum())
        self._coeffs = hermite_coefficients(self.m)

    @property
    def dofs_per_node(self):
        return self.m + 1

    def nodes(self):
        return self.a + self.h * np.arange(self.n_elems + 1)

    def element_full_dofs(self, e):
        dpn = self.m + 1
        return np.concatenate([e * dpn + np.arange(dpn), (e + 1) * dpn + np.arange(dpn)])

    def element_dofs(self, e):
        """(local kept indices, active global indices) for element e."""
        full = self.element_full_dofs(e)
        act = self._full_to_active[full]
        keep = act >= 0
        return np.nonzero(keep)[0], act[keep]

    def local_shapes(self, ref_pts, deriv):
        """Physical shape derivatives at reference points, (2(m+1), q).

        Includes the h^d dof scaling and the h^-r derivative scaling; valid on
        every element since the mesh is uniform.
        """
        vals = _poly_eval(self._coeffs, np.asarray(ref_pts, dtype=float), deriv)
        dpn = self.m + 1
        dof_orders = np.concatenate([np.arange(dpn), np.arange(dpn)])
        scale = self.h ** (dof_orders - deriv)
        return vals * scale[:, None]

    def locate(self, x):
        x = np.asarray(x, dtype=float)
        e = np.clip(((x - self.a) / self.h).astype(int), 0, self.n_elems - 1)
        xi = (x - (self.a + e * self.h)) / self.h
        return e, xi

    def evaluate(self, coeffs, x, deriv=0):
        """Evaluate the field with the given active-dof coefficients at x."""
        e, xi = self.locate(np.atleast_1d(x))
        out = np.zeros(xi.shape)
        full_coeffs = np.zeros((self.n_elems + 1) * (self.m + 1))
        full_coeffs[self._active] = coeffs
        for el in np.unique(e):
            sel = e == el
            shapes = _poly_eval(self._coeffs, xi[sel], deriv)
            dpn = self.m + 1
            orders = np.concatenate([np.arange(dpn), np.arange(dpn)])
            shapes = shapes * (self.h ** (orders - deriv))[:, None]
            out[sel] = shapes.T @ full_coeffs[self.element_full_dofs(el)]
        return out if np.ndim(x) else float(out[0])

    def interpolate(self, derivative_closures):
        """Active dof vector interpolating f from closures [f, f', ..., f^(m)]."""
        xs = self.nodes()
        full = np.empty((self.n_elems + 1) * (self.m + 1))
        for r, fr in enumerate(derivative_closures):
            full[r::self.m + 1] = fr(xs)
        return full[self._active]


class LagrangeSpace1D:
    """Quadratic C^0 Lagrange space on a uniform mesh (endpoint + midpoint nodes)."""

    def __init__(self, a, b, n_elems, clamp_left=True, clamp_right=True):
        self.a, self.b = float(a), float(b)
        self.n_elems = int(n_elems)
        self.h = (self.b - self.a) / self.n_elems
        npts = 2 * self.n_elems + 1
        active = np.ones(npts, dtype=bool)
        if clamp_left:
            active[0] = False
        if clamp_right:
            active[-1] = False
        self._active = active
        self._full_to_active = np.full(npts, -1, dtype=int)
        self._full_to_active[active] = np.arange(active.sum())
        self.ndof = int(active.sum())

    def nodes(self):
        return self.a + 0.5 * self.h * np.arange(2 * self.n_elems + 1)

    def element_full_dofs(self, e):
        return np.array([2 * e, 2 * e + 1, 2 * e + 2])

    def element_dofs(self, e):
        full = self.element_full_dofs(e)
        act = self._full_to_active[full]
        keep = act >= 0
        return np.nonzero(keep)[0], act[keep]

    def locate(self, x):
        x = np.asarray(x, dtype=float)
        e = np.clip(((x - self.a) / self.h).astype(int), 0, self.n_elems - 1)
        xi = (x - (self.a + e * self.h)) / self.h
        return e, xi

    def local_shapes(self, ref_pts, deriv):
        """Physical derivatives of the three quadratic shapes, (3, q)."""
        xi = np.asarray(ref_pts, dtype=float)
        if deriv == 0:
            vals = np.stack([2 * (xi - 0.5) * (xi - 1.0), -4 * xi * (xi - 1.0),
                             2 * xi * (xi - 0.5)])
        elif deriv == 1:
            vals = np.stack([4 * xi - 3.0, -8 * xi + 4.0, 4 * xi - 1.0]) / self.h
        elif deriv == 2:
            vals = np.stack([np.full_like(xi, 4.0), np.full_like(xi, -8.0),
                             np.full_like(xi, 4.0)]) / self.h ** 2
        else:
            vals = np.zeros((3,) + xi.shape)
        return vals
