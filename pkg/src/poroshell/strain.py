"""Membrane and bending strain operators on midsurface displacement fields.

Displacements are given by their covariant components (v_1, v_2, v_3) where
the third component is along the unit normal.  With G^k_ab the Christoffel
symbols, b_ab / b^k_a the curvature tensor and b^k_a|_b its covariant
derivative, the linearized change-of-metric (membrane) and change-of-curvature
(bending) tensors are

    gamma_ab(v) = (d_a v_b + d_b v_a)/2 - G^k_ab v_k - b_ab v_3

    rho_ab(v)   = d_ab v_3 - G^k_ab d_k v_3
                  + b^k_b (d_a v_k - G^t_ak v_t) + b^k_a (d_b v_k - G^t_bk v_t)
                  + b^k_a|_b v_k - b^k_a b_kb v_3

Both are symmetric 2x2 fields.  The operators consume callable derivative
evaluators, so they are agnostic of how a field is discretized: any object
with ``value``, ``gradient`` and (for rho) ``hessian3`` works.

Covariant divergences of symmetric surface tensor fields are provided for
residual diagnostics of the momentum balance in differential form.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "CallableDisplacement",
    "membrane_strain",
    "bending_strain",
    "membrane_strain_arrays",
    "bending_strain_arrays",
    "covariant_divergence",
    "second_covariant_divergence",
]


class CallableDisplacement:
    """Displacement field from closures.

    ``value(pts) -> (n, 3)`` covariant components, ``gradient(pts) -> (n, 3, 2)``
    with gradient[:, i, a] = d_a v_i, and ``hessian3(pts) -> (n, 2, 2)`` the
    Hessian of the normal component (needed only by the bending strain).
    """

    def __init__(self, value, gradient, hessian3=None):
        self._value = value
        self._gradient = gradient
        self._hessian3 = hessian3

    def value(self, pts):
        return np.asarray(self._value(np.asarray(pts, dtype=float)), dtype=float)

    def gradient(self, pts):
        return np.asarray(self._gradient(np.asarray(pts, dtype=float)), dtype=float)

    def hessian3(self, pts):
        if self._hessian3 is None:
            raise ValueError("displacement field has no second-derivative access for v_3")
        return np.asarray(self._hessian3(np.asarray(pts, dtype=float)), dtype=float)


def membrane_strain_arrays(val, grad, g):
    """Membrane strain from value/gradient arrays at the cache points."""
    sym = 0.5 * (grad[:, :2, :] + grad[:, :2, :].swapaxes(1, 2))  # [p, b, a] -> sym
    out = sym - np.einsum("pkab,pk->pab", g.gamma, val[:, :2])
    out -= g.curv_cov * val[:, 2][:, None, None]
    return out


def bending_strain_arrays(val, grad, hess3, g):
    """Bending strain from value/gradient/Hessian arrays at the cache points."""
    out = hess3 - np.einsum("pkab,pk->pab", g.gamma, grad[:, 2, :])
    # covariant-looking derivative of the tangential part: D[p, a, k]
    cov_t = grad[:, :2, :].swapaxes(1, 2) - np.einsum("ptak,pt->pak", g.gamma, val[:, :2])
    cross = np.einsum("pkb,pak->pab", g.b_mixed, cov_t)
    out += cross + cross.swapaxes(1, 2)
    out += np.einsum("pkab,pk->pab", g.b_cov_deriv, val[:, :2])
    out -= np.einsum("pka,pkb->pab", g.b_mixed, g.curv_cov) * val[:, 2][:, None, None]
    return out


def membrane_strain(v, g, y=None):
    """gamma(v) at the cache points (or a subset ``y`` of indices)."""
    pts = g.points if y is None else g.points[np.atleast_1d(y)]
    gg = g if y is None else g.take(y)
    return membrane_strain_arrays(v.value(pts), v.gradient(pts), gg)


def bending_strain(v, g, y=None):
    """rho(v) at the cache points (or a subset ``y`` of indices)."""
    pts = g.points if y is None else g.points[np.atleast_1d(y)]
    gg = g if y is None else g.take(y)
    return bending_strain_arrays(v.value(pts), v.gradient(pts), v.hessian3(pts), gg)


class SurfaceTensorField:
    """Symmetric 2x2 tensor field with derivative access.

    ``value(pts) -> (n, 2, 2)`` and ``gradient(pts) -> (n, 2, 2, 2)`` with the
    derivative index last: gradient[:, a, b, c] = d_c n_ab.
    """

    def __init__(self, value, gradient=None, fd_step=1e-6):
        self._value = value
        self._gradient = gradient
        self.fd_step = fd_step

    def value(self, pts):
        return np.asarray(self._value(np.asarray(pts, dtype=float)), dtype=float)

    def gradient(self, pts):
        pts = np.asarray(pts, dtype=float)
        if self._gradient is not None:
            return np.asarray(self._gradient(pts), dtype=float)
        h = self.fd_step
        out = np.empty(pts.shape[:-1] + (2, 2, 2))
        for c in range(2):
            dp = np.zeros(2)
            dp[c] = h
            out[..., c] = (self.value(pts + dp) - self.value(pts - dp)) / (2 * h)
        return out


def covariant_divergence(field, g):
    """First covariant divergence n_ab|_b of a symmetric surface tensor.

    Implements the standard surface formula

        n_ab|_b = d_b n_ab + G^a_bk n_kb + G^b_bk n_ak   (summed over b, k)

    which for symmetric n coincides with the momentum-balance divergence of
    the differential-form equations.  Returns shape (n, 2).
    """
    val = field.value(g.points)
    grad = field.gradient(g.points)
    out = np.einsum("pabb->pa", grad)
    out += np.einsum("pabk,pkb->pa", g.gamma, val)
    out += np.einsum("pbbk,pak->pa", g.gamma, val)
    return out


def second_covariant_divergence(field, chart, pts, fd_step=1e-5):
    """Second covariant divergence n_ab|_ab, by differencing the first.

    n_ab|_ab = d_a (n_ab|_b) + G^k_ak (n_ab|_b), summed over a (and k).
    Used only as a consistency diagnostic; the derivative of the first
    divergence is taken by central differences in the chart coordinates.
    """
    pts = np.asarray(pts, dtype=float)

    def first(p):
        return covariant_divergence(field, _geometry(chart, p))

    h = fd_step
    div = np.zeros(pts.shape[0])
    for a in range(2):
        dp = np.zeros(2)
        dp[a] = h
        div += ((first(pts + dp) - first(pts - dp)) / (2 * h))[:, a]
    g = _geometry(chart, pts)
    w = covariant_divergence(field, g)
    div += np.einsum("pkak,pa->p", g.gamma, w)
    return div


def _geometry(chart, pts):
    from .geometry import geometry_at

    return geometry_at(chart, pts, with_third=False)
