"""Shared test utilities: polynomial fields, reference strain formulas, and
the manufactured-solution convergence study for the reduced cylinder blocks."""

import numpy as np

from poroshell.strain import CallableDisplacement

_bubble_cache = {}


class Poly2D:
    """Bivariate polynomial with exact derivatives, coef[i, j] * y1^i * y2^j."""

    def __init__(self, coef):
        self.coef = np.asarray(coef, dtype=float)

    @classmethod
    def random(cls, rng, degree=3, scale=1.0):
        c = scale * rng.normal(size=(degree + 1, degree + 1))
        return cls(c)

    def deriv(self, d1, d2):
        c = self.coef
        for _ in range(d1):
            c = c[1:] * np.arange(1, c.shape[0])[:, None]
        for _ in range(d2):
            c = c[:, 1:] * np.arange(1, c.shape[1])[None, :]
        return Poly2D(c) if c.size else Poly2D(np.zeros((1, 1)))

    def __call__(self, y, d1=0, d2=0):
        c = self.deriv(d1, d2).coef
        y1, y2 = np.asarray(y)[..., 0], np.asarray(y)[..., 1]
        out = np.zeros(np.shape(y1))
        for i in range(c.shape[0]):
            for j in range(c.shape[1]):
                if c[i, j] != 0.0:
                    out = out + c[i, j] * y1 ** i * y2 ** j
        return out


def polynomial_displacement(rng, degree=3, scale=1.0):
    """Random polynomial midsurface displacement with exact derivative access."""
    comps = [Poly2D.random(rng, degree, scale) for _ in range(3)]

    def value(y):
        return np.stack([p(y) for p in comps], axis=-1)

    def gradient(y):
        return np.stack([np.stack([p(y, 1, 0), p(y, 0, 1)], axis=-1) for p in comps],
                        axis=-2)

    def hessian3(y):
        p = comps[2]
        h = np.empty(np.shape(y)[:-1] + (2, 2))
        h[..., 0, 0] = p(y, 2, 0)
        h[..., 0, 1] = p(y, 1, 1)
        h[..., 1, 0] = p(y, 1, 1)
        h[..., 1, 1] = p(y, 0, 2)
        return h

    return CallableDisplacement(value, gradient, hessian3), comps


def reference_membrane_strain(v, g, p):
    """Loop-and-index transcription of the membrane strain at cache point p."""
    val = v.value(g.points)[p]
    grad = v.gradient(g.points)[p]
    out = np.zeros((2, 2))
    for a in range(2):
        for b in range(2):
            out[a, b] = 0.5 * (grad[b, a] + grad[a, b])
            for k in range(2):
                out[a, b] -= g.gamma[p, k, a, b] * val[k]
            out[a, b] -= g.curv_cov[p, a, b] * val[2]
    return out


def smooth_generators(rng, d):
    """Random smooth generator fields clamped to order 3 at both ends."""
    a, b = rng.normal(size=2)

    def poly_derivs(amp, extra):
        from numpy.polynomial import polynomial as npoly

        base = npoly.polyfromroots([0.0] * 4 + [d] * 4) * amp
        base = npoly.polymul(base, extra)
        out = {}
        c = base
        for r in range(6):
            out[r] = (lambda t, c=c: npoly.polyval(t, c))
            c = npoly.polyder(c)
        return out

    vz = poly_derivs(a, [1.0, 0.7 * rng.normal()])
    wt = poly_derivs(b, [0.3, -0.5 * rng.normal(), 0.2 * rng.normal()])
    return vz, wt


def _bubble_deriv(t, d, power, order):
    """Derivatives of sin(pi t / d)^power, built symbolically once per order."""
    import sympy

    key = (d, power, order)
    if key not in _bubble_cache:
        x = sympy.symbols("x")
        expr = sympy.sin(sympy.pi * x / d) ** power
        for _ in range(order):
            expr = sympy.diff(expr, x)
        _bubble_cache[key] = sympy.lambdify(x, expr, "numpy")
    return _bubble_cache[key](t)


def _wave_deriv(t, order):
    cycle = [np.sin, np.cos, lambda x: -np.sin(x), lambda x: -np.cos(x)]
    return 3.0 ** order * cycle[order % 4](3.0 * t)


def manufactured_convergence(block, n_list, cfg, params):
    """Galerkin energy-norm errors for an analytic clamped solution.

    ``block`` selects the axial (C^3 septic, theoretical order 4) or rotation
    (C^2 quintic, order 3) part of the separated cylinder system; the load is
    the exact weak residual of the analytic solution, so the discrete solution
    is its energy projection and the error converges at the interpolation rate.
    """
    from math import comb

    from poroshell.hermite import HermiteSpace1D, gauss_rule
    from poroshell.material import FormCoefficients

    d, R, L = cfg.angle, cfg.radius, cfg.axial_length
    coefs = FormCoefficients.dimensional(params)
    mu, lam = coefs.mu_like, coefs.lam_like
    cm = 4.0 * mu * (lam + mu) / (lam + 2.0 * mu)
    if block == "axial":
        m = 3
        ops = ((4, 2), (3, 1))
        coefs_op = (coefs.bend * cm * L ** 3 / (12 * R ** 5),
                    coefs.bend * 4 * mu * L / R ** 3)
    else:
        m = 2
        ops = ((3, 1),)
        coefs_op = (coefs.bend * cm * L / R ** 3,)

    def u_exact(t, order):
        out = 0.0
        for k in range(order + 1):
            out = out + comb(order, k) * _bubble_deriv(t, d, 2 * m + 2, order - k) \
                * _wave_deriv(t, k)
        return out

    errs = []
    for n in n_list:
        sp = HermiteSpace1D(0.0, d, n, m)
        K = np.zeros((sp.ndof, sp.ndof))
        F = np.zeros(sp.ndof)
        xg, wg = gauss_rule(14)
        for e in range(n):
            loc, glob = sp.element_dofs(e)
            tq = sp.a + (e + xg) * sp.h
            wq = wg * sp.h
            for (hi, lo), cc in zip(ops, coefs_op):
                sh = sp.local_shapes(xg, hi)[loc] + sp.local_shapes(xg, lo)[loc]
                ue = u_exact(tq, hi) + u_exact(tq, lo)
                K[np.ix_(glob, glob)] += cc * np.einsum("q,iq,jq->ij", wq, sh, sh)
                F[glob] += cc * np.einsum("q,q,iq->i", wq, ue, sh)
        u_h = np.linalg.solve(K, F)
        err2 = 0.0
        for e in range(n):
            loc, glob = sp.element_dofs(e)
            tq = sp.a + (e + xg) * sp.h
            wq = wg * sp.h
            for (hi, lo), cc in zip(ops, coefs_op):
                sh = sp.local_shapes(xg, hi)[loc] + sp.local_shapes(xg, lo)[loc]
                diff = u_h[glob] @ sh - (u_exact(tq, hi) + u_exact(tq, lo))
                err2 += cc * wq @ diff ** 2
        errs.append(np.sqrt(err2))
    return errs


def reference_bending_strain(v, g, p):
    """Loop-and-index transcription of the bending strain at cache point p."""
    val = v.value(g.points)[p]
    grad = v.gradient(g.points)[p]
    hess = v.hessian3(g.points)[p]
    out = np.zeros((2, 2))
    for a in range(2):
        for b in range(2):
            s = hess[a, b]
            for k in range(2):
                s -= g.gamma[p, k, a, b] * grad[2, k]
                da = grad[k, a] - sum(g.gamma[p, t, a, k] * val[t] for t in range(2))
                db = grad[k, b] - sum(g.gamma[p, t, b, k] * val[t] for t in range(2))
                s += g.b_mixed[p, k, b] * da + g.b_mixed[p, k, a] * db
                s += g.b_cov_deriv[p, k, a, b] * val[k]
                s -= g.b_mixed[p, k, a] * g.curv_cov[p, k, b] * val[2]
            out[a, b] = s
    return out
