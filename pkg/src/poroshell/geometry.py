"""Midsurface differential geometry.

A shell midsurface is described by a chart X : omega -> R^3 on a rectangular
parameter domain.  From the chart we derive, at any set of sample points,

* covariant tangent basis       a_alpha = d_alpha X, unit normal a_3,
* contravariant basis           a^alpha  (a^alpha . a_beta = delta),
* metric tensors                A_c = (a_ab),  A^c = A_c^{-1},
* area element                  sqrt(a) = sqrt(det A_c),
* curvature tensor              b_ab = a_3 . d_b a_a,  mixed b^b_a,
* Christoffel symbols           G^k_ab = a^k . d_b a_a,
* covariant curvature derivative
      b^k_b|_a = d_a b^k_b + sum_t (G^k_at b^t_b - G^t_ba b^k_t).

Charts may carry analytic derivative closures or fall back to central finite
differences on the position map.  All quantities are bundled per point in a
read-only :class:`GeometryCache`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "GeometryError",
    "DegenerateChartError",
    "SurfaceChart",
    "GeometryCache",
    "geometry_at",
    "build_chart",
    "plate_chart",
    "cylinder_chart",
    "graph_chart",
    "wavy_chart",
    "tabulated_chart",
    "fundamental_forms",
    "curvature",
    "christoffel",
    "curvature_cov_derivative",
]

_EPS = np.finfo(float).eps
# Step floors that keep nested difference quotients away from catastrophic
# cancellation (rounding error eps/h^k for a k-fold difference).
_STEP_FLOOR_2 = _EPS ** 0.25
_STEP_FLOOR_3 = _EPS ** 0.2


class GeometryError(Exception):
    """Raised for invalid geometric input."""


class DegenerateChartError(GeometryError):
    """Chart Jacobian loses rank (sqrt(a) not uniformly positive)."""

    def __init__(self, message, location=None):
        super().__init__(message)
        self.location = location


def _as_points(y):
    pts = np.asarray(y, dtype=float)
    if pts.ndim == 1:
        return pts[None, :], True
    return pts, False


class SurfaceChart:
    """Parametrization X of a shell midsurface on a rectangle.

    Derivatives come from analytic closures when provided; otherwise central
    finite differences with step ``fd_step`` are used (nested for higher
    orders, with a step floor guarding the third-order quotient against
    cancellation).
    """

    def __init__(self, position, jacobian=None, second=None, third=None,
                 domain=((0.0, 1.0), (0.0, 1.0)), fd_step=1e-6, name="custom"):
        self.name = name
        self.domain = (tuple(map(float, domain[0])), tuple(map(float, domain[1])))
        if self.domain[0][1] <= self.domain[0][0] or self.domain[1][1] <= self.domain[1][0]:
            raise GeometryError(f"chart domain is empty: {self.domain}")
        self.fd_step = float(fd_step)
        self._position = position
        self._jacobian = jacobian
        self._second = second
        self._third = third
        self._length_scale = None

    @property
    def analytic_order(self):
        """Highest derivative order available in closed form (0..3)."""
        if self._third is not None:
            return 3
        if self._second is not None:
            return 2
        if self._jacobian is not None:
            return 1
        return 0

    @property
    def length_scale(self):
        """Diameter of the mapped sample grid, used to normalize tolerances."""
        if self._length_scale is None:
            (u0, u1), (v0, v1) = self.domain
            g1 = np.linspace(u0, u1, 7)
            g2 = np.linspace(v0, v1, 7)
            pts = np.stack(np.meshgrid(g1, g2, indexing="ij"), axis=-1).reshape(-1, 2)
            xs = self.position(pts)
            diam = float(np.linalg.norm(xs.max(axis=0) - xs.min(axis=0)))
            dom = float(np.hypot(u1 - u0, v1 - v0))
            self._length_scale = max(diam, dom, 1e-30)
        return self._length_scale

    def sample_grid(self, n=9, margin=1e-3):
        """Interior tensor grid of n x n sample points."""
        (u0, u1), (v0, v1) = self.domain
        du, dv = margin * (u1 - u0), margin * (v1 - v0)
        g1 = np.linspace(u0 + du, u1 - du, n)
        g2 = np.linspace(v0 + dv, v1 - dv, n)
        return np.stack(np.meshgrid(g1, g2, indexing="ij"), axis=-1).reshape(-1, 2)

    def position(self, y):
        pts, single = _as_points(y)
        out = np.asarray(self._position(pts), dtype=float)
        return out[0] if single else out

    def jacobian(self, y):
        """d_alpha X, shape (..., 3, 2)."""
        pts, single = _as_points(y)
        if self._jacobian is not None:
            out = np.asarray(self._jacobian(pts), dtype=float)
        else:
            out = _central_first(self._position, pts, self.fd_step, (3,))
        return out[0] if single else out

    def second(self, y):
        """d_ab X, shape (..., 3, 2, 2), symmetric in (a, b)."""
        pts, single = _as_points(y)
        if self._second is not None:
            out = np.asarray(self._second(pts), dtype=float)
        else:
            h = self.fd_step if self._jacobian is not None else max(self.fd_step, _STEP_FLOOR_2)
            jac = self._jacobian if self._jacobian is not None else (
                lambda p: _central_first(self._position, p, self.fd_step, (3,)))
            out = _central_first(jac, pts, h, (3, 2))
            out = 0.5 * (out + out.swapaxes(-1, -2))
        return out[0] if single else out

    def third(self, y):
        """d_abk X, shape (..., 3, 2, 2, 2), fully symmetric."""
        pts, single = _as_points(y)
        if self._third is not None:
            out = np.asarray(self._third(pts), dtype=float)
        else:
            h3 = max(self.fd_step, _STEP_FLOOR_3 * min(1.0, self.length_scale))
            out = _central_first(self.second, pts, h3, (3, 2, 2))
            out = _symmetrize_last3(out)
        return out[0] if single else out


def _central_first(f, pts, h, value_shape):
    """Central difference of a pointwise map, derivative index appended last."""
    n = pts.shape[0]
    out = np.empty((n,) + value_shape + (2,))
    for a in range(2):
        dp = np.zeros(2)
        dp[a] = h
        out[..., a] = (np.asarray(f(pts + dp)) - np.asarray(f(pts - dp))) / (2.0 * h)
    return out


def _symmetrize_last3(t):
    perms = [(0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0)]
    base = t.ndim - 3
    acc = np.zeros_like(t)
    for p in perms:
        order = tuple(range(base)) + tuple(base + i for i in p)
        acc += t.transpose(order)
    return acc / len(perms)


# ---------------------------------------------------------------------------
# builtin charts
# ---------------------------------------------------------------------------

def plate_chart(width=1.0, height=1.0):
    """Flat identity embedding (y1, y2, 0) on (0, width) x (0, height)."""

    def pos(y):
        out = np.zeros(y.shape[:-1] + (3,))
        out[..., 0] = y[..., 0]
        out[..., 1] = y[..., 1]
        return out

    def jac(y):
        out = np.zeros(y.shape[:-1] + (3, 2))
        out[..., 0, 0] = 1.0
        out[..., 1, 1] = 1.0
        return out

    def zeros(shape):
        return lambda y: np.zeros(y.shape[:-1] + shape)

    return SurfaceChart(pos, jac, zeros((3, 2, 2)), zeros((3, 2, 2, 2)),
                        domain=((0.0, width), (0.0, height)), name="plate")


def cylinder_chart(radius, axial_length=1.0, angle=np.pi / 2):
    """Cylinder (R cos t, R sin t, z) on (-L/2, L/2) x (0, d).

    Coordinates are y1 = z (axial) and y2 = t (angular).
    """
    R = float(radius)
    if R <= 0:
        raise GeometryError(f"cylinder radius must be positive, got {R}")
    if axial_length <= 0:
        raise GeometryError(f"cylinder axial length must be positive, got {axial_length}")
    if not 0.0 < angle <= 2 * np.pi:
        raise GeometryError(f"cylinder angle must lie in (0, 2*pi], got {angle}")

    def pos(y):
        t = y[..., 1]
        return np.stack([R * np.cos(t), R * np.sin(t), y[..., 0]], axis=-1)

    def jac(y):
        t = y[..., 1]
        out = np.zeros(y.shape[:-1] + (3, 2))
        out[..., 2, 0] = 1.0
        out[..., 0, 1] = -R * np.sin(t)
        out[..., 1, 1] = R * np.cos(t)
        return out

    def second(y):
        t = y[..., 1]
        out = np.zeros(y.shape[:-1] + (3, 2, 2))
        out[..., 0, 1, 1] = -R * np.cos(t)
        out[..., 1, 1, 1] = -R * np.sin(t)
        return out

    def third(y):
        t = y[..., 1]
        out = np.zeros(y.shape[:-1] + (3, 2, 2, 2))
        out[..., 0, 1, 1, 1] = R * np.sin(t)
        out[..., 1, 1, 1, 1] = -R * np.cos(t)
        return out

    return SurfaceChart(pos, jac, second, third,
                        domain=((-axial_length / 2, axial_length / 2), (0.0, angle)),
                        name="cylinder")


def graph_chart(f, grad, hess, third=None, domain=((0.0, 1.0), (0.0, 1.0)), name="graph"):
    """Graph surface (y1, y2, f(y1, y2)) with analytic derivatives of f.

    ``grad(y) -> (..., 2)``, ``hess(y) -> (..., 2, 2)``,
    ``third(y) -> (..., 2, 2, 2)`` (optional, finite differences otherwise).
    """

    def pos(y):
        return np.stack([y[..., 0], y[..., 1], np.asarray(f(y), dtype=float)], axis=-1)

    def jac(y):
        g = np.asarray(grad(y), dtype=float)
        out = np.zeros(y.shape[:-1] + (3, 2))
        out[..., 0, 0] = 1.0
        out[..., 1, 1] = 1.0
        out[..., 2, :] = g
        return out

    def second(y):
        h = np.asarray(hess(y), dtype=float)
        out = np.zeros(y.shape[:-1] + (3, 2, 2))
        out[..., 2, :, :] = h
        return out

    third_map = None
    if third is not None:
        def third_map(y):
            t = np.asarray(third(y), dtype=float)
            out = np.zeros(y.shape[:-1] + (3, 2, 2, 2))
            out[..., 2, :, :, :] = t
            return out

    return SurfaceChart(pos, jac, second, third_map, domain=domain, name=name)


def wavy_chart(seed=0, amplitude=0.15, waves=3, domain=((0.0, 1.0), (0.0, 1.0))):
    """Reproducible smooth non-flat benchmark chart.

    Graph of a random trigonometric sum; all derivatives are analytic, so the
    chart exercises nonzero curvature, Christoffel symbols and covariant
    curvature derivatives without finite-difference noise.
    """
    rng = np.random.default_rng(seed)
    amp = amplitude * rng.uniform(0.5, 1.0, waves) / waves
    p = rng.uniform(1.0, 5.0, waves)
    q = rng.uniform(1.0, 5.0, waves)
    phase = rng.uniform(0.0, 2 * np.pi, waves)

    def modes(y):
        return p * y[..., :1] + q * y[..., 1:2] + phase  # (..., waves)

    def f(y):
        return np.sin(modes(y)) @ amp

    def grad(y):
        c = np.cos(modes(y))
        return np.stack([c @ (amp * p), c @ (amp * q)], axis=-1)

    def hess(y):
        s = np.sin(modes(y))
        out = np.empty(y.shape[:-1] + (2, 2))
        out[..., 0, 0] = -s @ (amp * p * p)
        out[..., 0, 1] = -s @ (amp * p * q)
        out[..., 1, 0] = out[..., 0, 1]
        out[..., 1, 1] = -s @ (amp * q * q)
        return out

    def third(y):
        c = np.cos(modes(y))
        out = np.empty(y.shape[:-1] + (2, 2, 2))
        for i, wi in enumerate((p, q)):
            for j, wj in enumerate((p, q)):
                for k, wk in enumerate((p, q)):
                    out[..., i, j, k] = -c @ (amp * wi * wj * wk)
        return out

    return graph_chart(f, grad, hess, third, domain=domain, name=f"wavy(seed={seed})")


def tabulated_chart(path, fd_step=1e-6):
    """Chart from a plain-text table: rows ``y1 y2 X1 X2 X3`` on a rectangular grid.

    A quintic tensor spline interpolates each component; chart derivatives are
    spline derivatives, so difference quotients on the raw table are avoided.
    """
    from scipy.interpolate import RectBivariateSpline

    data = np.loadtxt(path)
    if data.ndim != 2 or data.shape[1] != 5:
        raise GeometryError(f"chart table {path!r} must have rows 'y1 y2 X1 X2 X3'")
    y1 = np.unique(data[:, 0])
    y2 = np.unique(data[:, 1])
    if y1.size * y2.size != data.shape[0]:
        raise GeometryError(f"chart table {path!r} is not a full rectangular grid")
    if y1.size < 6 or y2.size < 6:
        raise GeometryError(f"chart table {path!r} needs at least 6 points per direction")
    order = np.lexsort((data[:, 1], data[:, 0]))
    grids = data[order, 2:].reshape(y1.size, y2.size, 3)
    splines = [RectBivariateSpline(y1, y2, grids[:, :, c], kx=5, ky=5) for c in range(3)]

    def deriv(pts, dx, dy):
        return np.stack([s.ev(pts[..., 0], pts[..., 1], dx=dx, dy=dy) for s in splines], axis=-1)

    def pos(y):
        return deriv(y, 0, 0)

    def jac(y):
        return np.stack([deriv(y, 1, 0), deriv(y, 0, 1)], axis=-1)

    def second(y):
        out = np.empty(y.shape[:-1] + (3, 2, 2))
        for a in range(2):
            for b in range(2):
                out[..., a, b] = deriv(y, 2 - a - b, a + b)
        return out

    def third(y):
        d = {i: deriv(y, 3 - i, i) for i in range(4)}
        out = np.empty(y.shape[:-1] + (3, 2, 2, 2))
        for a in range(2):
            for b in range(2):
                for c in range(2):
                    out[..., a, b, c] = d[a + b + c]
        return out

    dom = ((float(y1[0]), float(y1[-1])), (float(y2[0]), float(y2[-1])))
    return SurfaceChart(pos, jac, second, third, domain=dom, fd_step=fd_step,
                        name=f"tabulated({path})")


def build_chart(spec):
    """Build a chart from a config-style mapping and verify it is an immersion.

    ``spec['kind']`` selects among ``plate``, ``cylinder``, ``wavy``, ``file``
    and ``custom`` (closures passed through).  The Jacobian is checked for
    rank 2 on a sample grid; a degenerate chart is rejected with the location
    of the failure.
    """
    if isinstance(spec, str):
        spec = {"kind": spec}
    kind = spec.get("kind")
    if kind == "plate":
        chart = plate_chart(spec.get("width", 1.0), spec.get("height", 1.0))
    elif kind == "cylinder":
        chart = cylinder_chart(spec["radius"], spec.get("axial_length", 1.0),
                               spec.get("angle", np.pi / 2))
    elif kind == "wavy":
        chart = wavy_chart(int(spec.get("seed", 0)), spec.get("amplitude", 0.15))
    elif kind == "file":
        chart = tabulated_chart(spec["path"], spec.get("fd_step", 1e-6))
    elif kind == "custom":
        chart = SurfaceChart(spec["position"], spec.get("jacobian"), spec.get("second"),
                             spec.get("third"), spec.get("domain", ((0, 1), (0, 1))),
                             spec.get("fd_step", 1e-6))
    else:
        raise GeometryError(f"unknown chart kind {kind!r}")
    check_immersion(chart)
    return chart


def check_immersion(chart, n=9):
    """Verify rank-2 Jacobian (sqrt(a) > 0) on an n x n interior sample grid."""
    pts = chart.sample_grid(n)
    jac = chart.jacobian(pts)
    normal = np.cross(jac[:, :, 0], jac[:, :, 1])
    area = np.linalg.norm(normal, axis=-1)
    tol = 1e-10 * chart.length_scale ** 2
    bad = np.nonzero(area <= tol)[0]
    if bad.size:
        loc = pts[bad[0]]
        raise DegenerateChartError(
            f"chart {chart.name!r} is degenerate: sqrt(a)={area[bad[0]]:.3e} "
            f"<= {tol:.3e} at y=({loc[0]:.6g}, {loc[1]:.6g})", location=tuple(loc))
    return True


# ---------------------------------------------------------------------------
# geometry cache
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GeometryCache:
    """Per-point geometric quantities at fixed sample points.

    Index conventions (Greek indices run over {0, 1}):

    * ``gamma[p, k, a, b]``  = G^k_ab
    * ``b_mixed[p, b, a]``   = b^b_a
    * ``b_cov_deriv[p, k, b, a]`` = b^k_b|_a
    * ``basis_cov[p, i, :]`` = a_i,  ``basis_con[p, i, :]`` = a^i
    * ``q_local[p]``         = matrix with columns (a^1, a^2, a^3)
    """

    points: np.ndarray
    basis_cov: np.ndarray
    basis_con: np.ndarray
    metric_cov: np.ndarray
    metric_con: np.ndarray
    sqrt_a: np.ndarray
    curv_cov: np.ndarray
    b_mixed: np.ndarray
    gamma: np.ndarray
    b_cov_deriv: np.ndarray
    q_local: np.ndarray

    def __len__(self):
        return self.points.shape[0]

    def take(self, idx):
        """Sub-cache at a subset of points."""
        sel = np.atleast_1d(idx)
        return GeometryCache(*[getattr(self, f.name)[sel] for f in
                               self.__dataclass_fields__.values()])


def geometry_at(chart, y, with_third=True):
    """Build the :class:`GeometryCache` for ``chart`` at points ``y``.

    ``with_third=False`` skips the covariant curvature derivative (and with it
    any need for third derivatives of the chart).
    """
    pts, _ = _as_points(y)
    jac = chart.jacobian(pts)                      # (n, 3, 2)
    a1, a2 = jac[:, :, 0], jac[:, :, 1]
    normal = np.cross(a1, a2)
    n_norm = np.linalg.norm(normal, axis=-1)
    tol = 1e-10 * chart.length_scale ** 2
    bad = np.nonzero(n_norm <= tol)[0]
    if bad.size:
        loc = pts[bad[0]]
        raise DegenerateChartError(
            f"chart {chart.name!r} degenerate at y=({loc[0]:.6g}, {loc[1]:.6g})",
            location=tuple(loc))
    a3 = normal / n_norm[:, None]

    basis_cov = np.stack([a1, a2, a3], axis=1)     # (n, 3, 3) rows a_i
    tangent = basis_cov[:, :2]                     # (n, 2, 3)
    metric_cov = np.einsum("pax,pbx->pab", tangent, tangent)
    det = metric_cov[:, 0, 0] * metric_cov[:, 1, 1] - metric_cov[:, 0, 1] ** 2
    sqrt_a = np.sqrt(det)
    metric_con = np.empty_like(metric_cov)
    metric_con[:, 0, 0] = metric_cov[:, 1, 1]
    metric_con[:, 1, 1] = metric_cov[:, 0, 0]
    metric_con[:, 0, 1] = -metric_cov[:, 0, 1]
    metric_con[:, 1, 0] = -metric_cov[:, 1, 0]
    metric_con /= det[:, None, None]

    con_tangent = np.einsum("pab,pbx->pax", metric_con, tangent)
    basis_con = np.concatenate([con_tangent, a3[:, None, :]], axis=1)

    sec = chart.second(pts)                        # (n, 3, a, b) = d_b a_a
    curv_cov = np.einsum("px,pxab->pab", a3, sec)
    b_mixed = np.einsum("pbk,pka->pba", metric_con, curv_cov)
    gamma = np.einsum("pkx,pxab->pkab", con_tangent, sec)

    if with_third:
        b_cov_deriv = _curvature_cov_deriv(chart, pts, basis_cov, basis_con, metric_cov,
                                           metric_con, curv_cov, b_mixed, gamma, sec, a3)
    else:
        b_cov_deriv = np.zeros_like(gamma)

    q_local = basis_con.swapaxes(1, 2).copy()      # columns a^1, a^2, a^3
    return GeometryCache(points=pts, basis_cov=basis_cov, basis_con=basis_con,
                         metric_cov=metric_cov, metric_con=metric_con, sqrt_a=sqrt_a,
                         curv_cov=curv_cov, b_mixed=b_mixed, gamma=gamma,
                         b_cov_deriv=b_cov_deriv, q_local=q_local)


def _curvature_cov_deriv(chart, pts, basis_cov, basis_con, metric_cov, metric_con,
                         curv_cov, b_mixed, gamma, sec, a3):
    """b^k_b|_a via the product rule, using third chart derivatives."""
    third = chart.third(pts)                       # (n, 3, a, b, c)
    tangent = basis_cov[:, :2]

    # d_c a_ab = d_c a_a . a_b + a_a . d_c a_b
    d_metric = (np.einsum("pxac,pbx->pabc", sec, tangent)
                + np.einsum("pax,pxbc->pabc", tangent, sec))
    # d_c A^c = -A^c (d_c A_c) A^c
    d_con = -np.einsum("pak,pklc,plb->pabc", metric_con, d_metric, metric_con)

    # d_c a_3: differentiate the normalized cross product (tangential part only,
    # since |a_3| = 1 makes a_3 . d_c a_3 = 0)
    n = pts.shape[0]
    a1, a2 = tangent[:, 0], tangent[:, 1]
    n_norm = np.linalg.norm(np.cross(a1, a2), axis=-1)
    d_a3 = np.empty((n, 3, 2))
    for c in range(2):
        dn = np.cross(sec[:, :, 0, c], a2) + np.cross(a1, sec[:, :, 1, c])
        proj = dn - a3 * np.einsum("px,px->p", a3, dn)[:, None]
        d_a3[:, :, c] = proj / n_norm[:, None]

    # d_c b_ab = d_c a_3 . d_b a_a + a_3 . d_bc a_a
    d_curv = (np.einsum("pxc,pxab->pabc", d_a3, sec)
              + np.einsum("px,pxabc->pabc", a3, third))
    # d_c b^k_b = sum_t (d_c a^kt) b_tb + a^kt d_c b_tb
    d_bmix = (np.einsum("pktc,ptb->pkbc", d_con, curv_cov)
              + np.einsum("pkt,ptbc->pkbc", metric_con, d_curv))

    # b^k_b|_a = d_a b^k_b + G^k_at b^t_b - G^t_ba b^k_t
    return (d_bmix
            + np.einsum("pkat,ptb->pkba", gamma, b_mixed)
            - np.einsum("ptba,pkt->pkba", gamma, b_mixed))


# ---------------------------------------------------------------------------
# single-point convenience wrappers
# ---------------------------------------------------------------------------

def fundamental_forms(chart, y):
    """(A_c, A^c, sqrt(a)) at a point or point array."""
    g = geometry_at(chart, y, with_third=False)
    if np.asarray(y).ndim == 1:
        return g.metric_cov[0], g.metric_con[0], g.sqrt_a[0]
    return g.metric_cov, g.metric_con, g.sqrt_a


def curvature(chart, y):
    """(B_c, B_mixed) with B_mixed[b, a] = b^b_a."""
    g = geometry_at(chart, y, with_third=False)
    if np.asarray(y).ndim == 1:
        return g.curv_cov[0], g.b_mixed[0]
    return g.curv_cov, g.b_mixed


def christoffel(chart, y):
    """G^k_ab as array [k, a, b]; G^3_ab equals the covariant curvature."""
    g = geometry_at(chart, y, with_third=False)
    if np.asarray(y).ndim == 1:
        return g.gamma[0], g.curv_cov[0]
    return g.gamma, g.curv_cov


def curvature_cov_derivative(chart, y):
    """b^k_b|_a as array [k, b, a]."""
    g = geometry_at(chart, y, with_third=True)
    if np.asarray(y).ndim == 1:
        return g.b_cov_deriv[0]
    return g.b_cov_deriv
