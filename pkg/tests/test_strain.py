import numpy as np
import pytest

from poroshell import geometry as geo
from poroshell import strain
from helpers import (polynomial_displacement, reference_bending_strain,
                     reference_membrane_strain)


@pytest.fixture(scope="module")
def cyl_setup():
    R, L, d = 1.7, 1.3, 2.2
    chart = geo.cylinder_chart(R, L, d)
    g = geo.geometry_at(chart, chart.sample_grid(5))
    return R, chart, g


def cylinder_closed_form_strains(R, comps, pts):
    """Appendix-style formulas in physical cylinder components."""
    v1, v2, v3 = comps
    vz = lambda d1, d2: v1(pts, d1, d2)
    vth = lambda d1, d2: v2(pts, d1, d2) / R
    vr = lambda d1, d2: -v3(pts, d1, d2)
    gam = np.empty(pts.shape[:-1] + (2, 2))
    gam[..., 0, 0] = vz(1, 0)
    gam[..., 0, 1] = 0.5 * (R * vth(1, 0) + vz(0, 1))
    gam[..., 1, 0] = gam[..., 0, 1]
    gam[..., 1, 1] = R * vth(0, 1) + R * vr(0, 0)
    rho = np.empty(pts.shape[:-1] + (2, 2))
    rho[..., 0, 0] = -vr(2, 0)
    rho[..., 0, 1] = -vr(1, 1) + vth(1, 0)
    rho[..., 1, 0] = rho[..., 0, 1]
    rho[..., 1, 1] = -vr(0, 2) + 2.0 * vth(0, 1) + vr(0, 0)
    return gam, rho


@pytest.mark.parametrize("trial", range(20))
def test_cylinder_strains_match_closed_forms(cyl_setup, trial):
    R, chart, g = cyl_setup
    rng = np.random.default_rng(100 + trial)
    v, comps = polynomial_displacement(rng, degree=3)
    gam = strain.membrane_strain(v, g)
    rho = strain.bending_strain(v, g)
    gam_ref, rho_ref = cylinder_closed_form_strains(R, comps, g.points)
    assert np.abs(gam - gam_ref).max() < 1e-9
    assert np.abs(rho - rho_ref).max() < 1e-9


def test_plate_reductions_exact():
    chart = geo.plate_chart()
    g = geo.geometry_at(chart, chart.sample_grid(5))
    rng = np.random.default_rng(7)
    v, comps = polynomial_displacement(rng)
    gam = strain.membrane_strain(v, g)
    rho = strain.bending_strain(v, g)
    grad = v.gradient(g.points)
    sym = 0.5 * (grad[:, :2, :] + grad[:, :2, :].swapaxes(1, 2))
    assert np.abs(gam - sym).max() < 1e-12
    assert np.abs(rho - v.hessian3(g.points)).max() < 1e-12


def test_plate_pure_normal_constant_has_zero_membrane_strain():
    chart = geo.plate_chart()
    g = geo.geometry_at(chart, chart.sample_grid(4))
    c = 0.37
    v = strain.CallableDisplacement(
        lambda y: np.stack([0 * y[..., 0], 0 * y[..., 0], c + 0 * y[..., 0]], axis=-1),
        lambda y: np.zeros(y.shape[:-1] + (3, 2)),
        lambda y: np.zeros(y.shape[:-1] + (2, 2)))
    assert np.abs(strain.membrane_strain(v, g)).max() == 0.0


@pytest.mark.parametrize("seed", [0, 1])
def test_strains_match_independent_reference(seed):
    chart = geo.wavy_chart(seed, amplitude=0.3)
    g = geo.geometry_at(chart, chart.sample_grid(3))
    rng = np.random.default_rng(seed)
    v, _ = polynomial_displacement(rng)
    gam = strain.membrane_strain(v, g)
    rho = strain.bending_strain(v, g)
    for p in range(len(g)):
        assert np.abs(gam[p] - reference_membrane_strain(v, g, p)).max() < 1e-10
        assert np.abs(rho[p] - reference_bending_strain(v, g, p)).max() < 1e-10


def test_bending_strain_symmetric_both_index_orders():
    chart = geo.wavy_chart(3, amplitude=0.25)
    g = geo.geometry_at(chart, chart.sample_grid(4))
    rng = np.random.default_rng(11)
    v, _ = polynomial_displacement(rng)
    rho = strain.bending_strain(v, g)
    assert np.abs(rho - rho.swapaxes(1, 2)).max() < 1e-10


def test_strain_linearity():
    chart = geo.wavy_chart(2)
    g = geo.geometry_at(chart, chart.sample_grid(3))
    rng = np.random.default_rng(5)
    v, cv = polynomial_displacement(rng)
    w, cw = polynomial_displacement(rng)
    a, b = 0.7, -1.3

    def lc(y):
        return a * v.value(y) + b * w.value(y)

    combo = strain.CallableDisplacement(
        lc, lambda y: a * v.gradient(y) + b * w.gradient(y),
        lambda y: a * v.hessian3(y) + b * w.hessian3(y))
    gam = strain.membrane_strain(combo, g)
    rho = strain.bending_strain(combo, g)
    gam_lc = a * strain.membrane_strain(v, g) + b * strain.membrane_strain(w, g)
    rho_lc = a * strain.bending_strain(v, g) + b * strain.bending_strain(w, g)
    assert np.abs(gam - gam_lc).max() < 1e-12
    assert np.abs(rho - rho_lc).max() < 1e-12


# ---------------------------------------------------------------------------
# covariant divergences
# ---------------------------------------------------------------------------

def test_divergence_constant_tensor_on_plate_vanishes():
    chart = geo.plate_chart()
    g = geo.geometry_at(chart, chart.sample_grid(4), with_third=False)
    n0 = np.array([[1.0, 0.3], [0.3, -2.0]])
    field = strain.SurfaceTensorField(
        lambda pts: np.broadcast_to(n0, pts.shape[:-1] + (2, 2)).copy())
    assert np.abs(strain.covariant_divergence(field, g)).max() == 0.0


def test_divergence_on_cylinder_reduces_to_plain_divergence():
    # all Christoffel symbols vanish on the cylinder chart
    chart = geo.cylinder_chart(1.4, 1.0, 2.0)
    g = geo.geometry_at(chart, chart.sample_grid(5), with_third=False)

    def value(pts):
        z, t = pts[..., 0], pts[..., 1]
        out = np.empty(pts.shape[:-1] + (2, 2))
        out[..., 0, 0] = np.sin(z) * np.cos(t)
        out[..., 0, 1] = z * t
        out[..., 1, 0] = z * t
        out[..., 1, 1] = np.cos(z + t)
        return out

    field = strain.SurfaceTensorField(value, fd_step=1e-6)
    div = strain.covariant_divergence(field, g)
    z, t = g.points[:, 0], g.points[:, 1]
    plain = np.stack([np.cos(z) * np.cos(t) + z, t - np.sin(z + t)], axis=-1)
    assert np.abs(div - plain).max() < 1e-8


def test_second_divergence_of_linear_tensor_on_plate_vanishes():
    chart = geo.plate_chart()
    pts = chart.sample_grid(4, margin=0.2)

    def value(p):
        out = np.empty(p.shape[:-1] + (2, 2))
        out[..., 0, 0] = 2.0 * p[..., 0] + p[..., 1]
        out[..., 0, 1] = p[..., 0] - p[..., 1]
        out[..., 1, 0] = out[..., 0, 1]
        out[..., 1, 1] = 3.0 * p[..., 1]
        return out

    # gradient[a, b, c] = d_c n_ab
    grad_const = np.array([[[2.0, 1.0], [1.0, -1.0]], [[1.0, -1.0], [0.0, 3.0]]])

    field = strain.SurfaceTensorField(
        value, lambda p: np.broadcast_to(grad_const, p.shape[:-1] + (2, 2, 2)).copy())
    div2 = strain.second_covariant_divergence(field, chart, pts)
    assert np.abs(div2).max() < 1e-8
