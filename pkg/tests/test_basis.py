import numpy as np
import pytest

from poroshell import geometry as geo
from poroshell.basis import (cylinder_reduced_basis, general_multiplier_basis,
                             plate_deflection_basis)
from poroshell.material import FormCoefficients, MaterialParams, nondimensionalize
from poroshell.solver import assemble_bending

P = MaterialParams(mu=1e9, lam=1e9, alpha=0.9, beta_g=5e-10, permeability=1e-14,
                   viscosity=1e-3, length=1.0, thickness=0.01)
COEFS = FormCoefficients.dimensionless(nondimensionalize(P))


def test_plate_basis_membrane_strain_vanishes():
    basis = plate_deflection_basis(geo.plate_chart(), (4, 3), quad_order=3)
    assert basis.max_gamma() == 0.0


def test_plate_basis_clamped_boundary():
    basis = plate_deflection_basis(geo.plate_chart(), (4, 4))
    rng = np.random.default_rng(0)
    field = basis.displacement_field(rng.normal(size=basis.ndof))
    edge = np.stack([np.zeros(7), np.linspace(0, 1, 7)], axis=-1)
    vals = field.value(edge)
    grads = field.gradient(edge)
    assert np.abs(vals).max() < 1e-12
    assert np.abs(grads[:, 2, 0]).max() < 1e-12   # normal slope on the clamped edge


def test_plate_partial_clamping_frees_edges():
    basis = plate_deflection_basis(geo.plate_chart(), (4, 4),
                                   clamped_edges=("y1min", "y2min"))
    rng = np.random.default_rng(1)
    field = basis.displacement_field(rng.normal(size=basis.ndof))
    free_edge = np.stack([np.ones(5), np.linspace(0.1, 0.9, 5)], axis=-1)
    clamped_edge = np.stack([np.zeros(5), np.linspace(0.1, 0.9, 5)], axis=-1)
    assert np.abs(field.value(free_edge)).max() > 1e-6
    assert np.abs(field.value(clamped_edge)).max() < 1e-12


def test_plate_stiffness_spd():
    basis = plate_deflection_basis(geo.plate_chart(), (4, 4))
    K = assemble_bending(basis, COEFS).toarray()
    eigs = np.linalg.eigvalsh(K)
    assert eigs.min() > 0.0


def test_cylinder_reduced_basis_inextensional():
    chart = geo.cylinder_chart(1.3, 1.0, 2.1)
    basis = cylinder_reduced_basis(chart, n_elems=5, quad_theta=6, quad_z=4)
    assert basis.max_gamma() < 1e-10
    K = assemble_bending(basis, COEFS).toarray()
    eigs = np.linalg.eigvalsh(K)
    assert eigs.min() > 0.0   # linear independence + SPD Gram


def test_cylinder_full_angle_rejected():
    chart = geo.cylinder_chart(1.0, 1.0, 2 * np.pi)
    with pytest.raises(ValueError, match="generalized membrane"):
        cylinder_reduced_basis(chart, n_elems=4)


def test_cylinder_field_reconstruction_matches_quad_arrays():
    chart = geo.cylinder_chart(1.3, 1.0, 2.1)
    basis = cylinder_reduced_basis(chart, n_elems=5, quad_theta=6, quad_z=4)
    rng = np.random.default_rng(3)
    u = rng.normal(size=basis.ndof)
    field = basis.displacement_field(u)
    vals = field.value(basis.quad_points)
    direct = np.zeros((basis.n_quad, 3))
    for el in basis.elements:
        direct[el.sl] += np.einsum("k,kqc->qc", u[el.dofs], el.phi)
    assert np.abs(vals - direct).max() < 1e-11 * max(1.0, np.abs(direct).max())


def test_multiplier_basis_constraint_matrix_consistent():
    chart = geo.wavy_chart(2, amplitude=0.1)
    basis = general_multiplier_basis(chart, (3, 3), quad_order=3)
    rng = np.random.default_rng(4)
    u = rng.normal(size=basis.ndof)
    gam = basis.gamma_at_quad(u)
    wsa = basis.weighted_measure
    bu = basis.constraint @ u
    for e, el in enumerate(basis.elements):
        w = wsa[el.sl]
        assert abs(bu[3 * e] - w @ gam[el.sl, 0, 0]) < 1e-12
        assert abs(bu[3 * e + 1] - w @ gam[el.sl, 1, 1]) < 1e-12
        assert abs(bu[3 * e + 2] - 2.0 * (w @ gam[el.sl, 0, 1])) < 1e-12


def test_multiplier_basis_bending_symmetric_on_curved_chart():
    basis = general_multiplier_basis(geo.wavy_chart(1, amplitude=0.2), (3, 3))
    K = assemble_bending(basis, COEFS)
    assert abs(K - K.T).max() <= 1e-12 * abs(K).max()
