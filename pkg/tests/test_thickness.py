import numpy as np
import pytest

from poroshell.material import MaterialParams, nondimensionalize
from poroshell.thickness import ThicknessGrid, ThicknessGridError, assemble_thickness_diffusion


def test_weights_integrate_constants_and_linears_exactly():
    for n in (3, 16, 64, 65):
        g = ThicknessGrid(n)
        assert abs(g.mean_weights.sum() - 1.0) < 1e-14
        assert abs(g.moment_weights.sum()) < 1e-15
        assert abs(g.moment(g.nodes) - 1.0 / 12.0) < 1e-14
        assert np.abs(g.nodes + g.nodes[::-1]).max() < 1e-15


def test_physical_half_thickness():
    ell = 0.02
    g = ThicknessGrid(21, half=ell / 2)
    assert abs(g.mean_weights.sum() - ell) < 1e-16
    assert abs(g.moment(g.nodes) - ell ** 3 / 12.0) < 1e-18


def test_stiffness_neumann_nullspace():
    g = ThicknessGrid(33)
    assert np.abs(g.stiffness.sum(axis=1)).max() == 0.0


def test_too_few_nodes_rejected():
    with pytest.raises(ThicknessGridError):
        ThicknessGrid(2)


def test_neumann_spectrum_matches_continuous_family():
    beta_bar = 1.3
    g = ThicknessGrid(64)
    lam = g.neumann_eigenvalues(storage=beta_bar)
    assert abs(lam[0]) < 1e-9
    # family (k*pi)^2/beta_bar: odd modes pi^2(2j-1)^2, even modes (2*pi*j)^2
    for k in range(1, 6):
        expect = (k * np.pi) ** 2 / beta_bar
        assert abs(lam[k] - expect) / expect < 0.01
    assert abs(lam[1] - np.pi ** 2 / beta_bar) / (np.pi ** 2 / beta_bar) < 0.01


def test_assemble_thickness_diffusion_weighting():
    p = MaterialParams(mu=1e9, lam=1e9, alpha=0.9, beta_g=5e-10, permeability=1e-14,
                       viscosity=1e-3, length=1.0, thickness=0.01)
    dp = nondimensionalize(p)
    g = ThicknessGrid(17)
    M, D = assemble_thickness_diffusion(g, dp)
    assert np.abs(M - dp.beta_bar * g.mass).max() == 0.0
    assert np.abs(D - g.stiffness).max() == 0.0


def test_flux_vector_cancels_for_constant_test_function():
    g = ThicknessGrid(9)
    assert g.face_vector.sum() == 0.0
    assert g.face_vector[0] == 1.0 and g.face_vector[-1] == -1.0
