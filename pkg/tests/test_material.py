import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from poroshell.material import (FormCoefficients, MaterialError,
                                MaterialParams, full_tensor_apply, nondimensionalize,
                                redimensionalize, shell_tensor_apply)


def _params(**kw):
    base = dict(mu=1e9, lam=1e9, alpha=0.9, beta_g=5e-10, permeability=1e-14,
                viscosity=1e-3, length=1.0, thickness=0.01)
    base.update(kw)
    return MaterialParams(**base)


def test_equal_moduli_gives_unit_ratio():
    assert nondimensionalize(_params(mu=1e9, lam=1e9)).lam_t == 1.0


def test_transversal_diffusion_time_direct_evaluation():
    # eta * ell^2 / (k * mu) with eta=1e-3, ell=1e-2, k=1e-14, mu=1e9
    dp = nondimensionalize(_params(mu=1e9, viscosity=1e-3, thickness=1e-2,
                                   permeability=1e-14, length=1.0))
    expected = 1e-3 * (1e-2) ** 2 / (1e-14 * 1e9)
    assert abs(dp.terzaghi_time - expected) < 1e-12 * expected
    assert abs(expected - 1e-2) < 1e-15


def test_thickness_ratio():
    assert abs(nondimensionalize(_params(thickness=0.01, length=1.0)).eps - 0.01) < 1e-15


@settings(max_examples=40, deadline=None)
@given(mu=st.floats(1e6, 1e12), lam_ratio=st.floats(0.0, 10.0),
       alpha=st.floats(0.0, 1.0), beta_g=st.floats(1e-12, 1e-8),
       k=st.floats(1e-18, 1e-10), eta=st.floats(1e-4, 1.0),
       ell_ratio=st.floats(1e-4, 0.2))
def test_nondimensionalize_roundtrip(mu, lam_ratio, alpha, beta_g, k, eta, ell_ratio):
    p = MaterialParams(mu=mu, lam=lam_ratio * mu, alpha=alpha, beta_g=beta_g,
                       permeability=k, viscosity=eta, length=2.0,
                       thickness=2.0 * ell_ratio, displacement=0.3)
    back = redimensionalize(nondimensionalize(p))
    for name in ("mu", "lam", "alpha", "beta_g", "permeability", "viscosity",
                 "length", "thickness", "displacement"):
        a, b = getattr(p, name), getattr(back, name)
        assert abs(a - b) <= 1e-12 * max(abs(a), 1.0)


def test_validation_rejects_nonpositive():
    with pytest.raises(MaterialError):
        _params(mu=-1.0)
    with pytest.raises(MaterialError):
        _params(permeability=0.0)
    with pytest.raises(MaterialError):
        _params(thickness=2.0)    # not thin


def test_both_coupling_and_storage_zero_rejected():
    with pytest.raises(MaterialError, match="time derivative"):
        _params(alpha=0.0, beta_g=0.0)


def test_incompressible_constituents_allowed():
    p = _params(beta_g=0.0, alpha=0.5)
    dp = nondimensionalize(p)
    assert dp.beta == 0.0
    assert dp.beta_bar > 0.0


def test_beta_bar_definition():
    dp = nondimensionalize(_params(alpha=0.8, beta_g=2e-10, mu=1e9, lam=3e9))
    assert abs(dp.beta_bar - (0.2 + 0.64 / (3.0 + 2.0))) < 1e-14


# ---------------------------------------------------------------------------
# elasticity tensors
# ---------------------------------------------------------------------------

def test_shell_tensor_identity_input():
    out = shell_tensor_apply(np.eye(2), 1.0, 1.0)
    assert np.abs(out - (10.0 / 3.0) * np.eye(2)).max() < 1e-14


def test_shell_tensor_zero_and_no_trace_coupling():
    assert np.abs(shell_tensor_apply(np.zeros((2, 2)), 1.0)).max() == 0.0
    E = np.array([[0.3, -1.2], [-1.2, 2.0]])
    assert np.abs(shell_tensor_apply(E, 0.0) - 2.0 * E).max() < 1e-14


def test_full_tensor_identity_and_traceless():
    assert np.abs(full_tensor_apply(np.eye(3), 1.0) - 5.0 * np.eye(3)).max() < 1e-14
    E = np.diag([1.0, -2.0, 1.0])
    assert np.abs(full_tensor_apply(E, 1.7) - 2.0 * E).max() < 1e-14


@settings(max_examples=30, deadline=None)
@given(data=st.lists(st.floats(-5, 5), min_size=6, max_size=6),
       lam_t=st.floats(0.0, 10.0))
def test_tensor_symmetry_and_coercivity(data, lam_t):
    E = np.array([[data[0], data[1], data[2]],
                  [data[1], data[3], data[4]],
                  [data[2], data[4], data[5]]])
    F = np.roll(E, 1, axis=(0, 1))
    F = 0.5 * (F + F.T)
    CE, CF = full_tensor_apply(E, lam_t), full_tensor_apply(F, lam_t)
    assert abs(np.tensordot(CE, F) - np.tensordot(CF, E)) < 1e-10 * (1 + lam_t)
    assert np.tensordot(CE, E) >= 2.0 * np.sum(E * E) - 1e-10


def test_dimensional_shell_tensor_is_scaled_twin():
    mu, lam = 3e9, 2e9
    E = np.array([[1.0, 0.2], [0.2, -0.5]])
    dim = shell_tensor_apply(E, lam, mu)
    scaled = mu * shell_tensor_apply(E, lam / mu, 1.0)
    assert np.abs(dim - scaled).max() < 1e-6 * np.abs(dim).max()


def test_form_coefficients_consistency():
    p = _params()
    dp = nondimensionalize(p)
    cd = FormCoefficients.dimensional(p)
    cl = FormCoefficients.dimensionless(dp)
    assert abs(cd.bend - p.thickness ** 3 / 12.0) < 1e-20
    assert abs(cl.bend - 1.0 / 12.0) < 1e-15
    assert abs(cd.couple - 2 * p.mu * p.alpha / (p.lam + 2 * p.mu)) < 1e-12
    assert abs(cl.couple - 2 * dp.alpha / (dp.lam_t + 2)) < 1e-15
    assert abs(cl.storage - dp.beta_bar) < 1e-15
    assert cd.diffusion == p.permeability / p.viscosity
    assert cl.half_thickness == 0.5
    assert cd.half_thickness == p.thickness / 2.0
