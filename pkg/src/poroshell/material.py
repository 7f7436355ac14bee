"""Material parameters, scaling, and elasticity tensors.

Dimensional inputs are the isotropic poroelastic constants plus the two
geometric lengths.  Nondimensionalization follows the transversal diffusion
time scale T = eta*ell^2/(k*mu) (diffusion across the thickness), pressure
scale P = U*mu/L, and stress scale mu, giving

    lam_t = lam/mu,   beta = beta_g*mu,   eps = ell/L.

Two elasticity tensors appear:

* the full isotropic tensor on 3x3 symmetric matrices,
      C E = lam_t tr(E) I + 2 E,
* the plane-stress-reduced shell tensor on 2x2 symmetric matrices,
      Cs E = 2*mu_t*lam_t/(lam_t + 2*mu_t) tr(E) I + 2*mu_t E,

with mu_t = 1 after scaling (kept as a parameter so the dimensional and
dimensionless code paths share one implementation).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "MaterialError",
    "MaterialParams",
    "DimensionlessParams",
    "nondimensionalize",
    "redimensionalize",
    "shell_tensor_apply",
    "full_tensor_apply",
    "FormCoefficients",
]


class MaterialError(ValueError):
    """Invalid physical parameters."""


@dataclass(frozen=True)
class MaterialParams:
    """Dimensional constants (SI units).

    mu, lam      Lame parameters [Pa]
    alpha        effective stress coefficient [-]
    beta_g       inverse Biot modulus [1/Pa]
    permeability [m^2], viscosity [Pa s]
    length       midsurface length scale L [m]
    thickness    shell thickness ell [m]
    displacement characteristic displacement U [m]
    """

    mu: float
    lam: float
    alpha: float
    beta_g: float
    permeability: float
    viscosity: float
    length: float
    thickness: float
    displacement: float = 1.0

    def __post_init__(self):
        errs = []
        for name in ("mu", "permeability", "viscosity", "length", "thickness", "displacement"):
            if getattr(self, name) <= 0:
                errs.append(f"{name} must be positive, got {getattr(self, name)}")
        for name in ("lam", "alpha", "beta_g"):
            if getattr(self, name) < 0:
                errs.append(f"{name} must be nonnegative, got {getattr(self, name)}")
        if self.thickness >= self.length:
            errs.append(f"thickness {self.thickness} must be small compared to length {self.length}")
        if self.alpha == 0 and self.beta_g == 0:
            errs.append("alpha and beta_g cannot both vanish: the pressure equation "
                        "would lose its time derivative (no storage, no coupling)")
        if errs:
            raise MaterialError("; ".join(errs))


@dataclass(frozen=True)
class DimensionlessParams:
    """Scaled constants plus the reference scales needed to invert the scaling."""

    lam_t: float            # lam/mu
    beta: float             # beta_g*mu
    eps: float              # ell/L
    alpha: float
    terzaghi_time: float    # eta*ell^2/(k*mu) [s]
    pressure_scale: float   # U*mu/L [Pa]
    mu_t: float = 1.0
    # reference scales (anchors for redimensionalization)
    mu_ref: float = 1.0
    length_ref: float = 1.0
    viscosity_ref: float = 1.0
    displacement_ref: float = 1.0

    @property
    def beta_bar(self):
        """Effective storage beta + alpha^2/(lam_t + 2*mu_t); positive whenever
        the material has either storage or coupling."""
        return self.beta + self.alpha ** 2 / (self.lam_t + 2.0 * self.mu_t)


def nondimensionalize(p: MaterialParams) -> DimensionlessParams:
    """Derive the dimensionless block from dimensional constants."""
    return DimensionlessParams(
        lam_t=p.lam / p.mu,
        beta=p.beta_g * p.mu,
        eps=p.thickness / p.length,
        alpha=p.alpha,
        terzaghi_time=p.viscosity * p.thickness ** 2 / (p.permeability * p.mu),
        pressure_scale=p.displacement * p.mu / p.length,
        mu_ref=p.mu,
        length_ref=p.length,
        viscosity_ref=p.viscosity,
        displacement_ref=p.displacement,
    )


def redimensionalize(dp: DimensionlessParams) -> MaterialParams:
    """Invert the scaling through the defining ratios and reference scales."""
    ell = dp.eps * dp.length_ref
    return MaterialParams(
        mu=dp.mu_ref,
        lam=dp.lam_t * dp.mu_ref,
        alpha=dp.alpha,
        beta_g=dp.beta / dp.mu_ref,
        permeability=dp.viscosity_ref * ell ** 2 / (dp.terzaghi_time * dp.mu_ref),
        viscosity=dp.viscosity_ref,
        length=dp.length_ref,
        thickness=ell,
        displacement=dp.displacement_ref,
    )


def _apply_iso(E, trace_coef, shear_coef):
    E = np.asarray(E, dtype=float)
    tr = np.trace(E, axis1=-2, axis2=-1)
    eye = np.eye(E.shape[-1])
    return trace_coef * tr[..., None, None] * eye + shear_coef * E


def shell_tensor_apply(E, dp_or_lam_t, mu_t=None):
    """Shell elasticity tensor on 2x2 symmetric matrices.

    Accepts a :class:`DimensionlessParams` (or anything with lam_t, mu_t) or a
    plain ``lam_t`` with optional ``mu_t``.  For the dimensional variant pass
    ``lam_t=lam`` and ``mu_t=mu``.
    """
    if hasattr(dp_or_lam_t, "lam_t"):
        lam_t, mu_t = dp_or_lam_t.lam_t, dp_or_lam_t.mu_t
    else:
        lam_t = float(dp_or_lam_t)
        mu_t = 1.0 if mu_t is None else float(mu_t)
    return _apply_iso(E, 2.0 * mu_t * lam_t / (lam_t + 2.0 * mu_t), 2.0 * mu_t)


def full_tensor_apply(E, dp_or_lam_t):
    """Full isotropic tensor on 3x3 symmetric matrices: lam_t tr(E) I + 2 E."""
    lam_t = dp_or_lam_t.lam_t if hasattr(dp_or_lam_t, "lam_t") else float(dp_or_lam_t)
    return _apply_iso(E, lam_t, 2.0)


@dataclass(frozen=True)
class FormCoefficients:
    """Coefficients of the coupled variational forms in one unit system.

    bend      prefactor of the bending form (thickness^3/12, or 1/12 scaled)
    mu_like, lam_like   arguments of the shell tensor
    couple    pressure-moment / strain-rate coupling coefficient
    storage   coefficient of the pressure time derivative
    diffusion coefficient of the transversal pressure stiffness
    half_thickness      pressure domain is (-half_thickness, half_thickness)
    """

    bend: float
    mu_like: float
    lam_like: float
    couple: float
    storage: float
    diffusion: float
    half_thickness: float

    @classmethod
    def dimensionless(cls, dp: DimensionlessParams):
        lam_t, mu_t = dp.lam_t, dp.mu_t
        return cls(bend=1.0 / 12.0, mu_like=mu_t, lam_like=lam_t,
                   couple=2.0 * mu_t * dp.alpha / (lam_t + 2.0 * mu_t),
                   storage=dp.beta + dp.alpha ** 2 / (lam_t + 2.0 * mu_t),
                   diffusion=1.0, half_thickness=0.5)

    @classmethod
    def dimensional(cls, p: MaterialParams):
        mu, lam = p.mu, p.lam
        return cls(bend=p.thickness ** 3 / 12.0, mu_like=mu, lam_like=lam,
                   couple=2.0 * mu * p.alpha / (lam + 2.0 * mu),
                   storage=p.beta_g + p.alpha ** 2 / (lam + 2.0 * mu),
                   diffusion=p.permeability / p.viscosity,
                   half_thickness=p.thickness / 2.0)

    def shell_tensor(self, E):
        return shell_tensor_apply(E, self.lam_like, self.mu_like)
