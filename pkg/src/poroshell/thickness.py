"""Transversal pressure grid across the shell thickness.

The effective pressure equation is parabolic only in the normal direction, so
each midsurface node carries an independent one-dimensional problem on the
interval (-half, half) with Neumann flux data at both faces.  Discretization
is piecewise-linear finite elements on uniform nodes, which integrates linear
functions of the thickness variable exactly; in particular the discrete
moment weights satisfy  sum(mean_weights) = 2*half  and
sum(moment_weights) = 0  to machine precision, so the zero-thickness-mean
invariant of the coupled model is preserved exactly by the time stepper.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

__all__ = ["ThicknessGrid", "assemble_thickness_diffusion"]


class ThicknessGridError(ValueError):
    pass


@dataclass
class ThicknessGrid:
    """Uniform node grid on (-half, half) with P1 mass/stiffness matrices."""

    n_nodes: int
    half: float = 0.5
    nodes: np.ndarray = field(init=False)
    mass: np.ndarray = field(init=False)
    stiffness: np.ndarray = field(init=False)
    mean_weights: np.ndarray = field(init=False)
    moment_weights: np.ndarray = field(init=False)

    def __post_init__(self):
        if self.n_nodes < 3:
            raise ThicknessGridError(
                f"need at least 3 thickness nodes, got {self.n_nodes}")
        n = self.n_nodes
        self.nodes = np.linspace(-self.half, self.half, n)
        h = self.nodes[1] - self.nodes[0]
        mass = np.zeros((n, n))
        stiff = np.zeros((n, n))
        for e in range(n - 1):
            me = h / 6.0 * np.array([[2.0, 1.0], [1.0, 2.0]])
            ke = 1.0 / h * np.array([[1.0, -1.0], [-1.0, 1.0]])
            sl = slice(e, e + 2)
            mass[sl, sl] += me
            stiff[sl, sl] += ke
        self.mass = mass
        self.stiffness = stiff
        self.mean_weights = mass.sum(axis=1)
        # int z phi_k dz, exact: the integrand is quadratic per element
        mom = np.zeros(n)
        gauss = np.array([-1.0, 1.0]) / np.sqrt(3.0)
        for e in range(n - 1):
            za, zb = self.nodes[e], self.nodes[e + 1]
            zq = 0.5 * (za + zb) + 0.5 * h * gauss
            wq = 0.5 * h
            phi_a = (zb - zq) / h
            phi_b = (zq - za) / h
            mom[e] += wq * np.sum(zq * phi_a)
            mom[e + 1] += wq * np.sum(zq * phi_b)
        self.moment_weights = mom

    @property
    def face_vector(self):
        """Flux test vector q(-half) - q(+half) for face data V at both faces."""
        v = np.zeros(self.n_nodes)
        v[0] = 1.0
        v[-1] = -1.0
        return v

    def mean(self, values):
        """Thickness integral of a nodal field; values shape (..., n_nodes)."""
        return values @ self.mean_weights

    def moment(self, values):
        """First thickness moment  int z * field dz."""
        return values @ self.moment_weights

    def l2_norm_sq(self, values):
        """Squared L2 norm across the thickness (consistent mass)."""
        return np.einsum("...i,ij,...j->...", values, self.mass, values)

    def neumann_eigenvalues(self, storage=1.0, diffusion=1.0, k=None):
        """Generalized eigenvalues of (diffusion*stiffness, storage*mass).

        These are the decay rates of the homogeneous transversal problem; the
        continuous family is (j*pi/(2*half))^2 * diffusion/storage, j >= 0.
        """
        vals = scipy.linalg.eigh(diffusion * self.stiffness,
                                 storage * self.mass, eigvals_only=True)
        vals = np.clip(vals, 0.0, None)
        return vals[:k] if k is not None else vals


def assemble_thickness_diffusion(grid: ThicknessGrid, dp):
    """(M_pi, D_z): storage-weighted mass and transversal stiffness.

    ``dp`` may be dimensionless parameters (storage beta_bar, unit diffusion)
    or any object with ``storage``/``diffusion`` attributes such as
    :class:`poroshell.material.FormCoefficients`.
    """
    if hasattr(dp, "storage"):
        storage, diffusion = dp.storage, dp.diffusion
    else:
        storage, diffusion = dp.beta_bar, 1.0
    return storage * grid.mass, diffusion * grid.stiffness
