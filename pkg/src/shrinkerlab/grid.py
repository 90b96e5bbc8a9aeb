r"""Zonal quadrature grid and scalar spectral basis on the round n-sphere.

Everything axisymmetric on S^n reduces to functions of the polar angle
theta, or equivalently of u = cos(theta) in (-1, 1).  The surface measure
of a zonal function carries the weight (1 - u^2)^{(n-2)/2} du, so the
natural quadrature is Gauss-Jacobi with alpha = beta = (n-2)/2 (this is
plain Gauss-Legendre for n = 2 and Gauss-Chebyshev of the second kind for
n = 3).  With that choice every inner product of polynomial integrands is
evaluated exactly up to degree 2*count - 1.

Scalar fields are stored as grid values at the quadrature nodes.  For
derivatives the values are converted to Legendre coefficients through a
precomputed LU factorization of the Legendre-Vandermonde matrix; d/du is
exact on polynomials of degree < count.  The polar-angle derivative is
d/dtheta = -sin(theta) d/du.

The zonal Laplace eigenfunctions phi_l are Gegenbauer polynomials
C_l^{(n-1)/2}(u), normalized to unit norm in the weighted probability
measure, with

    Delta phi_l = -eps_l phi_l,   eps_l = l (l + n - 1) / (2 (n - 1))

on the sphere of radius sqrt(2 (n - 1)).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import legendre as npleg
from scipy.linalg import lu_factor, lu_solve
from scipy.special import eval_gegenbauer, roots_jacobi


def quadrature_count(l_max: int) -> int:
    """Node count resolving cubic products of degree-l_max fields.

    The lower bound ceil((3 l_max + 1) / 2) makes quadratic nonlinearities
    alias-free after projection; the 2 l_max + 5 floor keeps polynomial
    interpolation exact for products themselves, which stabilizes the
    rational expressions in the curvature formulas.
    """
    return max((3 * l_max + 1 + 1) // 2, 2 * l_max + 5)


@dataclass(frozen=True)
class ZonalGrid:
    """Gauss-Jacobi grid in u = cos(theta) with spectral helpers."""

    n: int
    l_max: int
    count: int
    u: np.ndarray
    w_raw: np.ndarray            # plain Jacobi weights
    wp: np.ndarray               # normalized to a probability measure
    s: np.ndarray                # sin(theta) = sqrt(1 - u^2)
    theta: np.ndarray
    eps: np.ndarray              # scalar eigenvalues eps_l, l = 0..l_max
    phi: np.ndarray              # phi[l, k] = phi_l(u_k), unit norm
    dphi: np.ndarray             # d(phi_l)/du at the nodes
    d2phi: np.ndarray            # d^2(phi_l)/du^2 at the nodes
    _leg_lu: tuple = field(repr=False, default=None)

    @staticmethod
    def build(n: int, l_max: int, count: int | None = None) -> "ZonalGrid":
        if count is None:
            count = quadrature_count(l_max)
        a = 0.5 * (n - 2)
        u, w = roots_jacobi(count, a, a)
        order = np.argsort(u)
        u, w = u[order], w[order]
        wp = w / w.sum()
        s = np.sqrt(1.0 - u * u)
        theta = np.arccos(u)

        vand = npleg.legvander(u, count - 1)
        leg_lu = lu_factor(vand)

        r2 = 2.0 * (n - 1)
        ls = np.arange(l_max + 1)
        eps = ls * (ls + n - 1) / r2

        alpha = 0.5 * (n - 1)
        phi = np.empty((l_max + 1, count))
        dphi = np.empty_like(phi)
        d2phi = np.empty_like(phi)
        for l in ls:
            vals = eval_gegenbauer(l, alpha, u)
            nrm = np.sqrt(np.sum(wp * vals * vals))
            vals = vals / nrm
            c = lu_solve(leg_lu, vals)
            phi[l] = vals
            dphi[l] = npleg.legval(u, npleg.legder(c)) if l > 0 else 0.0
            d2phi[l] = npleg.legval(u, npleg.legder(c, 2)) if l > 1 else 0.0

        return ZonalGrid(n=n, l_max=l_max, count=count, u=u, w_raw=w, wp=wp,
                         s=s, theta=theta, eps=eps, phi=phi, dphi=dphi,
                         d2phi=d2phi, _leg_lu=leg_lu)

    # -- transforms ------------------------------------------------------

    def to_leg(self, vals: np.ndarray) -> np.ndarray:
        """Legendre coefficients of the polynomial interpolant."""
        return lu_solve(self._leg_lu, np.asarray(vals, dtype=float))

    def from_leg(self, coeffs: np.ndarray, at: np.ndarray | None = None) -> np.ndarray:
        return npleg.legval(self.u if at is None else at, coeffs)

    def d_du(self, vals: np.ndarray) -> np.ndarray:
        return self.from_leg(npleg.legder(self.to_leg(vals)))

    def d_dtheta(self, vals: np.ndarray) -> np.ndarray:
        return -self.s * self.d_du(vals)

    # -- integration -----------------------------------------------------

    def integrate(self, vals: np.ndarray) -> float:
        """Average against the weighted probability measure on the sphere."""
        return float(np.dot(self.wp, vals))

    def scalar_inner(self, f: np.ndarray, g: np.ndarray,
                     weight: np.ndarray | None = None) -> float:
        fg = f * g if weight is None else f * g * weight
        return self.integrate(fg)

    # -- scalar basis ----------------------------------------------------

    def scalar_analyze(self, vals: np.ndarray) -> np.ndarray:
        """Coefficients of a zonal scalar in the orthonormal basis phi_l."""
        return self.phi @ (self.wp * vals)

    def scalar_synthesize(self, coeffs: np.ndarray) -> np.ndarray:
        return np.asarray(coeffs) @ self.phi

    def eval_at(self, vals: np.ndarray, u_new: np.ndarray) -> np.ndarray:
        """Evaluate the polynomial interpolant of grid values elsewhere."""
        return npleg.legval(u_new, self.to_leg(vals))
