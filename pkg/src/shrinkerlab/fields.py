r"""Axisymmetric tensor and vector fields in the zonal scalar sector.

A symmetric 2-tensor in the sector is

    h = a(theta) r^2 dtheta^2 + b(theta) r^2 sin^2(theta) g_{S^{n-1}},

held either as grid values (a, b) at the quadrature nodes or as Galerkin
coefficients (c_l, d_l) against the basis {phi_l gbar, hess phi_l}.  The
degree-0 and degree-1 blocks are one dimensional: hess phi_0 = 0, and
hess phi_1 = -(phi_1 / r^2) gbar collapses onto the conformal direction,
so d_0 = d_1 = 0 by convention (an incoming d_1 is folded into c_1).

A vector field in the sector is X = x(theta) d/dtheta with coefficient
representation X = sum_l e_l grad phi_l, so x = e_l phi_l' / r^2 in the
polar-angle derivative.  Both representations convert exactly for fields
of degree <= l_max.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .background import SphereBackground


@dataclass
class AxisymTensor:
    """Zonal symmetric 2-tensor, canonically stored as basis coefficients."""

    bg: SphereBackground
    c: np.ndarray                # conformal coefficients, length l_max + 1
    d: np.ndarray                # Hessian coefficients, d[0] = d[1] = 0

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).copy()
        self.d = np.asarray(self.d, dtype=float).copy()
        l1 = self.bg.l_max + 1
        if self.c.shape != (l1,) or self.d.shape != (l1,):
            raise ValueError("coefficient arrays must have length l_max + 1")
        # fold the collapsed degree-1 Hessian direction onto c_1
        if self.d[1] != 0.0:
            self.c[1] -= self.d[1] / self.bg.r2
            self.d[1] = 0.0
        self.d[0] = 0.0

    # -- constructors ----------------------------------------------------

    @staticmethod
    def zero(bg: SphereBackground) -> "AxisymTensor":
        z = np.zeros(bg.l_max + 1)
        return AxisymTensor(bg, z, z.copy())

    @staticmethod
    def conformal(bg: SphereBackground, coeffs) -> "AxisymTensor":
        """sum_l coeffs[l] phi_l gbar."""
        c = np.zeros(bg.l_max + 1)
        c[: len(np.atleast_1d(coeffs))] = coeffs
        return AxisymTensor(bg, c, np.zeros_like(c))

    @staticmethod
    def from_grid(bg: SphereBackground, a: np.ndarray, b: np.ndarray) -> "AxisymTensor":
        """Project grid values onto the Galerkin basis (exact in-sector)."""
        g = bg.grid
        m = bg.m
        wa, wb = g.wp * a, g.wp * b
        # p_l = <h, phi_l gbar>, q_l = <h, hess phi_l>
        p = g.phi @ (wa + m * wb)
        q = np.einsum("lk,k->l", bg.hess_a, wa) + m * np.einsum("lk,k->l", bg.hess_b, wb)
        c = np.zeros(bg.l_max + 1)
        d = np.zeros_like(c)
        c[0] = p[0] / bg.n
        c[1] = p[1] / bg.n
        for l in range(2, bg.l_max + 1):
            c[l], d[l] = np.linalg.solve(bg.gram[l], (p[l], q[l]))
        return AxisymTensor(bg, c, d)

    # -- representations -------------------------------------------------

    def to_grid(self) -> tuple[np.ndarray, np.ndarray]:
        """Grid values (a, b) at the quadrature nodes."""
        g = self.bg.grid
        a = self.c @ g.phi + self.d @ self.bg.hess_a
        b = self.c @ g.phi + self.d @ self.bg.hess_b
        return a, b

    def ab_deficit(self) -> np.ndarray:
        """(a - b) / sin^2(theta), computed exactly in the basis."""
        return self.d @ self.bg.hess_ab2

    # -- algebra ---------------------------------------------------------

    def copy(self) -> "AxisymTensor":
        return AxisymTensor(self.bg, self.c, self.d)

    def __add__(self, other: "AxisymTensor") -> "AxisymTensor":
        return AxisymTensor(self.bg, self.c + other.c, self.d + other.d)

    def __sub__(self, other: "AxisymTensor") -> "AxisymTensor":
        return AxisymTensor(self.bg, self.c - other.c, self.d - other.d)

    def __mul__(self, scalar: float) -> "AxisymTensor":
        return AxisymTensor(self.bg, self.c * scalar, self.d * scalar)

    __rmul__ = __mul__

    def __neg__(self) -> "AxisymTensor":
        return self * (-1.0)

    def coeff_vector(self) -> np.ndarray:
        """Flattened (c_0, c_1, c_2, d_2, c_3, d_3, ...) layout."""
        parts = [self.c[0], self.c[1]]
        for l in range(2, self.bg.l_max + 1):
            parts.extend((self.c[l], self.d[l]))
        return np.array(parts)

    @staticmethod
    def from_coeff_vector(bg: SphereBackground, vec: np.ndarray) -> "AxisymTensor":
        c = np.zeros(bg.l_max + 1)
        d = np.zeros_like(c)
        c[0], c[1] = vec[0], vec[1]
        rest = np.asarray(vec[2:]).reshape(-1, 2)
        c[2:] = rest[:, 0]
        d[2:] = rest[:, 1]
        return AxisymTensor(bg, c, d)


@dataclass
class AxisymVector:
    """Zonal vector field X = x(theta) d/dtheta in the gradient basis."""

    bg: SphereBackground
    e: np.ndarray                # coefficients against grad phi_l, e[0] unused

    def __post_init__(self):
        self.e = np.asarray(self.e, dtype=float).copy()
        if self.e.shape != (self.bg.l_max + 1,):
            raise ValueError("coefficient array must have length l_max + 1")
        self.e[0] = 0.0

    @staticmethod
    def zero(bg: SphereBackground) -> "AxisymVector":
        return AxisymVector(bg, np.zeros(bg.l_max + 1))

    @staticmethod
    def gradient(bg: SphereBackground, l: int, amplitude: float = 1.0) -> "AxisymVector":
        """amplitude * grad phi_l."""
        e = np.zeros(bg.l_max + 1)
        e[l] = amplitude
        return AxisymVector(bg, e)

    @staticmethod
    def from_grid(bg: SphereBackground, x: np.ndarray) -> "AxisymVector":
        """Project grid values x(theta_k); exact for in-sector fields."""
        g = bg.grid
        # <X, grad phi_l> = int r^2 x * (phi_l'/r^2) dm, with phi_l' = -s dphi
        inner = (-g.s * g.dphi) @ (g.wp * x)
        e = np.zeros(bg.l_max + 1)
        e[1:] = inner[1:] / g.eps[1:]
        return AxisymVector(bg, e)

    def to_grid(self) -> np.ndarray:
        g = self.bg.grid
        return self.e @ (-g.s * g.dphi) / self.bg.r2

    def xi(self) -> np.ndarray:
        """x / sin(theta), the pole-regular profile, exact in the basis."""
        g = self.bg.grid
        return self.e @ (-g.dphi) / self.bg.r2

    def copy(self) -> "AxisymVector":
        return AxisymVector(self.bg, self.e)

    def __add__(self, other: "AxisymVector") -> "AxisymVector":
        return AxisymVector(self.bg, self.e + other.e)

    def __sub__(self, other: "AxisymVector") -> "AxisymVector":
        return AxisymVector(self.bg, self.e - other.e)

    def __mul__(self, scalar: float) -> "AxisymVector":
        return AxisymVector(self.bg, self.e * scalar)

    __rmul__ = __mul__

    def __neg__(self) -> "AxisymVector":
        return self * (-1.0)
