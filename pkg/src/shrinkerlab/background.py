r"""The round-sphere shrinker background.

The sphere S^n of radius sqrt(2 (n - 1)) with constant potential f is the
model gradient shrinking soliton: Ric = (1/2) g_bar holds exactly, and the
constant f is fixed by the weighted-volume normalization

    (4 pi)^{-n/2} * exp(-f) * Vol(S^n(r)) = 1.

All weighted L^2 inner products in the package therefore reduce to plain
averages against a probability measure on the sphere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError
from .grid import ZonalGrid


def sphere_volume(n: int, radius: float) -> float:
    """Volume of the round n-sphere of the given radius."""
    area_unit = 2.0 * math.pi ** ((n + 1) / 2.0) / math.gamma((n + 1) / 2.0)
    return area_unit * radius ** n


@dataclass(frozen=True)
class SphereBackground:
    """Fixed shrinker data: dimension, radius, potential and spectral grid."""

    n: int
    l_max: int
    radius: float
    curv: float                  # sectional curvature K = 1/r^2
    f_const: float
    grid: ZonalGrid
    # warped coefficients of the Hessian basis tensors hess(phi_l), stored
    # as (a, b) with h = a r^2 dtheta^2 + b r^2 sin^2 g_{S^{n-1}}, plus the
    # polynomial quotient (a - b)/sin^2 which is exact in this basis
    hess_a: np.ndarray = field(repr=False, default=None)
    hess_b: np.ndarray = field(repr=False, default=None)
    hess_ab2: np.ndarray = field(repr=False, default=None)
    gram: np.ndarray = field(repr=False, default=None)  # per-degree 2x2 Gram

    @property
    def m(self) -> int:
        """Dimension of the orbit sphere S^{n-1}."""
        return self.n - 1

    @property
    def r2(self) -> float:
        return self.radius * self.radius

    def scalar_eigenvalue(self, l: int) -> float:
        """eps_l with Delta phi_l = -eps_l phi_l."""
        return float(self.grid.eps[l])


def build_background(n: int, l_max: int) -> SphereBackground:
    """Construct the round shrinker background at truncation degree l_max."""
    if not (isinstance(n, (int, np.integer)) and n >= 2):
        raise ParameterError(f"dimension n must be an integer >= 2, got {n!r}")
    if not (isinstance(l_max, (int, np.integer)) and l_max >= 4):
        raise ParameterError(f"l_max must be an integer >= 4, got {l_max!r}")
    n = int(n)
    l_max = int(l_max)

    radius = math.sqrt(2.0 * (n - 1))
    vol = sphere_volume(n, radius)
    # exp(-f) Vol = (4 pi)^{n/2}
    f_const = math.log(vol) - 0.5 * n * math.log(4.0 * math.pi)

    grid = ZonalGrid.build(n, l_max)
    r2 = radius * radius
    u, s2 = grid.u, grid.s ** 2

    hess_a = np.zeros((l_max + 1, grid.count))
    hess_b = np.zeros_like(hess_a)
    hess_ab2 = np.zeros_like(hess_a)
    for l in range(1, l_max + 1):
        dp, d2p = grid.dphi[l], grid.d2phi[l]
        hess_a[l] = (-u * dp + s2 * d2p) / r2
        hess_b[l] = (-u * dp) / r2
        hess_ab2[l] = d2p / r2

    # Gram blocks of the degree-l tensor basis (phi_l gbar, hess phi_l):
    #   <phi g, phi g> = n, <phi g, hess phi> = -eps, |hess phi|^2 = eps^2 - eps/2
    gram = np.zeros((l_max + 1, 2, 2))
    eps = grid.eps
    gram[:, 0, 0] = n
    gram[:, 0, 1] = gram[:, 1, 0] = -eps
    gram[:, 1, 1] = eps * eps - 0.5 * eps

    return SphereBackground(n=n, l_max=l_max, radius=radius, curv=1.0 / r2,
                            f_const=f_const, grid=grid, hess_a=hess_a,
                            hess_b=hess_b, hess_ab2=hess_ab2, gram=gram)
