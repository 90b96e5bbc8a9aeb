r"""Closed-form curvature of axisymmetric perturbed metrics.

For g = A(theta) dtheta^2 + B(theta) g_{S^{n-1}} with A = r^2 alpha,
B = r^2 sin^2(theta) beta, all curvature quantities are rational in
alpha, beta and their u-derivatives.  Writing m = n - 1, s^2 = 1 - u^2,
' = d/du and

    E = u - s^2 beta' / (2 beta)            (so B_theta/(2B) = E / s)

the Ricci tensor in the warped frame Ric = ric_a r^2 dtheta^2 +
ric_b r^2 sin^2 g_{S^{n-1}} is

    r^2 ric_a = m [ E' + E beta'/(2 beta) - alpha' E/(2 alpha) ]
    r^2 ric_b = T + m' (a - b) / (s^2 alpha),      m' = m - 1,

    T = (beta E)'/alpha - alpha' beta E/(2 alpha^2) - E beta'/(2 alpha)
        + m' beta (1 + u beta'/beta - s^2 beta'^2/(4 beta^2)) / alpha,

which is pole-regular because (a - b)/s^2 is exact in the Galerkin
basis.  At h = 0 these give Ric = (1/2) gbar and R = n/2 identically.

The harmonic-map (DeTurck) vector of g relative to gbar,
W = g^{ij}(Gamma(g) - Gamma(gbar))^theta d/dtheta, reduces to

    r^2 w = -s alpha'/(2 alpha^2) + m s (u (a-b)/s^2 + beta'/2)/(alpha beta).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .background import SphereBackground
from .fields import AxisymTensor, AxisymVector
from .operators import check_positive

# -- data ------------------------------------------------------------------


@dataclass(frozen=True)
class CurvatureData:
    """Curvature of gbar + h on the grid, in the warped frame."""

    bg: SphereBackground
    ric_a: np.ndarray            # Ric = ric_a r^2 dtheta^2 + ric_b r^2 s^2 g_S
    ric_b: np.ndarray
    scalar: np.ndarray           # scalar curvature R(theta)
    deturck: AxisymVector        # W = g^{ij}(Gamma - Gamma_bar)
    # Christoffel differences: dGamma^theta_{theta theta},
    # dGamma^theta_{AB} / ghat_AB, dGamma^A_{theta B} / delta^A_B
    dgamma_ttt: np.ndarray
    dgamma_tab: np.ndarray
    dgamma_atb: np.ndarray

    def ricci_tensor(self) -> AxisymTensor:
        return AxisymTensor.from_grid(self.bg, self.ric_a, self.ric_b)


# -- computation -------------------------------------------------------------


def curvature(bg: SphereBackground, h: AxisymTensor) -> CurvatureData:
    """Curvature data of gbar + h; rejects non-positive metrics."""
    g = bg.grid
    u, s = g.u, g.s
    s2 = s * s
    m = bg.m
    r2 = bg.r2

    a, b = h.to_grid()
    ab2 = h.ab_deficit()
    alpha, beta = 1.0 + a, 1.0 + b
    check_positive(alpha, beta)

    da = g.d_du(a)
    db = g.d_du(b)
    big_e = u - s2 * db / (2.0 * beta)
    de = g.d_du(big_e)

    ric_a = m * (de + big_e * db / (2.0 * beta) - da * big_e / (2.0 * alpha)) / r2

    be = beta * big_e
    dbe = g.d_du(be)
    t_term = (dbe / alpha
              - da * be / (2.0 * alpha ** 2)
              - big_e * db / (2.0 * alpha)
              + (m - 1) * beta * (1.0 + u * db / beta - s2 * db * db / (4.0 * beta * beta)) / alpha)
    ric_b = (t_term + (m - 1) * ab2 / alpha) / r2

    scalar = ric_a / alpha + m * ric_b / beta

    w = (-s * da / (2.0 * alpha ** 2)
         + m * s * (u * ab2 + 0.5 * db) / (alpha * beta)) / r2
    deturck = AxisymVector.from_grid(bg, w)

    dgamma_ttt = -s * da / (2.0 * alpha)
    dgamma_tab = s * s2 * (u * ab2 + 0.5 * db) / alpha
    dgamma_atb = -s * db / (2.0 * beta)

    return CurvatureData(bg=bg, ric_a=ric_a, ric_b=ric_b, scalar=scalar,
                         deturck=deturck, dgamma_ttt=dgamma_ttt,
                         dgamma_tab=dgamma_tab, dgamma_atb=dgamma_atb)


def scalar_curvature_of(bg: SphereBackground, h: AxisymTensor) -> np.ndarray:
    return curvature(bg, h).scalar


def metric_laplacian(bg: SphereBackground, h: AxisymTensor,
                     vals: np.ndarray) -> np.ndarray:
    """Laplace-Beltrami of a zonal scalar with respect to gbar + h."""
    g = bg.grid
    a, b = h.to_grid()
    alpha, beta = 1.0 + a, 1.0 + b
    check_positive(alpha, beta)
    db = g.d_du(b)
    da = g.d_du(a)
    big_e = g.u - g.s ** 2 * db / (2.0 * beta)
    dv = g.d_du(vals)
    d2v = g.d_du(dv)
    # Delta_g w = [w_tt + w_t (m B_t/(2B) - A_t/(2A))]/A in theta derivatives
    return (-g.u * dv + g.s ** 2 * d2v
            - bg.m * big_e * dv
            - g.s ** 2 * dv * da / (2.0 * alpha)) / (bg.r2 * alpha)
