r"""Perelman entropy: the W-functional, mu minimization, second variation.

The W-functional at scale tau is

    W(g, f, tau) = (4 pi tau)^{-n/2} int [tau (|grad f|^2 + R_g) + f - n] e^{-f} dvol_g,

minimized over potentials satisfying (4 pi tau)^{-n/2} int e^{-f} dvol_g = 1.
On the background the minimizer is the constant potential and

    mu(gbar, tau) = tau n/2 + log Vol - (n/2) log(4 pi tau) - n.

The minimization substitutes w = e^{-f/2} (the standard well-posed convex
reformulation) and runs an equality-constrained Newton iteration over
zonal coefficients of w, with damping and a positivity line search as a
fallback when the KKT system degenerates.

The second variation at the shrinker is evaluated two independent ways:
spectrally as (1/2) <P_ess h, L P_ess h>, and through the variation
operator

    Ntil h = Delta_f h + 2 Rm* h + 2 div* div_f h - 2 hess v_h,
    (Delta_f + 1/2) v_h = -(1/2) div_f div_f h,

which vanishes on Lie derivatives and reduces to L on divergence-free
tensors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .background import SphereBackground, sphere_volume
from .curvature import curvature, metric_laplacian
from .errors import (NonConvergenceError, ParameterError,
                     PerturbationTooLargeError, ResonanceError)
from .fields import AxisymTensor
from . import operators as ops
from . import spectral

_C2_GUARD = 0.1          # small-perturbation guard for the minimization
_KKT_TOL = 1e-11
_MAX_NEWTON = 60


@dataclass
class EntropyResult:
    mu: float
    minimizer_f: np.ndarray      # grid values of the minimizing potential
    iterations: int
    kkt_residual: float


def mu_background(bg: SphereBackground, tau: float = 1.0) -> float:
    """Closed form of mu(gbar, tau) for the round shrinker."""
    vol = sphere_volume(bg.n, bg.radius)
    return tau * bg.n / 2.0 + math.log(vol) - 0.5 * bg.n * math.log(4.0 * math.pi * tau) - bg.n


def _measure_weight(bg: SphereBackground, h: AxisymTensor) -> np.ndarray:
    """dvol_{gbar+h} relative to dvol_gbar on the grid."""
    a, b = h.to_grid()
    alpha, beta = 1.0 + a, 1.0 + b
    ops.check_positive(alpha, beta)
    return np.sqrt(alpha) * beta ** (bg.m / 2.0)


def w_functional(bg: SphereBackground, h: AxisymTensor, f_vals,
                 tau: float = 1.0, check_normalization: bool = True) -> float:
    """W(gbar + h, f, tau) for a zonal potential (grid values or constant)."""
    g = bg.grid
    f = np.full(g.count, float(f_vals)) if np.isscalar(f_vals) else np.asarray(f_vals, float)
    wg = _measure_weight(bg, h)
    pref = tau ** (-bg.n / 2.0) * math.exp(bg.f_const)
    ef = np.exp(-f)
    if check_normalization:
        nrm = pref * g.integrate(ef * wg)
        if abs(nrm - 1.0) > 1e-6:
            raise ParameterError(
                f"potential violates the weighted-volume normalization "
                f"(integral {nrm:.9f})")
    a, _ = h.to_grid()
    alpha = 1.0 + a
    df = g.d_du(f)
    grad_sq = g.s ** 2 * df * df / (bg.r2 * alpha)
    r_scal = curvature(bg, h).scalar
    integrand = (tau * (grad_sq + r_scal) + f - bg.n) * ef * wg
    return pref * g.integrate(integrand)


def mu_entropy(bg: SphereBackground, h: AxisymTensor, tau: float = 1.0,
               guard: float = _C2_GUARD, max_iter: int = _MAX_NEWTON) -> EntropyResult:
    """Minimize W(gbar + h, ., tau) under the normalization constraint."""
    c2 = ops.ck_estimate_tensor(bg, h, 2)
    if c2 > guard:
        raise PerturbationTooLargeError(
            f"|h|_C2 ~ {c2:.3f} exceeds the minimizer-uniqueness guard {guard}")

    g = bg.grid
    n, m = bg.n, bg.m
    wg = _measure_weight(bg, h)
    pref = tau ** (-n / 2.0) * math.exp(bg.f_const)
    omega = g.wp * wg
    a, _ = h.to_grid()
    alpha = 1.0 + a
    kappa = g.s ** 2 / (bg.r2 * alpha)
    r_scal = curvature(bg, h).scalar

    phi = g.phi.T                     # synthesis matrix, (count, l_max+1)
    dphi = g.dphi.T

    def kkt(c, nu):
        w = phi @ c
        if np.any(w <= 0.0):
            return None
        wu = dphi @ c
        lw = np.log(w)
        grad_m = pref * (8.0 * tau * dphi.T @ (omega * kappa * wu)
                         + 2.0 * tau * phi.T @ (omega * r_scal * w)
                         - phi.T @ (omega * (4.0 * w * lw + 2.0 * w))
                         - 2.0 * n * phi.T @ (omega * w))
        grad_c = 2.0 * pref * phi.T @ (omega * w)
        cons = pref * float(omega @ (w * w)) - 1.0
        return w, wu, lw, grad_m, grad_c, cons

    def hessians(w, lw):
        hm = pref * (8.0 * tau * dphi.T @ (omega[:, None] * kappa[:, None] * dphi)
                     + 2.0 * tau * phi.T @ (omega[:, None] * r_scal[:, None] * phi)
                     - phi.T @ ((omega * (4.0 * lw + 6.0))[:, None] * phi)
                     - 2.0 * n * phi.T @ (omega[:, None] * phi))
        hc = 2.0 * pref * phi.T @ (omega[:, None] * phi)
        return hm, hc

    # start from the constant potential, rescaled onto the constraint
    c = np.zeros(bg.l_max + 1)
    c[0] = 1.0 / g.phi[0, 0]
    w0 = phi @ c
    c /= math.sqrt(pref * float(omega @ (w0 * w0)))
    state = kkt(c, 0.0)
    nu = float(state[3] @ state[4]) / float(state[4] @ state[4])

    res = math.inf
    for it in range(1, max_iter + 1):
        w, wu, lw, grad_m, grad_c, cons = state
        r_stat = grad_m - nu * grad_c
        res = math.sqrt(float(r_stat @ r_stat) + cons * cons)
        if res <= _KKT_TOL:
            f_vals = -2.0 * np.log(w)
            mu_val = w_functional(bg, h, f_vals, tau, check_normalization=False)
            return EntropyResult(mu=mu_val, minimizer_f=f_vals,
                                 iterations=it - 1, kkt_residual=res)
        hm, hc = hessians(w, lw)
        kmat = np.block([[hm - nu * hc, -grad_c[:, None]],
                         [grad_c[None, :], np.zeros((1, 1))]])
        rhs = -np.concatenate([r_stat, [cons]])
        try:
            step = np.linalg.solve(kmat, rhs)
        except np.linalg.LinAlgError:
            step = np.concatenate([-r_stat, [cons]])  # damped gradient fallback
        # positivity / sufficient-decrease line search
        t = 1.0
        for _ in range(40):
            c_try, nu_try = c + t * step[:-1], nu + t * step[-1]
            state_try = kkt(c_try, nu_try)
            if state_try is not None:
                r_try = state_try[3] - nu_try * state_try[4]
                res_try = math.sqrt(float(r_try @ r_try) + state_try[5] ** 2)
                if res_try < res or t < 1e-6:
                    break
            t *= 0.5
        c, nu, state = c_try, nu_try, state_try

    raise NonConvergenceError(
        f"mu minimization stalled after {max_iter} iterations", residual=res)


# -- second variation --------------------------------------------------------


def v_h_solve(bg: SphereBackground, h: AxisymTensor,
              clearance: float = 1e-6) -> np.ndarray:
    """Solve (Delta_f + 1/2) v = -(1/2) div_f div_f h on the grid."""
    rhs = -0.5 * ops.vector_divergence(bg, ops.divergence(bg, h))
    coeffs = bg.grid.scalar_analyze(rhs)
    denom = 0.5 - bg.grid.eps
    if np.any(np.abs(denom) < clearance):
        raise ResonanceError(
            "1/2 sits within clearance of a scalar Laplace eigenvalue")
    return bg.grid.scalar_synthesize(coeffs / denom)


def variation_operator(bg: SphereBackground, h: AxisymTensor) -> AxisymTensor:
    """Ntil h: L on divergence-free tensors, zero on Lie derivatives."""
    out = ops.rough_laplacian_tensor(bg, h) + ops.rm_action(bg, h)
    out = out + 2.0 * ops.div_star(bg, ops.divergence(bg, h))
    out = out - 2.0 * ops.scalar_hessian(bg, v_h_solve(bg, h))
    return out


def second_variation(bg: SphereBackground, h: AxisymTensor) -> float:
    """(1/2) <P_ess h, L P_ess h> through the spectral decomposition."""
    dec = spectral.sphere_decomposition(bg)
    p_ess = dec.project(h, "ess")
    return 0.5 * ops.tensor_inner(bg, p_ess, ops.stability_tensor(bg, p_ess))


def second_variation_via_operator(bg: SphereBackground, h: AxisymTensor) -> float:
    """(1/2) <h, Ntil h>, the independent route through the v_h solve."""
    return 0.5 * ops.tensor_inner(bg, h, variation_operator(bg, h))


def nu_variation_operator(bg: SphereBackground, h: AxisymTensor) -> AxisymTensor:
    """Second-variation operator of the nu-entropy (smoke-tested only).

    Same as Ntil plus the Ricci projection term
    -2 (<Ric, h> / <R>) Ric, normalized so that N(Ric) = 0.
    """
    ric = AxisymTensor.from_grid(bg, np.full(bg.grid.count, 0.5),
                                 np.full(bg.grid.count, 0.5))
    ratio = ops.tensor_inner(bg, ric, h) / bg.grid.integrate(
        curvature(bg, AxisymTensor.zero(bg)).scalar)
    return variation_operator(bg, h) - (2.0 * ratio) * ric


@dataclass
class FdSecondVariation:
    value: float                 # fitted quadratic Taylor coefficient
    per_s: dict                  # s -> central-difference estimate


def fd_second_variation(bg: SphereBackground, h: AxisymTensor,
                        s_list=(1e-3,), tau: float = 1.0) -> FdSecondVariation:
    """Central-difference second derivative of s -> mu(gbar + s h, tau) at 0.

    mu(gbar + s h) = mu(gbar) + (s^2/2) D2mu[h, h] + O(s^3), so each
    estimate is (mu_+ - 2 mu_0 + mu_-) / s^2; it matches the second
    variation (1/2) <h, Ntil h> to first order in s (cubic remainder).
    """
    s_arr = np.atleast_1d(np.asarray(s_list, float))
    if np.any((s_arr < 1e-4 - 1e-12) | (s_arr > 1e-2 + 1e-12)):
        raise ParameterError("step sizes must lie in [1e-4, 1e-2]")
    mu0 = mu_entropy(bg, AxisymTensor.zero(bg), tau).mu
    per_s = {}
    for s in s_arr:
        mu_p = mu_entropy(bg, s * h, tau).mu
        mu_m = mu_entropy(bg, (-s) * h, tau).mu
        per_s[float(s)] = (mu_p - 2.0 * mu0 + mu_m) / (s * s)
    # least-squares fit of the quadratic coefficient with a cubic correction
    if len(s_arr) >= 2:
        deltas = np.array([(mu_entropy(bg, s * h, tau).mu - mu0) for s in s_arr])
        design = np.stack([0.5 * s_arr ** 2, s_arr ** 3], axis=1)
        coefs, *_ = np.linalg.lstsq(design, deltas, rcond=None)
        value = float(coefs[0])
    else:
        value = per_s[float(s_arr[0])]
    return FdSecondVariation(value=value, per_s=per_s)
