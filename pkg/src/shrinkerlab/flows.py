r"""Time integration of the rescaled perturbation flows and gauge machinery.

The rescaled Ricci-DeTurck perturbation h(tau) of the round shrinker
evolves by

    d h / d tau = -2 Ric(gbar + h) + (gbar + h) + Lie_W (gbar + h),
    W = (gbar + h)^{ij} (Gamma(gbar + h) - Gamma(gbar)),

whose linearization at h = 0 is the stability operator L.  With constant
potential the modified and unmodified flows coincide, so the one right
hand side serves both; the evolve entry point still accepts the modified
form through its background.

The integrator is IMEX: L is diagonal on the Galerkin coefficients, so
the implicit stages are elementwise divisions, and the nonlinear
remainder N(h) = rhs(h) - L h is treated explicitly with a second-order
additive Runge-Kutta pair (gamma = 1 - 1/sqrt(2)) and PI step control on
the embedded first-order error estimate.  With the nonlinearity disabled
the modes are propagated by exact exponentials.

Gauge diffeomorphisms are zonal maps phi(theta) = theta + x(theta)
generated by sector vector fields (meridians are geodesics, so this *is*
the exponential map of x d/dtheta).  The module provides the pullback,
the harmonic-map heat flow of such maps against a moving metric, the
Newton reduction that cancels generic modes by changing gauge, the slice
projection built on it, exponential rate fitting, and the dynamics
report that audits the weighted-norm growth inequalities and entropy
bounds along a trace.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .background import SphereBackground
from .curvature import curvature
from .errors import (CapabilityError, GaugeDegenerationError,
                     NonConvergenceError, ParameterError,
                     PerturbationTooLargeError, StepSizeUnderflowError)
from .fields import AxisymTensor, AxisymVector
from . import entropy as entropy_mod
from . import operators as ops
from . import spectral

VALIDITY_C2 = 0.2            # beyond this the perturbation formalism is off
GAUGE_DELTA = 0.2            # C^1 smallness required of gauge generators


# -- gauge maps ---------------------------------------------------------------


@dataclass
class GaugeMap:
    """Axisymmetric diffeomorphism theta -> theta + x(theta)."""

    bg: SphereBackground
    x: AxisymVector

    def __post_init__(self):
        if self.v_prime().min() <= 0.0:
            raise GaugeDegenerationError("gauge map lost strict monotonicity")
        c1 = ops.ck_estimate_vector(self.bg, self.x, 1)
        if c1 > GAUGE_DELTA:
            raise PerturbationTooLargeError(
                f"gauge generator C^1 size {c1:.3f} exceeds delta = {GAUGE_DELTA}")

    @staticmethod
    def identity(bg: SphereBackground) -> "GaugeMap":
        return GaugeMap(bg, AxisymVector.zero(bg))

    def v_values(self) -> np.ndarray:
        """Image angles v(theta_k) = theta_k + x(theta_k)."""
        return self.bg.grid.theta + self.x.to_grid()

    def v_prime(self) -> np.ndarray:
        g = self.bg.grid
        xi = self.x.xi()
        return 1.0 + g.u * xi - g.s ** 2 * g.d_du(xi)

    def evaluate(self, theta: np.ndarray) -> np.ndarray:
        """The map at arbitrary angles (polynomial synthesis off-grid)."""
        xi_new = _xi_at(self.bg, self.x, np.cos(theta))
        return theta + np.sin(theta) * xi_new

    def compose(self, inner: "GaugeMap") -> "GaugeMap":
        """self after inner: theta -> self(inner(theta))."""
        v_inner = inner.v_values()
        v = self.evaluate(v_inner)
        x = AxisymVector.from_grid(self.bg, v - self.bg.grid.theta)
        return GaugeMap(self.bg, x)


def _xi_at(bg: SphereBackground, x: AxisymVector, u_new: np.ndarray) -> np.ndarray:
    g = bg.grid
    xi_grid = x.xi()
    return g.eval_at(xi_grid, u_new)


def gauge_pullback(bg: SphereBackground, gauge: GaugeMap,
                   h: AxisymTensor | None = None) -> AxisymTensor:
    """phi* (gbar + h) - gbar for the zonal diffeomorphism phi."""
    g = bg.grid
    v = gauge.v_values()
    vp = gauge.v_prime()
    if vp.min() <= 0.0:
        raise GaugeDegenerationError("gauge map lost strict monotonicity")
    u_img = np.cos(v)
    if h is None:
        alpha_img = np.ones_like(u_img)
        beta_img = np.ones_like(u_img)
    else:
        a, b = h.to_grid()
        alpha_img = 1.0 + g.eval_at(a, u_img)
        beta_img = 1.0 + g.eval_at(b, u_img)
        ops.check_positive(alpha_img, beta_img)
    a_new = alpha_img * vp * vp - 1.0
    ratio = np.sin(v) / g.s
    b_new = beta_img * ratio * ratio - 1.0
    return AxisymTensor.from_grid(bg, a_new, b_new)


# -- the flow right hand side -------------------------------------------------


def rdtf_rhs(bg: SphereBackground, h: AxisymTensor) -> AxisymTensor:
    """Full nonlinear DeTurck right hand side; linearization is L."""
    cd = curvature(bg, h)
    a, b = h.to_grid()
    base = AxisymTensor.from_grid(bg, -2.0 * cd.ric_a + 1.0 + a,
                                  -2.0 * cd.ric_b + 1.0 + b)
    return base + ops.lie_derivative(bg, cd.deturck, h)


def rdtf_quadratic(bg: SphereBackground, h: AxisymTensor) -> AxisymTensor:
    """Q(h) = rhs(h) - L h, the exact nonlinear remainder."""
    return rdtf_rhs(bg, h) - ops.stability_tensor(bg, h)


# -- IMEX time stepping -------------------------------------------------------


@dataclass
class StepControl:
    dt0: float = 1e-2
    dt_min: float = 1e-10
    dt_max: float = 0.2
    rtol: float = 1e-7
    atol: float = 1e-13
    fixed_dt: float | None = None


_GAMMA = 1.0 - 1.0 / math.sqrt(2.0)
_DELTA = 1.0 - 1.0 / (2.0 * _GAMMA)


class _ImexStepper:
    """ARS(2,2,2): diagonal implicit blocks, explicit nonlinearity, PI control.

    The error estimate is stiff-safe: the embedded first-order solution
    shares the implicit path, so the difference isolates the nonlinear
    truncation error, and the linear error is added exactly per component
    as |R(dt lam) - exp(dt lam)| |y| (R is the L-stable stability function
    of the implicit pair, available because the blocks are diagonal).
    """

    def __init__(self, lam: np.ndarray, nonlinear, control: StepControl):
        self.lam = lam
        self.nonlinear = nonlinear
        self.control = control
        self.err_prev = 1.0

    def step(self, tau: float, y: np.ndarray, dt: float):
        lam, nl = self.lam, self.nonlinear
        g = _GAMMA
        den = 1.0 - dt * g * lam
        n1 = nl(tau, y)
        y2 = (y + dt * g * n1) / den
        n2 = nl(tau + g * dt, y2)
        lin = (1.0 - g) * lam * y2
        y3 = (y + dt * (_DELTA * n1 + (1.0 - _DELTA) * n2 + lin)) / den
        y_hat = (y + dt * (n1 + lin)) / den
        z = dt * lam
        r_lin = (1.0 + (1.0 - 2.0 * g) * z) / den ** 2
        err_vec = np.abs(y3 - y_hat) + np.abs(r_lin - np.exp(z)) * np.abs(y)
        return y3, err_vec

    def advance(self, tau: float, tau_end: float, y: np.ndarray, dt: float,
                on_accept=None):
        ctrl = self.control
        while tau < tau_end - 1e-14:
            if ctrl.fixed_dt is not None:
                dt = min(ctrl.fixed_dt, tau_end - tau)
                y, _ = self.step(tau, y, dt)
                tau += dt
                if on_accept is not None and on_accept(tau, y, dt):
                    return tau, y, dt, True
                continue
            dt = min(dt, tau_end - tau, ctrl.dt_max)
            y_new, err_vec = self.step(tau, y, dt)
            floor = 0.05 * float(np.abs(y).max(initial=0.0))
            scale = ctrl.atol + ctrl.rtol * (np.maximum(np.abs(y), np.abs(y_new)) + floor)
            err = max(float(np.max(err_vec / scale)), 1e-10)
            if err <= 1.0:
                tau += dt
                y = y_new
                halted = on_accept is not None and on_accept(tau, y, dt)
                fac = 0.9 * err ** (-0.3) * self.err_prev ** 0.15
                self.err_prev = err
                dt = dt * min(4.0, max(0.2, fac))
                if halted:
                    return tau, y, dt, True
            else:
                dt = dt * max(0.2, 0.9 * err ** (-1.0 / 3.0))
                if dt < ctrl.dt_min:
                    raise StepSizeUnderflowError(
                        f"dt underflow at tau = {tau:.6f} (err = {err:.2e})")
        return tau, y, dt, False


# -- traces -------------------------------------------------------------------


@dataclass
class FlowState:
    """One sampled state of a flow run."""

    bg: SphereBackground
    tau: float
    h: AxisymTensor
    u: np.ndarray | None = None     # gauge map angles for HMHF runs

    @property
    def curvature(self):
        if not hasattr(self, "_curv"):
            self._curv = curvature(self.bg, self.h)
        return self._curv


@dataclass
class FlowTrace:
    """Sampled diagnostics of one perturbation flow run."""

    bg: SphereBackground
    decomp: spectral.SpectralDecomposition
    taus: np.ndarray
    raw: np.ndarray                # coeff_vector per sample
    mode_coeffs: np.ndarray        # eigenmode coefficients per sample
    l2f: np.ndarray
    hw: np.ndarray
    c0: np.ndarray
    c2: np.ndarray
    c3: np.ndarray
    mu: np.ndarray                 # nan when entropy sampling is off
    dts: np.ndarray
    status: str                    # completed | halted_threshold
    meta: dict = field(default_factory=dict)

    def field_at(self, idx: int) -> AxisymTensor:
        return AxisymTensor.from_coeff_vector(self.bg, self.raw[idx])

    def state_at(self, idx: int) -> FlowState:
        return FlowState(self.bg, float(self.taus[idx]), self.field_at(idx))

    def interpolator(self):
        """Piecewise-linear interpolation of the coefficient trajectory."""
        taus, raw, bg = self.taus, self.raw, self.bg

        def h_of(tau: float) -> AxisymTensor:
            t = np.clip(tau, taus[0], taus[-1])
            j = int(np.searchsorted(taus, t, side="right") - 1)
            j = min(max(j, 0), len(taus) - 2)
            w = (t - taus[j]) / (taus[j + 1] - taus[j])
            return AxisymTensor.from_coeff_vector(
                bg, (1.0 - w) * raw[j] + w * raw[j + 1])
        return h_of


def _mode_matrix(bg: SphereBackground, decomp) -> np.ndarray:
    gram = ops.coeff_gram(bg)
    rows = [m.coeff_vector() @ gram for m in decomp.modes]
    return np.array(rows)


def evolve_rdtf(bg: SphereBackground, h0: AxisymTensor, tau_span=(0.0, 6.0),
                control: StepControl | None = None, sample_dtau: float = 0.05,
                compute_entropy: bool = True, disable_nonlinearity: bool = False,
                validity_threshold: float = VALIDITY_C2,
                meta: dict | None = None) -> FlowTrace:
    """Integrate the perturbation flow and sample diagnostics."""
    control = control or StepControl()
    decomp = spectral.sphere_decomposition(bg)
    lam = ops.stability_eigen_diag(bg)
    wmat = _mode_matrix(bg, decomp)
    hw_wts = 1.0 + np.maximum(0.0, -decomp.eigenvalues)

    if ops.ck_estimate_tensor(bg, h0, 2) > validity_threshold:
        raise PerturbationTooLargeError("initial data above validity threshold")

    def nonlinear(_tau, y):
        if disable_nonlinearity:
            return np.zeros_like(y)
        h = AxisymTensor.from_coeff_vector(bg, y)
        return rdtf_quadratic(bg, h).coeff_vector()

    t0, t1 = map(float, tau_span)
    samples = [t0 + k * sample_dtau for k in range(int(round((t1 - t0) / sample_dtau)) + 1)]
    samples[-1] = t1

    taus, raws, dts = [], [], []
    y = h0.coeff_vector()
    status = "completed"

    def record(tau, yv, dt):
        taus.append(tau)
        raws.append(yv.copy())
        dts.append(dt)

    record(t0, y, 0.0)
    stepper = _ImexStepper(lam, nonlinear, control)
    dt = control.fixed_dt or control.dt0
    tau = t0
    for target in samples[1:]:
        if disable_nonlinearity:
            dt_seg = target - tau
            y = y * np.exp(lam * dt_seg)
            tau = target
            record(tau, y, dt_seg)
        else:
            halted = {}

            def guard(t, yv, _dt):
                h = AxisymTensor.from_coeff_vector(bg, yv)
                if ops.ck_estimate_tensor(bg, h, 2) > validity_threshold:
                    halted["at"] = t
                    return True
                return False

            tau, y, dt, stop = stepper.advance(tau, target, y, dt, on_accept=guard)
            record(tau, y, dt)
            if stop:
                status = "halted_threshold"
                break

    taus = np.array(taus)
    raw = np.array(raws)
    mode_coeffs = raw @ wmat.T
    l2f = np.sqrt(np.maximum(np.sum(mode_coeffs ** 2, axis=1), 0.0))
    hw = np.sqrt(np.maximum(mode_coeffs ** 2 @ hw_wts, 0.0))
    c0 = np.empty(len(taus))
    c2 = np.empty(len(taus))
    c3 = np.empty(len(taus))
    mu = np.full(len(taus), np.nan)
    for j in range(len(taus)):
        h = AxisymTensor.from_coeff_vector(bg, raw[j])
        c0[j] = ops.ck_estimate_tensor(bg, h, 0)
        c2[j] = ops.ck_estimate_tensor(bg, h, 2)
        c3[j] = ops.ck_estimate_tensor(bg, h, 3)
        if compute_entropy:
            mu[j] = entropy_mod.mu_entropy(bg, h).mu

    info = {"scheme": "ars222-imex" if not disable_nonlinearity else "exact-linear",
            "tau_span": (t0, t1), "sample_dtau": sample_dtau,
            "rtol": control.rtol, "atol": control.atol,
            "fixed_dt": control.fixed_dt,
            "validity_threshold": validity_threshold}
    info.update(meta or {})
    return FlowTrace(bg=bg, decomp=decomp, taus=taus, raw=raw,
                     mode_coeffs=mode_coeffs, l2f=l2f, hw=hw, c0=c0, c2=c2,
                     c3=c3, mu=mu, dts=np.array(dts), status=status, meta=info)


# -- harmonic map heat flow ----------------------------------------------------


@dataclass
class HmhfResult:
    bg: SphereBackground
    taus: np.ndarray
    x_coeffs: np.ndarray            # generator coefficients per sample
    gauges: list                    # GaugeMap per sample
    linear_defect: np.ndarray       # |X_tau - exp(tau frakL) X_0| (static runs)
    status: str


def _map_laplacian_rhs(bg: SphereBackground, e: np.ndarray, h: AxisymTensor):
    """d/dtau of the map angle profile, as grid values of a vector field."""
    g = bg.grid
    x = AxisymVector(bg, e)
    xi = x.xi()
    x_theta = g.u * xi - g.s ** 2 * g.d_du(xi)
    x_thth = -g.s * g.d_du(x_theta)
    v = g.theta + x.to_grid()
    vp = 1.0 + x_theta
    if vp.min() <= 0.0:
        raise GaugeDegenerationError("map lost monotonicity during the flow")

    a, b = h.to_grid()
    alpha, beta = 1.0 + a, 1.0 + b
    ops.check_positive(alpha, beta)
    da, db = g.d_du(a), g.d_du(b)
    big_e = g.u - g.s ** 2 * db / (2.0 * beta)

    t1 = x_thth / (bg.r2 * alpha)
    t2 = g.s * da * vp / (2.0 * bg.r2 * alpha ** 2)
    numer = g.s * beta * big_e * vp / alpha - np.sin(v) * np.cos(v)
    t3 = bg.m * numer / (bg.r2 * g.s ** 2 * beta)
    return t1 + t2 + t3


def evolve_hmhf(bg: SphereBackground, g_flow, u0: GaugeMap, tau_span=(0.0, 1.0),
                control: StepControl | None = None, sample_dtau: float = 0.05) -> HmhfResult:
    """Evolve the zonal harmonic-map heat flow against a moving metric.

    g_flow is None (static round background), an AxisymTensor (static
    perturbed metric), a FlowTrace (interpolated), or a callable
    tau -> AxisymTensor.
    """
    control = control or StepControl()
    if g_flow is None:
        h_static = AxisymTensor.zero(bg)
        h_of = lambda _t: h_static
        static_round = True
    elif isinstance(g_flow, AxisymTensor):
        h_of = lambda _t: g_flow
        static_round = False
    elif isinstance(g_flow, FlowTrace):
        h_of = g_flow.interpolator()
        static_round = False
    else:
        h_of = g_flow
        static_round = False

    lam = 1.0 - bg.grid.eps     # frak L on the gradient basis
    lam = lam.copy()
    lam[0] = 0.0

    def nonlinear(tau, e):
        rhs = _map_laplacian_rhs(bg, e, h_of(tau))
        return AxisymVector.from_grid(bg, rhs).e - lam * e

    t0, t1 = map(float, tau_span)
    nseg = int(round((t1 - t0) / sample_dtau))
    samples = [t0 + k * sample_dtau for k in range(nseg + 1)]
    samples[-1] = t1

    e = u0.x.e.copy()
    e0 = e.copy()
    taus, coeffs = [t0], [e.copy()]
    stepper = _ImexStepper(lam, nonlinear, control)
    dt = control.fixed_dt or control.dt0
    tau = t0
    for target in samples[1:]:
        tau, e, dt, _ = stepper.advance(tau, target, e, dt)
        taus.append(tau)
        coeffs.append(e.copy())

    taus = np.array(taus)
    x_coeffs = np.array(coeffs)
    gauges = [GaugeMap(bg, AxisymVector(bg, c)) for c in x_coeffs]
    defect = np.full(len(taus), np.nan)
    if static_round:
        for j, t in enumerate(taus):
            lin = e0 * np.exp(lam * (t - t0))
            diff = AxisymVector(bg, x_coeffs[j] - lin)
            defect[j] = ops.vector_norm(bg, diff)
    return HmhfResult(bg=bg, taus=taus, x_coeffs=x_coeffs, gauges=gauges,
                      linear_defect=defect, status="completed")


# -- Lie reduction and slice projection ----------------------------------------


def lie_reduction(bg: SphereBackground, h: AxisymTensor, lambda_threshold: float,
                  tol: float = 1e-9, max_iter: int = 30,
                  smallness: float = 0.05) -> tuple[GaugeMap, AxisymTensor]:
    """Cancel generic modes with eigenvalue >= threshold by changing gauge.

    Fixed-point update X <- X - P_Lie^{>= lambda}(phi_X^*(gbar + h) - gbar),
    identifying each unit generic eigentensor with its generating field.
    """
    if ops.ck_estimate_tensor(bg, h, 3) > smallness:
        raise PerturbationTooLargeError(
            "perturbation above the gauge-reduction smallness threshold")
    decomp = spectral.sphere_decomposition(bg)
    sel = ("Lie>=", lambda_threshold)
    mask = decomp._mask(sel)
    idx = np.flatnonzero(mask)
    generators = []
    for i in idx:
        _, xvec = spectral.lie_projection(bg, decomp.modes[i])
        generators.append(xvec)

    xi = np.zeros(len(idx))
    gauge = GaugeMap.identity(bg)
    residual = math.inf
    for _it in range(max_iter):
        xfield = AxisymVector.zero(bg)
        for cf, gen in zip(xi, generators):
            xfield = xfield + cf * gen
        gauge = GaugeMap(bg, xfield)
        pulled = gauge_pullback(bg, gauge, h)
        coeffs = decomp.mode_coefficients(pulled)[idx]
        residual = float(np.linalg.norm(coeffs))
        if residual <= tol:
            return gauge, pulled
        xi = xi - coeffs
    raise NonConvergenceError(
        f"lie_reduction stalled after {max_iter} iterations", residual=residual)


def slice_projection(bg: SphereBackground, h: AxisymTensor,
                     tol: float = 1e-8, max_iter: int = 30) -> tuple[GaugeMap, AxisymTensor]:
    """Gauge the metric onto the divergence-free slice.

    Requires the background to have no essential neutral modes (true for
    round spheres in this sector); refuses otherwise.
    """
    decomp = spectral.sphere_decomposition(bg)
    for lam, cls in zip(decomp.eigenvalues, decomp.classes):
        if cls == "essential" and abs(lam) <= 1e-9:
            raise CapabilityError(
                "background has essential neutral modes; slice projection "
                "is only supported when V^0_ess = 0")
    gauge, h_slice = lie_reduction(bg, h, -math.inf, tol=0.1 * tol,
                                   max_iter=max_iter)
    p_lie = decomp.project(h_slice, "Lie")
    if ops.tensor_norm(bg, p_lie) > tol:
        raise NonConvergenceError("slice projection left a generic residue",
                                  residual=ops.tensor_norm(bg, p_lie))
    return gauge, h_slice


# -- rate fitting ---------------------------------------------------------------


def rate_fit(trace, window=None, quantity="l2f") -> tuple[float, float]:
    """Least-squares slope of log(quantity) against tau, with r^2."""
    taus = np.asarray(trace.taus, float)
    if isinstance(quantity, str):
        values = np.asarray(getattr(trace, quantity))
    else:
        values = np.asarray(quantity, float)
    if window is not None:
        mask = (taus >= window[0] - 1e-12) & (taus <= window[1] + 1e-12)
        taus, values = taus[mask], values[mask]
    if len(taus) < 10:
        raise ParameterError("rate fit needs at least 10 samples in the window")
    if np.any(values <= 0.0):
        raise ParameterError("rate fit needs a positive quantity on the window")
    logs = np.log(values)
    design = np.stack([taus, np.ones_like(taus)], axis=1)
    coef, *_ = np.linalg.lstsq(design, logs, rcond=None)
    fitted = design @ coef
    ss_res = float(np.sum((logs - fitted) ** 2))
    ss_tot = float(np.sum((logs - logs.mean()) ** 2))
    r2 = 1.0 if ss_tot <= 1e-300 else 1.0 - ss_res / ss_tot
    return float(coef[0]), r2


# -- dynamics report --------------------------------------------------------


@dataclass
class CheckRecord:
    name: str
    status: str                  # ok | hypothesis_unmet | violation
    fitted_c: float
    detail: str = ""


@dataclass
class DynamicsReport:
    records: list

    def violations(self) -> list:
        return [r for r in self.records if r.status == "violation"]

    def as_text(self) -> str:
        lines = ["dynamics report"]
        for r in self.records:
            lines.append(f"  [{r.status:16s}] {r.name:28s} C = {r.fitted_c:.4e}  {r.detail}")
        return "\n".join(lines)


def _subspace_bounds(decomp, selector):
    mask = decomp._mask(selector)
    lams = decomp.eigenvalues[mask]
    if lams.size == 0:
        return None
    return float(lams.min()), float(lams.max())


def _proj_sq(trace, selector, weighted=True):
    mask = trace.decomp._mask(selector)
    wts = 1.0 + np.maximum(0.0, -trace.decomp.eigenvalues[mask]) if weighted else 1.0
    c = trace.mode_coeffs[:, mask]
    return np.sum(wts * c * c, axis=1)


def dynamics_report(bg: SphereBackground, trace: FlowTrace,
                    subspace_pairs=(("-", "ess+"),), delta: float = 0.1,
                    c0_hyp: float = 10.0) -> DynamicsReport:
    """Audit weighted-growth inequalities and entropy bounds along a trace.

    Checks, per sample or sample interval, with every constant reported:
    the two-way H_W consistency; entropy monotonicity up to dt^2; the
    per-subspace weighted-growth differential inequalities at rate offsets
    delta; the two-subspace ratio bound for each (V1, V2) pair; and the
    three entropy-dominance lemmas, whose hypotheses are tested first and
    reported as unmet rather than failed when they do not apply.
    """
    records = []
    dec = trace.decomp
    taus = trace.taus
    eps_c2 = float(np.nanmax(trace.c2)) if len(trace.c2) else 0.0
    eps_c3 = float(np.nanmax(trace.c3)) if len(trace.c3) else 0.0
    hw_sq = trace.hw ** 2
    dt_max = float(np.max(trace.dts)) if len(trace.dts) else 0.0
    # discretization floor for derivative-based checks
    floor = 100.0 * (dt_max ** 2 + 1e-16) * max(1.0, float(np.max(hw_sq, initial=0.0)))

    # (1) H_W consistency, two routes
    worst = 0.0
    for j in range(len(taus)):
        h = trace.field_at(j)
        pm = dec.project(h, "-")
        direct = ops.tensor_inner(bg, h, h) - ops.tensor_inner(
            bg, pm, ops.stability_tensor(bg, pm))
        worst = max(worst, abs(direct - hw_sq[j]) / max(hw_sq[j], 1e-30))
    records.append(CheckRecord(
        "hw_norm_consistency", "ok" if worst <= 1e-9 else "violation", worst,
        "max relative disagreement of the two H_W evaluations"))

    # (2) entropy monotonicity up to discretization error
    if np.all(np.isfinite(trace.mu)) and len(taus) > 1:
        drops = np.maximum(0.0, trace.mu[:-1] - trace.mu[1:])
        scale = np.maximum(trace.l2f[:-1] ** 2, 1e-14)
        cfit = float(np.max(drops / (dt_max ** 2 * scale + 1e-300))) if dt_max > 0 else 0.0
        bad = np.any(drops > 100.0 * dt_max ** 2 * scale + 1e-13)
        records.append(CheckRecord(
            "entropy_monotonicity", "violation" if bad else "ok", cfit,
            f"max drop {float(drops.max() if len(drops) else 0.0):.3e} against dt^2 = {dt_max**2:.3e}"))
    else:
        records.append(CheckRecord("entropy_monotonicity", "hypothesis_unmet",
                                   math.nan, "entropy was not sampled"))

    # (3) weighted-growth inequalities per invariant subspace
    for sel in ("+", "-", "ess+", "Lie"):
        bounds = _subspace_bounds(dec, sel)
        if bounds is None:
            continue
        lam_min, lam_max = bounds
        pv = _proj_sq(trace, sel)
        cfit = 0.0
        for (rate, sign) in ((2.0 * ((1 + delta) * lam_min - delta * max(lam_min, 0.0)), +1),
                             (2.0 * ((1 - delta) * lam_max + delta * max(lam_max, 0.0)), -1)):
            weight = np.exp(-rate * (taus - taus[0]))
            f_vals = weight * pv
            df = np.diff(f_vals) / np.diff(taus)
            rhs = 0.5 * (weight[:-1] * hw_sq[:-1] + weight[1:] * hw_sq[1:])
            viol = sign * df + floor + 1e-13
            with np.errstate(divide="ignore", invalid="ignore"):
                ratios = np.where(viol < 0.0, -viol / np.maximum(
                    max(eps_c2, 1e-16) * rhs, 1e-300), 0.0)
            cfit = max(cfit, float(np.max(ratios, initial=0.0)))
        records.append(CheckRecord(
            f"weighted_growth[{sel}]", "ok" if cfit < 1e4 else "violation",
            cfit, f"lam range [{lam_min:g}, {lam_max:g}], delta = {delta}"))

    # (4) two-subspace ratio bound
    for v1, v2 in subspace_pairs:
        b1, b2 = _subspace_bounds(dec, v1), _subspace_bounds(dec, v2)
        if b1 is None or b2 is None:
            records.append(CheckRecord(f"ratio_bound[{v1},{v2}]",
                                       "hypothesis_unmet", math.nan,
                                       "empty subspace"))
            continue
        p1, p2 = _proj_sq(trace, v1), _proj_sq(trace, v2)
        if hw_sq[0] > c0_hyp * p2[0] or p2[0] <= 0.0:
            records.append(CheckRecord(
                f"ratio_bound[{v1},{v2}]", "hypothesis_unmet", math.nan,
                f"|h_0|_HW^2 > C0 |P_V2 h_0|_HW^2 with C0 = {c0_hyp}"))
            continue
        a_init = p1[0] / p2[0] if p2[0] > 0 else math.inf
        lam1max, lam2min = b1[1], b2[0]
        expo = 2.0 * ((1 - delta) * lam1max + delta * max(lam1max, 0.0)
                      - (1 + delta) * lam2min + delta * max(lam2min, 0.0) + delta)
        bound = a_init * np.exp(expo * (taus - taus[0])) * p2 + floor + 1e-13
        margin = p1 / np.maximum(bound, 1e-300)
        worst = float(np.max(margin))
        records.append(CheckRecord(
            f"ratio_bound[{v1},{v2}]",
            "ok" if worst <= 1.0 + 1e-6 else "violation", worst,
            f"A = {a_init:.3e}, exponent = {expo:.3f}"))

    # (5) entropy-dominance lemmas
    mu0 = entropy_mod.mu_background(bg)
    have_mu = np.all(np.isfinite(trace.mu))
    eps_hyp = max(eps_c3, 1e-12)

    p_lie_hw = _proj_sq(trace, "Lie")
    p_ess0 = _proj_sq(trace, "ess0", weighted=False)
    p_minus_hw = _proj_sq(trace, "-")
    p_ess_plus = _proj_sq(trace, "ess+", weighted=False)
    p_zero = _proj_sq(trace, "0", weighted=False)
    p_lie_plus = _proj_sq(trace, "Lie+", weighted=False)

    if have_mu:
        # dominance of the essential unstable modes
        applicable = (p_lie_hw + p_ess0 <= eps_hyp * hw_sq + 1e-30) & (trace.mu >= mu0 - 1e-12)
        if np.any(applicable):
            ratio = p_minus_hw[applicable] / np.maximum(p_ess_plus[applicable], 1e-300)
            records.append(CheckRecord("essential_unstable_dominance", "ok",
                                       float(np.max(ratio, initial=0.0)),
                                       f"applicable at {int(np.sum(applicable))} samples"))
        else:
            records.append(CheckRecord("essential_unstable_dominance",
                                       "hypothesis_unmet", math.nan,
                                       "gauge/neutral smallness or entropy sign unmet"))

        # dominance of the stable modes
        lpm = np.empty(len(taus))
        for j in range(len(taus)):
            h = trace.field_at(j)
            pm = dec.project(h, "-")
            lpm[j] = abs(ops.tensor_inner(bg, h, ops.stability_tensor(bg, pm)))
        applicable = (p_zero + p_lie_plus <= eps_hyp * hw_sq + 1e-30) & (trace.mu <= mu0 + 1e-12)
        if np.any(applicable):
            ratio = p_ess_plus[applicable] / np.maximum(lpm[applicable], 1e-300)
            records.append(CheckRecord("stable_dominance", "ok",
                                       float(np.max(ratio, initial=0.0)),
                                       f"applicable at {int(np.sum(applicable))} samples"))
        else:
            records.append(CheckRecord("stable_dominance", "hypothesis_unmet",
                                       math.nan, "hypotheses unmet along the trace"))

        # upper bound of the norm by the entropy gap
        p_lie_l2 = _proj_sq(trace, "Lie", weighted=False)
        hyp = p_lie_l2 + lpm + p_ess0 <= eps_hyp * trace.l2f ** 2 + 1e-30
        gap = trace.mu - mu0
        applicable = hyp & (gap > 0.0)
        if np.any(applicable):
            cfit = float(np.max(trace.l2f[applicable] / np.maximum(gap[applicable], 1e-300)))
            records.append(CheckRecord("entropy_upper_bound", "ok", cfit,
                                       f"applicable at {int(np.sum(applicable))} samples"))
        else:
            reason = ("entropy gap has the wrong sign (hypothesis (2) unmet)"
                      if np.all(gap <= 0.0) else "dominance hypothesis unmet")
            records.append(CheckRecord("entropy_upper_bound", "hypothesis_unmet",
                                       math.nan, reason))
    else:
        for name in ("essential_unstable_dominance", "stable_dominance",
                     "entropy_upper_bound"):
            records.append(CheckRecord(name, "hypothesis_unmet", math.nan,
                                       "entropy was not sampled"))

    # (6) bilinear error estimate |<phi, Q(h)>| <= C |phi| |h|_C2 |h|_HW
    rng = np.random.default_rng(0)
    cfit = 0.0
    for j in range(0, len(taus), max(1, len(taus) // 8)):
        h = trace.field_at(j)
        if trace.c2[j] < 1e-14 or trace.hw[j] < 1e-14:
            continue
        q = rdtf_quadratic(bg, h)
        for _ in range(4):
            vec = rng.standard_normal(2 * bg.l_max)
            phi = AxisymTensor.from_coeff_vector(bg, vec)
            num = abs(ops.tensor_inner(bg, phi, q))
            den = ops.tensor_norm(bg, phi) * trace.c2[j] * trace.hw[j]
            cfit = max(cfit, num / max(den, 1e-300))
    records.append(CheckRecord("quadratic_error_estimate",
                               "ok" if cfit < 1e3 else "violation", cfit,
                               "sampled test tensors against Q(h)"))

    return DynamicsReport(records=records)
