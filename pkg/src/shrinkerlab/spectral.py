r"""Stability operators, their spectra and mode classification.

The tensor stability operator L = Delta_f + 2 Rm* and the vector operator
frak L = Delta_f + 1/2 are assembled as Galerkin block matrices over an
orthonormal basis per zonal degree (2x2 on tensors for l >= 2; the l = 0
and l = 1 tensor blocks and all vector blocks are 1x1, the degree-1
Hessian direction being a multiple of the conformal one).

Eigentensors are tagged by sign (unstable / neutral / stable) and by
class: *generic* modes are Lie derivatives (the image of div*), *essential*
modes are divergence-free.  Degenerate eigenspaces are split before
tagging by solving

    div_f div*_f X = -(1/2) div_f h,

which is a per-degree scalar solve in this sector, and projecting onto
Lie_X gbar.  The divergence maps intertwine the two operators: div_0 and
-2 div* restrict to inverse isomorphisms (up to the factor lambda) between
the generic lambda-eigenspace of L and the lambda-eigenspace of frak L,
which commutator_report checks numerically together with the first-order
identities behind it.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh

from .background import SphereBackground
from .errors import ShrinkerLabError
from .fields import AxisymTensor, AxisymVector
from . import operators as ops

_EIG_TOL = 1e-9          # sign classification threshold
_DEGEN_TOL = 1e-9        # eigenvalue grouping threshold


# -- discrete operators ----------------------------------------------------


@dataclass(frozen=True)
class DiscreteOperator:
    """Per-degree Galerkin blocks of a stability operator."""

    bg: SphereBackground
    kind: str                      # "L_tensor" | "frakL_vector"
    blocks: list                   # dense symmetric blocks, one per degree
    basis: list                    # orthonormal basis fields per degree
    degrees: list
    asymmetry: float               # max symmetrized residual over blocks

    def apply(self, field_):
        """Matrix action, for cross-checks against the operator functions."""
        if self.kind == "L_tensor":
            return ops.stability_tensor(self.bg, field_)
        return ops.stability_vector(self.bg, field_)


def _orthonormal_tensor_basis(bg: SphereBackground, l: int) -> list[AxisymTensor]:
    n = bg.n
    c = np.zeros(bg.l_max + 1)
    c[l] = 1.0 / math.sqrt(n)
    conf = AxisymTensor(bg, c, np.zeros_like(c))
    if l < 2:
        return [conf]
    eps = bg.scalar_eigenvalue(l)
    d = np.zeros(bg.l_max + 1)
    d[l] = 1.0
    cc = np.zeros_like(d)
    cc[l] = eps / n
    hess = AxisymTensor(bg, cc, d)      # hess phi_l projected off conf
    nrm = math.sqrt(eps * eps - 0.5 * eps - eps * eps / n)
    return [conf, hess * (1.0 / nrm)]


def assemble_operator(bg: SphereBackground, kind: str) -> DiscreteOperator:
    """Galerkin assembly of L (tensors) or frak L (vectors)."""
    if kind == "L_tensor":
        degrees = list(range(0, bg.l_max + 1))
        bases = [_orthonormal_tensor_basis(bg, l) for l in degrees]
        op, inner = ops.stability_tensor, ops.tensor_inner
    elif kind == "frakL_vector":
        degrees = list(range(1, bg.l_max + 1))
        bases = []
        for l in degrees:
            x = AxisymVector.gradient(bg, l)
            bases.append([x * (1.0 / math.sqrt(bg.scalar_eigenvalue(l)))])
        op, inner = ops.stability_vector, ops.vector_inner
    else:
        raise ValueError(f"unknown operator kind {kind!r}")

    blocks = []
    asym = 0.0
    for basis in bases:
        k = len(basis)
        mat = np.empty((k, k))
        images = [op(bg, e) for e in basis]
        for i in range(k):
            for j in range(k):
                mat[i, j] = inner(bg, basis[i], images[j])
        asym = max(asym, float(np.abs(mat - mat.T).max()))
        blocks.append(0.5 * (mat + mat.T))
    return DiscreteOperator(bg=bg, kind=kind, blocks=blocks, basis=bases,
                            degrees=degrees, asymmetry=asym)


# -- decomposition ----------------------------------------------------------


@dataclass
class SpectralDecomposition:
    """Eigenpairs with sign and generic/essential tags."""

    bg: SphereBackground
    kind: str
    eigenvalues: np.ndarray        # sorted descending
    modes: list                    # orthonormal eigenfields
    degrees: np.ndarray            # dominant zonal degree per mode
    residuals: np.ndarray          # |Op h_i - lambda_i h_i|
    signs: list = field(default_factory=list)      # unstable/neutral/stable
    classes: list = field(default_factory=list)    # generic/essential

    @property
    def tagged(self) -> bool:
        return bool(self.classes)

    @property
    def index_unstable(self) -> int:
        return int(np.sum(self.eigenvalues > _EIG_TOL))

    @property
    def count_neutral(self) -> int:
        return int(np.sum(np.abs(self.eigenvalues) <= _EIG_TOL))

    @property
    def lambda_plus(self) -> float:
        pos = self.eigenvalues[self.eigenvalues > _EIG_TOL]
        return float(pos.min()) if pos.size else math.nan

    @property
    def lambda_minus(self) -> float:
        neg = self.eigenvalues[self.eigenvalues < -_EIG_TOL]
        return float(-neg.max()) if neg.size else math.nan

    @property
    def essential_index(self) -> int:
        self._require_tags()
        return sum(1 for lam, cls in zip(self.eigenvalues, self.classes)
                   if cls == "essential" and lam > _EIG_TOL)

    def _require_tags(self):
        if not self.tagged:
            raise ShrinkerLabError("decomposition has not been classified yet")

    # -- projections -------------------------------------------------------

    def mode_coefficients(self, h) -> np.ndarray:
        """L^2_f coefficients of h against the eigenbasis."""
        if self.kind == "L_tensor":
            return np.array([ops.tensor_inner(self.bg, m, h) for m in self.modes])
        return np.array([ops.vector_inner(self.bg, m, h) for m in self.modes])

    def _mask(self, selector) -> np.ndarray:
        self._require_tags()
        lam = self.eigenvalues
        if isinstance(selector, tuple) and selector[0] in ("Lie>=", "lie_geq"):
            thr = selector[1]
            cls = np.array([c == "generic" for c in self.classes])
            return cls & (lam >= thr - _EIG_TOL)
        if not isinstance(selector, str):
            raise ValueError(f"unknown selector {selector!r}")
        sign_part, class_part = "", ""
        sel = selector
        if sel.startswith(("Lie", "ess")):
            class_part, sign_part = sel[:3], sel[3:]
        else:
            sign_part = sel
        mask = np.ones(lam.shape, dtype=bool)
        if class_part == "Lie":
            mask &= np.array([c == "generic" for c in self.classes])
        elif class_part == "ess":
            mask &= np.array([c == "essential" for c in self.classes])
        elif class_part:
            raise ValueError(f"unknown selector {selector!r}")
        if sign_part == "+":
            mask &= lam > _EIG_TOL
        elif sign_part == "-":
            mask &= lam < -_EIG_TOL
        elif sign_part == "0":
            mask &= np.abs(lam) <= _EIG_TOL
        elif sign_part:
            raise ValueError(f"unknown selector {selector!r}")
        return mask

    def project(self, h, selector):
        """L^2_f-orthogonal projection onto the selected eigenmodes."""
        coeffs = self.mode_coefficients(h)
        mask = self._mask(selector)
        out = None
        for keep, cf, mode in zip(mask, coeffs, self.modes):
            if keep and cf != 0.0:
                out = cf * mode if out is None else out + cf * mode
        if out is None:
            out = (AxisymTensor.zero(self.bg) if self.kind == "L_tensor"
                   else AxisymVector.zero(self.bg))
        return out

    def hw_norm_sq(self, h) -> float:
        """|h|^2 - <P^- h, L P^- h> = sum (1 + lambda_i^-) <h, h_i>^2."""
        coeffs = self.mode_coefficients(h)
        wts = 1.0 + np.maximum(0.0, -self.eigenvalues)
        return float(np.sum(wts * coeffs * coeffs))

    def hw_norm(self, h) -> float:
        return math.sqrt(max(self.hw_norm_sq(h), 0.0))


def eigendecompose(op: DiscreteOperator) -> SpectralDecomposition:
    """Full spectrum of the truncated operator, untagged."""
    entries = []
    for deg, block, basis in zip(op.degrees, op.blocks, op.basis):
        try:
            vals, vecs = eigh(block)
        except Exception as exc:  # pragma: no cover - eigh on 2x2 is robust
            raise ShrinkerLabError(
                f"eigensolver failure on degree-{deg} block: {exc}") from exc
        for j in range(len(vals)):
            mode = None
            for coef, e in zip(vecs[:, j], basis):
                mode = coef * e if mode is None else mode + coef * e
            entries.append((float(vals[j]), deg, mode))

    entries.sort(key=lambda t: (-t[0], t[1]))
    eigenvalues = np.array([t[0] for t in entries])
    degrees = np.array([t[1] for t in entries])
    modes = [_fix_sign(t[2]) for t in entries]

    residuals = np.empty(len(modes))
    for i, (lam, mode) in enumerate(zip(eigenvalues, modes)):
        img = op.apply(mode)
        diff = img - lam * mode
        if op.kind == "L_tensor":
            residuals[i] = ops.tensor_norm(op.bg, diff)
        else:
            residuals[i] = ops.vector_norm(op.bg, diff)

    return SpectralDecomposition(bg=op.bg, kind=op.kind,
                                 eigenvalues=eigenvalues, modes=modes,
                                 degrees=degrees, residuals=residuals)


def _fix_sign(mode):
    vec = mode.coeff_vector() if isinstance(mode, AxisymTensor) else mode.e
    lead = vec[np.argmax(np.abs(vec))]
    return mode * (-1.0) if lead < 0 else mode


# -- classification ----------------------------------------------------------


def lie_projection(bg: SphereBackground, h: AxisymTensor) -> tuple[AxisymTensor, AxisymVector]:
    """P_Lie h = Lie_X gbar with div_f div*_f X = -(1/2) div_f h.

    In this sector div_f div*_f acts on grad phi_l by (eps_l - 1/2) > 0,
    so the solve is an invertible per-degree division (no Killing kernel).
    """
    dv = ops.divergence(bg, h)
    eps = bg.grid.eps
    denom = eps[1:] - 0.5
    if np.any(np.abs(denom) < 1e-12):
        raise ShrinkerLabError("unexpected Killing-type kernel in div_f div*_f")
    x = np.zeros(bg.l_max + 1)
    x[1:] = -0.5 * dv.e[1:] / denom
    xvec = AxisymVector(bg, x)
    return ops.lie_derivative(bg, xvec), xvec


def classify_modes(bg: SphereBackground,
                   decomp: SpectralDecomposition) -> SpectralDecomposition:
    """Fill generic/essential and sign tags, splitting degenerate spaces."""
    if decomp.kind != "L_tensor":
        decomp.signs = [_sign_tag(l) for l in decomp.eigenvalues]
        decomp.classes = ["generic"] * len(decomp.modes)
        return decomp

    new_entries = []
    i = 0
    lam = decomp.eigenvalues
    while i < len(lam):
        j = i
        while j + 1 < len(lam) and abs(lam[j + 1] - lam[i]) <= _DEGEN_TOL:
            j += 1
        group = [decomp.modes[k] for k in range(i, j + 1)]
        value = float(np.mean(lam[i:j + 1]))
        generic, essential = [], []
        for mode in group:
            p_lie, _ = lie_projection(bg, mode)
            p_ess = mode - p_lie
            if ops.tensor_norm(bg, p_lie) > 1e-8:
                generic.append(p_lie)
            if ops.tensor_norm(bg, p_ess) > 1e-8:
                essential.append(p_ess)
        for cls, fields_ in (("essential", essential), ("generic", generic)):
            for mode in _orthonormalize(bg, fields_):
                new_entries.append((value, cls, _fix_sign(mode)))
        i = j + 1

    new_entries.sort(key=_entry_order(bg))
    decomp.eigenvalues = np.array([e[0] for e in new_entries])
    decomp.classes = [e[1] for e in new_entries]
    decomp.modes = [e[2] for e in new_entries]
    decomp.signs = [_sign_tag(e[0]) for e in new_entries]
    decomp.degrees = np.array([_dominant_degree(m) for m in decomp.modes])
    decomp.residuals = np.array(
        [ops.tensor_norm(bg, ops.stability_tensor(bg, m) - e[0] * m)
         for e, m in zip(new_entries, decomp.modes)])
    return decomp


def _entry_order(bg):
    def key(entry):
        value, _cls, mode = entry
        l = _dominant_degree(mode)
        angle = math.atan2(abs(mode.d[l]), mode.c[l]) if l >= 2 else 0.0
        return (-value, l, angle)
    return key


def _dominant_degree(mode: AxisymTensor) -> int:
    mags = np.abs(mode.c) + np.abs(mode.d)
    return int(np.argmax(mags))


def _orthonormalize(bg, fields_):
    out = []
    for f in fields_:
        for g in out:
            f = f - ops.tensor_inner(bg, f, g) * g
        nrm = ops.tensor_norm(bg, f)
        if nrm > 1e-10:
            out.append(f * (1.0 / nrm))
    return out


def _sign_tag(lam: float) -> str:
    if lam > _EIG_TOL:
        return "unstable"
    if lam < -_EIG_TOL:
        return "stable"
    return "neutral"


_DECOMP_CACHE: dict[int, SpectralDecomposition] = {}
_VECTOR_CACHE: dict[int, SpectralDecomposition] = {}


def sphere_decomposition(bg: SphereBackground) -> SpectralDecomposition:
    """Classified tensor decomposition, cached per background."""
    key = id(bg)
    if key not in _DECOMP_CACHE:
        _DECOMP_CACHE[key] = classify_modes(
            bg, eigendecompose(assemble_operator(bg, "L_tensor")))
    return _DECOMP_CACHE[key]


def vector_decomposition(bg: SphereBackground) -> SpectralDecomposition:
    key = id(bg)
    if key not in _VECTOR_CACHE:
        _VECTOR_CACHE[key] = classify_modes(
            bg, eigendecompose(assemble_operator(bg, "frakL_vector")))
    return _VECTOR_CACHE[key]


def project(bg: SphereBackground, h: AxisymTensor, selector):
    """Module-level projection using the cached sphere decomposition."""
    return sphere_decomposition(bg).project(h, selector)


# -- reports -----------------------------------------------------------------


@dataclass(frozen=True)
class CommutatorReport:
    """Max residuals of the four divergence/stability identities."""

    n_samples: int
    lie_to_vector: float       # div_0(Lie_Z g) = (Delta + Ric) Z
    intertwine: float          # L div* = div* frakL
    lie_block: float           # L = -2 div* div_0 on Im div*
    eigen_isomorphism: float   # (-2 div*) div_0 = lambda id on generic modes

    def max_residual(self) -> float:
        return max(self.lie_to_vector, self.intertwine,
                   self.lie_block, self.eigen_isomorphism)


def commutator_report(bg: SphereBackground, n_samples: int = 100,
                      seed: int = 0) -> CommutatorReport:
    rng = np.random.default_rng(seed)
    r1 = r2 = r3 = 0.0
    for _ in range(n_samples):
        e = np.zeros(bg.l_max + 1)
        e[1:] = rng.standard_normal(bg.l_max)
        z = AxisymVector(bg, e)
        nz = ops.vector_norm(bg, z)

        lhs = ops.div_zero(bg, ops.lie_derivative(bg, z))
        rhs = ops.stability_vector(bg, z)
        r1 = max(r1, ops.vector_norm(bg, lhs - rhs) / nz)

        lhs_t = ops.stability_tensor(bg, ops.div_star(bg, z))
        rhs_t = ops.div_star(bg, ops.stability_vector(bg, z))
        r2 = max(r2, ops.tensor_norm(bg, lhs_t - rhs_t) / nz)

        h = ops.lie_derivative(bg, z)
        nh = ops.tensor_norm(bg, h)
        lhs_b = ops.stability_tensor(bg, h)
        rhs_b = -2.0 * ops.div_star(bg, ops.div_zero(bg, h))
        r3 = max(r3, ops.tensor_norm(bg, lhs_b - rhs_b) / nh)

    r4 = 0.0
    decomp = sphere_decomposition(bg)
    for lam, cls, mode in zip(decomp.eigenvalues, decomp.classes, decomp.modes):
        if cls != "generic" or abs(lam) <= _EIG_TOL:
            continue
        image = -2.0 * ops.div_star(bg, ops.div_zero(bg, mode))
        r4 = max(r4, ops.tensor_norm(bg, image - lam * mode))

    return CommutatorReport(n_samples=n_samples, lie_to_vector=r1,
                            intertwine=r2, lie_block=r3, eigen_isomorphism=r4)


def index_report(bg: SphereBackground) -> tuple[int, int, int]:
    """(generic index of L, essential index of L, index of frak L) in-sector."""
    tens = sphere_decomposition(bg)
    vect = vector_decomposition(bg)
    gen_index = sum(1 for lam, cls in zip(tens.eigenvalues, tens.classes)
                    if cls == "generic" and lam > _EIG_TOL)
    ess_index = tens.essential_index
    index_frakl = vect.index_unstable
    return gen_index, ess_index, index_frakl


def export_spectrum_csv(decomp: SpectralDecomposition, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["l", "eigenvalue", "class", "sign", "residual"])
        for l, lam, cls, sgn, res in zip(decomp.degrees, decomp.eigenvalues,
                                         decomp.classes or [""] * len(decomp.modes),
                                         decomp.signs or [""] * len(decomp.modes),
                                         decomp.residuals):
            writer.writerow([int(l), repr(float(lam)), cls, sgn, repr(float(res))])
