"""
Bergman projection and the Hodge split of slice L^2 fields.

    <f, g> = int_{Omega_D} conj(f(x)) g(x) dV(x)

A^2 is truncated to the real span of q^n e_A (n <= degree, e_A over the
blades). P is the real-orthogonal projection onto that span (scalar part of
the inner product); Q = 1 - P. Because the span is closed under right
multiplication by blades, real orthogonality already implies Clifford
orthogonality; `orthogonality_residual` measures it anyway.

The trace criterion: f = |x_vec|^(1-m) G w with w vanishing on the boundary
has T(|x_vec|^(m-1) f) = w, so its boundary trace is zero. Integration by
parts puts the Clifford-orthogonal complement of A^2 in the image of
d_u - I d_v instead (`orthogonal_witness`); the two spaces differ, so a
non-polynomial f can have a resolved P part and still a nonzero Q trace.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg

from .clifford import Multivector, Paravector, algebra, slice_coordinates
from .errors import ArgumentError, DegreeReductionError, SingularityError
from .geometry import AxialDomain, sphere_area
from .operators import (
    FieldLike,
    FieldSample,
    ResidualReport,
    _map,
    _report,
    as_field,
    richardson,
    teodorescu,
)
from .slicefn import (
    GConfig,
    SliceFunction,
    StemFunction,
    conjugate_g_image,
    g_image,
    linear_combination,
    make_polynomial,
    radial_weight,
)

logger = logging.getLogger(__name__)

DEFAULT_DEGREE = 6
CONDITION_LIMIT = 1e12
TRACE_LEVELS = 3


# --------------------------------------------------------------------------
# inner product

def _volume_weights(domain: AxialDomain) -> np.ndarray:
    v = domain.slice_quad.nodes[:, 1]
    return sphere_area(domain.dim) * domain.slice_quad.weights * v ** (domain.dim - 1)


def inner_product(f: FieldLike, g: FieldLike, domain: AxialDomain) -> Multivector:
    f, g = as_field(f), as_field(g)
    if f.dim != domain.dim or g.dim != domain.dim:
        raise ArgumentError(f"fields over Cl_{f.dim} and Cl_{g.dim} on a domain in R^{domain.dim + 1}")
    alg = algebra(domain.dim)
    if f.is_slice and g.is_slice:
        # the I-linear cross terms cancel over the sphere
        u, v = domain.slice_quad.nodes[:, 0], domain.slice_quad.nodes[:, 1]
        f1, f2 = f.function.stem.values(u, v)
        g1, g2 = g.function.stem.values(u, v)
        integrand = alg.product(alg.conjugate(f1), g1) + alg.product(alg.conjugate(f2), g2)
        return Multivector(domain.dim, _volume_weights(domain) @ integrand)
    fv, gv = f.grid(domain), g.grid(domain)
    nodes = domain.slice_quad.full_nodes()
    w = domain.slice_quad.full_weights() * np.abs(nodes[:, 1]) ** (domain.dim - 1)
    total = np.zeros(alg.size)
    for ws, a, b in zip(domain.sphere_quad.weights, fv, gv):
        total += ws * (w @ alg.product(alg.conjugate(a), b))
    return Multivector(domain.dim, total)


def l2_norm(f: FieldLike, domain: AxialDomain) -> float:
    return math.sqrt(max(inner_product(f, f, domain).scalar_part, 0.0))


def weight_map(f: SliceFunction, exponent: int) -> SliceFunction:
    return radial_weight(f, exponent)


# --------------------------------------------------------------------------
# basis

@dataclass(frozen=True, eq=False)
class BergmanBasis:
    degree: int
    dim: int
    functions: Tuple[SliceFunction, ...]
    gram: np.ndarray  # (K, K, 2**m): <phi_i, phi_j>
    monomial_gram: np.ndarray  # (N+1, N+1): <q^n, q^k>, real
    condition: float

    @property
    def size(self) -> int:
        return len(self.functions)

    def index(self, n: int, blade: int) -> int:
        return n * (1 << self.dim) + blade

    def gram_entry(self, i: int, j: int) -> Multivector:
        return Multivector(self.dim, self.gram[i, j])

    def conjugate_symmetry_defect(self) -> float:
        alg = algebra(self.dim)
        flipped = np.swapaxes(self.gram, 0, 1) * alg.conj_signs
        return float(np.max(np.abs(self.gram - flipped)))


def _monomials(domain: AxialDomain, degree: int) -> np.ndarray:
    nodes = domain.slice_quad.nodes
    z = nodes[:, 0] + 1j * nodes[:, 1]
    return z[None, :] ** np.arange(degree + 1)[:, None]


def _design(domain: AxialDomain, degree: int) -> np.ndarray:
    """Weighted real design matrix: rows (node, stem component), columns n."""
    zn = _monomials(domain, degree)
    sw = np.sqrt(_volume_weights(domain))
    return np.concatenate([(zn.real * sw).T, (zn.imag * sw).T])


def _gram_condition(A: np.ndarray) -> float:
    """Condition of the diagonally scaled Gram matrix A^T A, from the singular values of A."""
    scale = np.linalg.norm(A, axis=0)
    scale = np.where(scale > 0.0, scale, 1.0)
    s = linalg.svdvals(A / scale)
    return float((s[0] / s[-1]) ** 2) if s[-1] > 0.0 else math.inf


def build_basis(domain: AxialDomain, degree: int = DEFAULT_DEGREE) -> BergmanBasis:
    if degree < 0:
        raise ArgumentError(f"basis degree must be non-negative, got {degree}")
    m = domain.dim
    alg = algebra(m)
    d = alg.size
    A = _design(domain, degree)
    condition = _gram_condition(A)
    if condition > CONDITION_LIMIT:
        raise DegreeReductionError(
            f"Bergman system of degree {degree} on {domain.profile.describe()} is numerically rank-deficient "
            f"(condition {condition:.3g}); lower the degree",
            condition,
        )
    M = A.T @ A
    blades = np.eye(d)
    functions = []
    for n in range(degree + 1):
        for a in range(d):
            coeffs = [Multivector.zero(m)] * n + [Multivector(m, blades[a])]
            functions.append(make_polynomial(coeffs, m, name=f"q^{n} {alg.blade_name(a)}"))
    blade_gram = alg.product(alg.conjugate(blades)[:, None, :], blades[None, :, :])
    gram = np.einsum("nk,abd->nakbd", M, blade_gram).reshape(len(functions), len(functions), d)
    logger.debug("Bergman basis degree %d: %d functions, condition %.3g", degree, len(functions), condition)
    return BergmanBasis(degree, m, tuple(functions), gram, M, condition)


# --------------------------------------------------------------------------
# projection

@dataclass(frozen=True, eq=False)
class HodgeSplit:
    p_part: FieldSample
    q_part: FieldSample
    coefficients: np.ndarray  # (degree + 1, 2**m): p_part = sum_n q^n c_n

    def p_function(self) -> SliceFunction:
        return self.p_part.require_slice("the projected part")


def _project_slice(f: FieldSample, basis: BergmanBasis, domain: AxialDomain) -> np.ndarray:
    u, v = domain.slice_quad.nodes[:, 0], domain.slice_quad.nodes[:, 1]
    f1, f2 = f.function.stem.values(u, v)
    sw = np.sqrt(_volume_weights(domain))[:, None]
    rhs = np.concatenate([f1 * sw, f2 * sw])
    coeffs, *_ = linalg.lstsq(_design(domain, basis.degree), rhs)
    return coeffs


def _project_grid(f: FieldSample, basis: BergmanBasis, domain: AxialDomain) -> np.ndarray:
    """Least squares over every sphere node; I_s e_A mixes blades, so no per-blade split."""
    alg = algebra(domain.dim)
    d = alg.size
    nodes = domain.slice_quad.full_nodes()
    z = nodes[:, 0] + 1j * nodes[:, 1]
    zn = z[:, None] ** np.arange(basis.degree + 1)[None, :]
    w = domain.slice_quad.full_weights() * np.abs(nodes[:, 1]) ** (domain.dim - 1)
    blades = np.eye(d)
    rows, rhs = [], []
    for ws, I, values in zip(domain.sphere_quad.weights, domain.sphere_quad.coefficients(), f.grid(domain)):
        sw = np.sqrt(ws * w)
        Ie = alg.product(I, blades)  # (A, B)
        # column (n, A) at row (k, B): Re z^n [e_A]_B + Im z^n [I e_A]_B
        block = zn.real[:, :, None, None] * blades[None, None] + zn.imag[:, :, None, None] * Ie[None, None]
        block = np.transpose(block, (0, 3, 1, 2)).reshape(len(z) * d, -1)
        rows.append(block * np.repeat(sw, d)[:, None])
        rhs.append((values * sw[:, None]).reshape(-1))
    coeffs, *_ = linalg.lstsq(np.concatenate(rows), np.concatenate(rhs))
    return coeffs.reshape(basis.degree + 1, d)


def project_P(f: FieldLike, basis: BergmanBasis, domain: AxialDomain) -> HodgeSplit:
    f = as_field(f)
    if f.dim != basis.dim:
        raise ArgumentError(f"field over Cl_{f.dim} projected on a Cl_{basis.dim} basis")
    coeffs = _project_slice(f, basis, domain) if f.is_slice else _project_grid(f, basis, domain)
    m = basis.dim
    p_fn = make_polynomial([Multivector(m, c) for c in coeffs], m, name=f"P[{f.name}]")
    p_part = FieldSample.from_function(p_fn)
    if f.is_slice:
        q_part = FieldSample.from_function(linear_combination([f.function, p_fn], [1.0, -1.0], name=f"Q[{f.name}]"))
    else:
        q_part = FieldSample.tabulated(domain, f.values - p_part.grid(domain), name=f"Q[{f.name}]")
    return HodgeSplit(p_part, q_part, coeffs)


def complementarity_defect(f: FieldLike, split: HodgeSplit, domain: AxialDomain) -> float:
    f = as_field(f)
    total = split.p_part.grid(domain) + split.q_part.grid(domain)
    return float(np.max(np.abs(total - f.grid(domain))))


def orthogonality_residual(f: FieldLike, split: HodgeSplit, basis: BergmanBasis, domain: AxialDomain) -> float:
    """max_i |<phi_i, Qf>| / (||f|| ||phi_i||); zero for an exact projection."""
    f_norm = l2_norm(f, domain)
    if f_norm == 0.0:
        return 0.0
    worst = 0.0
    for i, phi in enumerate(basis.functions):
        phi_norm = math.sqrt(basis.gram[i, i, 0])
        value = inner_product(phi, split.q_part, domain).norm()
        worst = max(worst, value / (f_norm * phi_norm))
    return worst


def idempotence_defect(split: HodgeSplit, basis: BergmanBasis, domain: AxialDomain) -> float:
    again = project_P(split.p_part, basis, domain)
    scale = max(1.0, float(np.max(np.abs(split.coefficients))))
    return float(np.max(np.abs(again.coefficients - split.coefficients))) / scale


# --------------------------------------------------------------------------
# im Q

def boundary_bubble(domain: AxialDomain) -> SliceFunction:
    """A scalar slice function, positive inside the profile and zero on its boundary."""
    m = domain.dim
    p = domain.profile.params
    kind = domain.profile.kind
    e0 = np.zeros(1 << m)
    e0[0] = 1.0

    if kind == "disk":
        def bubble(u, v):
            return p["R"] ** 2 - (u - p["u0"]) ** 2 - (np.abs(v) - p["v0"]) ** 2
    elif kind == "rectangle":
        def bubble(u, v):
            av = np.abs(v)
            return (u - p["a"]) * (p["b"] - u) * (av - p["v_min"]) * (p["v_max"] - av)
    elif kind == "annulus-sector":
        def bubble(u, v):
            du, dv = u - p["u0"], np.abs(v) - p["v0"]
            r = np.hypot(du, dv)
            t = np.arctan2(dv, du)
            return (r - p["r_in"]) * (p["r_out"] - r) * (t - p["theta0"]) * (p["theta1"] - t)
    else:
        raise ArgumentError(f"no boundary bubble for profile kind {kind!r}")

    def F1(u, v):
        return np.asarray(bubble(u, v))[..., None] * e0

    def F2(u, v):
        return np.zeros(np.shape(u) + (1 << m,))

    return SliceFunction(StemFunction(m, F1, F2, name=f"bubble[{kind}]"))


def im_q_witness(w: SliceFunction, cfg: Optional[GConfig] = None) -> SliceFunction:
    """|x_vec|^(1-m) G w; the trace of T(|x_vec|^(m-1) .) vanishes when w does on the boundary."""
    return radial_weight(g_image(w, cfg), 1 - w.dim)


def orthogonal_witness(w: SliceFunction, cfg: Optional[GConfig] = None) -> SliceFunction:
    """|x_vec|^(1-m) (d_u - I d_v) w; Clifford-orthogonal to A^p when w vanishes on the boundary."""
    return radial_weight(conjugate_g_image(w, cfg), 1 - w.dim)


def _weighted(f: FieldSample, domain: AxialDomain) -> FieldSample:
    m = domain.dim
    if f.is_slice:
        return FieldSample.from_function(weight_map(f.function, m - 1))
    v = np.abs(domain.slice_quad.full_nodes()[:, 1])
    return FieldSample.tabulated(domain, f.values * (v ** (m - 1))[None, :, None], name=f"|v|^{m - 1}*{f.name}")


def boundary_trace(f: FieldLike, domain: AxialDomain, q: Paravector) -> Multivector:
    """Trace of T f at a boundary point, by Richardson extrapolation along the inner normal."""
    f = as_field(f)
    u, v, Iq = slice_coordinates(q)
    if Iq is None:
        raise SingularityError("boundary traces are taken off the real axis", point=q, sphere=(u, 0.0))
    bu, bv, nu, nv = domain.nearest_boundary_point(u, v)
    t0 = 0.1 * domain.inradius
    ts = [t0 / 2 ** k for k in range(TRACE_LEVELS)]
    values = [teodorescu(f, domain, Paravector.from_slice(bu - t * nu, bv - t * nv, Iq)).coeffs for t in ts]
    limit, _ = richardson(ts, values)
    return Multivector(domain.dim, limit)


def im_q_trace(f: FieldLike, domain: AxialDomain, probes: Optional[Sequence[Paravector]] = None,
               seed: int = 0, workers: int = 1) -> List[float]:
    """|trace of T(|x_vec|^(m-1) f)| at boundary probes; zero for f in im Q."""
    weighted = _weighted(as_field(f), domain)
    pts = list(probes) if probes is not None else domain.lift(domain.boundary_probes(), seed)
    return _map(lambda q: boundary_trace(weighted, domain, q).norm(), pts, workers)


def _p_tail(f: FieldSample, split: HodgeSplit, basis: BergmanBasis, domain: AxialDomain) -> Optional[float]:
    """Relative change of Pf when the top two degrees are dropped; zero when Pf is a low-degree polynomial."""
    if basis.degree < 2:
        return None
    lower = project_P(f, build_basis(domain, basis.degree - 2), domain)
    diff = linear_combination([split.p_function(), lower.p_function()], [1.0, -1.0])
    return l2_norm(diff, domain) / max(l2_norm(f, domain), 1e-300)


def q_image_trace_check(f: FieldLike, basis: BergmanBasis, domain: AxialDomain,
                        probes: Optional[Sequence[Paravector]] = None, seed: int = 0,
                        workers: int = 1) -> ResidualReport:
    """Trace of T(|x_vec|^(m-1) Qf) per boundary probe; the Pf trace is reported as `control`."""
    started = time.perf_counter()
    f = as_field(f)
    pts = list(probes) if probes is not None else domain.lift(domain.boundary_probes(), seed)
    split = project_P(f, basis, domain)
    q_traces = im_q_trace(split.q_part, domain, pts, workers=workers)
    p_traces = im_q_trace(split.p_part, domain, pts, workers=workers)
    report = _report("im-q-trace", f.name, domain, pts, [(r, None, {}) for r in q_traces], started)
    report.extra["control"] = max(p_traces)
    report.extra["degree"] = basis.degree
    report.extra["p_tail"] = _p_tail(f, split, basis, domain)
    return report
