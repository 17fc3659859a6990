"""
Integral operators on axially symmetric domains and the residual checks built on them.

    T_I f(q)  = -(1/2 pi) int_{Omega_I} S^{-1}(q, x) f(x) dV_I(x)
    T f(q)    = (2/omega_{m-1}) int_{S+} T_I f(q) dS(I)
    F f(q)    = (1/(pi omega_{m-1})) int_{S+} int_{d Omega_I} S^{-1}(q, x) n(x) f(x) dsigma_I dS(I)
    S f(q)    = the principal value of F f at a boundary point

On a slice the outward normal is n = n_u + I n_v; the mirrored half of the
slice uses the mirrored nodes and normals.
"""

from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .clifford import Multivector, Paravector, UnitSliceVector, algebra, slice_coordinates
from .errors import ArgumentError, HypothesisViolationError, SingularityError
from .geometry import AxialDomain, BoundaryQuadrature, SliceQuadrature, sphere_area
from .kernels import FD_STEP, SliceKernel, shifted, split_multi_index, validate_multi_index
from .slicefn import (
    GConfig,
    SliceFunction,
    alpha_beta_coefficients,
    g_image,
    make_named,
    make_polynomial,
    representation_combine,
)

logger = logging.getLogger(__name__)

T_FACTOR = -1.0 / (2.0 * math.pi)
COINCIDENT_TOL = 1e-8
ON_BOUNDARY_TOL = 1e-10
RICHARDSON_LEVELS = 6
RICHARDSON_FLOOR = 1e-9
CONVERGENCE_FLOOR = 1e-11

_STENCIL = ((-2, 1.0), (-1, -8.0), (1, 8.0), (2, -1.0))


# --------------------------------------------------------------------------
# inputs and results

@dataclass(frozen=True, eq=False)
class FieldSample:
    """Operator input: an analytic slice function or values tabulated on the domain grid.

    Tabulated values have shape (sphere nodes, 2 * slice nodes, 2**m): one row
    per sphere node I, over the base slice nodes followed by their mirrors.
    """

    kind: str
    dim: int
    function: Optional[SliceFunction] = None
    values: Optional[np.ndarray] = None
    name: str = "field"

    def __post_init__(self) -> None:
        if self.kind not in ("slice", "tabulated"):
            raise ArgumentError(f"field kind must be 'slice' or 'tabulated', got {self.kind!r}")
        if self.kind == "slice" and self.function is None:
            raise ArgumentError("a slice field needs its slice function")
        if self.kind == "tabulated" and self.values is None:
            raise ArgumentError("a tabulated field needs values on every domain node")

    @classmethod
    def from_function(cls, f: SliceFunction) -> "FieldSample":
        return cls("slice", f.dim, function=f, name=f.name)

    @classmethod
    def tabulated(cls, domain: AxialDomain, values: np.ndarray, name: str = "tabulated") -> "FieldSample":
        values = np.asarray(values, dtype=float)
        expected = (domain.sphere_quad.size, 2 * domain.slice_quad.size, 1 << domain.dim)
        if values.shape != expected:
            raise ArgumentError(f"tabulated values need shape {expected}, got {values.shape}")
        return cls("tabulated", domain.dim, values=values, name=name)

    @classmethod
    def from_stem_values(cls, domain: AxialDomain, F1: np.ndarray, F2: np.ndarray,
                         name: str = "tabulated") -> "FieldSample":
        """Tabulate F1 + I F2 from stem values at the base (upper) slice nodes."""
        alg = algebra(domain.dim)
        F1 = np.asarray(F1, dtype=float)
        F2 = np.asarray(F2, dtype=float)
        rows = []
        for unit in domain.sphere_quad.coefficients():
            IF2 = alg.product(unit, F2)
            rows.append(np.concatenate([F1 + IF2, F1 - IF2]))
        return cls.tabulated(domain, np.stack(rows), name)

    @classmethod
    def noise(cls, domain: AxialDomain, seed: int = 0, name: str = "noise") -> "FieldSample":
        rng = np.random.default_rng(seed)
        shape = (domain.sphere_quad.size, 2 * domain.slice_quad.size, 1 << domain.dim)
        return cls.tabulated(domain, rng.standard_normal(shape), name)

    @property
    def is_slice(self) -> bool:
        return self.kind == "slice"

    def require_slice(self, operation: str) -> SliceFunction:
        if not self.is_slice:
            raise ArgumentError(f"{operation} needs a field evaluable off the grid (kind 'slice'), got {self.kind!r}")
        return self.function

    def grid(self, domain: AxialDomain) -> np.ndarray:
        if not self.is_slice:
            return self.values
        nodes = domain.slice_quad.full_nodes()
        return np.stack([
            self.function.on_slice(nodes[:, 0], nodes[:, 1], unit)
            for unit in domain.sphere_quad.coefficients()
        ])


FieldLike = Union[FieldSample, SliceFunction]


def as_field(f: FieldLike) -> FieldSample:
    if isinstance(f, FieldSample):
        return f
    if isinstance(f, SliceFunction):
        return FieldSample.from_function(f)
    raise ArgumentError(f"expected a FieldSample or SliceFunction, got {type(f).__name__}")


class OperatorValue(Multivector):
    """Operator result carrying evaluation warnings."""

    __slots__ = ("warnings",)

    def __init__(self, dim: int, coeffs, warnings: Iterable[str] = ()) -> None:
        super().__init__(dim, coeffs)
        self.warnings = tuple(warnings)


@dataclass
class ResidualReport:
    identity: str
    probes: List[Paravector]
    residuals: List[Optional[float]]
    resolution: int
    runtime_ms: float = 0.0
    function: str = ""
    flagged: List[str] = field(default_factory=list)
    extra: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.probes:
            raise ArgumentError(f"{self.identity}: a residual report needs at least one probe")

    @property
    def max_residual(self) -> float:
        done = [r for r in self.residuals if r is not None]
        return max(done) if done else 0.0

    @property
    def evaluated(self) -> int:
        return sum(1 for r in self.residuals if r is not None)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "identity": self.identity,
            "function": self.function,
            "resolution": self.resolution,
            "probes": [p.array.tolist() for p in self.probes],
            "residuals": self.residuals,
            "max_residual": self.max_residual,
            "runtime_ms": self.runtime_ms,
            "flagged": list(self.flagged),
            "extra": dict(self.extra),
        }


def _map(fn: Callable, items: Sequence, workers: int) -> List:
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _report(identity: str, function: str, domain: AxialDomain, probes: Sequence[Paravector],
            outcomes: Sequence[Tuple[Optional[float], Optional[str], Dict[str, float]]], started: float) -> ResidualReport:
    report = ResidualReport(
        identity=identity,
        probes=list(probes),
        residuals=[o[0] for o in outcomes],
        resolution=domain.resolution,
        runtime_ms=(time.perf_counter() - started) * 1000.0,
        function=function,
    )
    for i, (_, flag, extra) in enumerate(outcomes):
        if flag:
            report.flagged.append(f"probe {i}: {flag}")
            logger.warning("%s[%s] probe %d flagged: %s", identity, function, i, flag)
        for key, value in extra.items():
            report.extra[key] = max(report.extra.get(key, 0.0), value)
    return report


def _need_probes(probes: Sequence[Paravector], identity: str) -> None:
    if len(probes) == 0:
        raise ArgumentError(f"{identity}: empty probe set")


# --------------------------------------------------------------------------
# slice integration

def _integrate_terms(alg, terms, I: np.ndarray, w: np.ndarray, F1: np.ndarray, F2: np.ndarray) -> np.ndarray:
    """sum_k w_k sum_terms L E(c_k) (F1_k + I F2_k), with E(a + ib) = a + I b."""
    total = np.zeros(alg.size)
    for left, c in terms:
        wc = w * c
        a, b = wc.real, wc.imag
        inner = a @ F1 - b @ F2 + alg.product(I, b @ F1 + a @ F2)
        total += alg.product(left, inner)
    return total


class _VolumeSampler:
    """Full-slice nodes refined around one probe, with the field on them."""

    def __init__(self, f: FieldSample, domain: AxialDomain, u: float, v: float,
                 quad: Optional[SliceQuadrature] = None) -> None:
        self.field = f
        if f.is_slice:
            quad = quad or domain.singular_rule(u, v)
            nodes = quad.full_nodes()
            self.F1, self.F2 = f.function.stem.values(nodes[:, 0], nodes[:, 1])
        else:
            quad = domain.slice_quad
            nodes = quad.full_nodes()
            self.F1 = None
            self.F2 = np.zeros((nodes.shape[0], 1 << domain.dim))
        self.quad = quad
        self.z = nodes[:, 0] + 1j * nodes[:, 1]
        self.w = quad.full_weights()

    def pair(self, s: int) -> Tuple[np.ndarray, np.ndarray]:
        if self.field.is_slice:
            return self.F1, self.F2
        return self.field.values[s], self.F2


def _probe_coordinates(q: Paravector, what: str) -> Tuple[float, float, UnitSliceVector]:
    u, v, Iq = slice_coordinates(q)
    if Iq is None:
        raise SingularityError(f"{what} is defined on R^(m+1)_* only; q lies on the real axis",
                               point=q, sphere=(u, 0.0))
    return u, v, Iq


def _slice_transforms(f: FieldSample, domain: AxialDomain, q: Paravector,
                      sampler: Optional[_VolumeSampler] = None) -> np.ndarray:
    """T_I f(q) for every sphere node I, shape (K, 2**m)."""
    u, v, _ = _probe_coordinates(q, "the Teodorescu transform")
    alg = algebra(domain.dim)
    sampler = sampler or _VolumeSampler(f, domain, u, v)
    units = domain.sphere_quad.coefficients()
    out = np.empty((len(units), alg.size))
    for s, I in enumerate(units):
        kernel = SliceKernel(q, I)
        if not f.is_slice:
            kernel.check(sampler.z)
        F1, F2 = sampler.pair(s)
        out[s] = T_FACTOR * _integrate_terms(alg, kernel.terms(sampler.z), I, sampler.w, F1, F2)
    return out


def _sphere_average(domain: AxialDomain, per_node: np.ndarray, factor: float) -> np.ndarray:
    return factor * np.tensordot(domain.sphere_quad.weights, per_node, axes=(0, 0))


def _sphere_index(domain: AxialDomain, I: UnitSliceVector) -> int:
    diff = np.linalg.norm(domain.sphere_quad.nodes - I.array, axis=1)
    s = int(np.argmin(diff))
    if diff[s] > 1e-12:
        raise ArgumentError("tabulated fields are only known on the sphere nodes of their domain")
    return s


def teodorescu_slice(f: FieldLike, domain: AxialDomain, I: UnitSliceVector, q: Paravector) -> Multivector:
    f = as_field(f)
    u, v, _ = _probe_coordinates(q, "the Teodorescu transform")
    alg = algebra(domain.dim)
    sampler = _VolumeSampler(f, domain, u, v)
    Ic = I.coefficients()
    kernel = SliceKernel(q, Ic)
    if f.is_slice:
        F1, F2 = sampler.pair(0)
    else:
        kernel.check(sampler.z)
        F1, F2 = sampler.pair(_sphere_index(domain, I))
    return Multivector(domain.dim, T_FACTOR * _integrate_terms(alg, kernel.terms(sampler.z), Ic, sampler.w, F1, F2))


def teodorescu(f: FieldLike, domain: AxialDomain, q: Paravector) -> Multivector:
    """Sphere average of T_I f(q); for slice f every T_I agrees, so the slice through q is used."""
    f = as_field(f)
    if f.is_slice:
        _, _, Iq = _probe_coordinates(q, "the Teodorescu transform")
        return teodorescu_slice(f, domain, Iq, q)
    per_node = _slice_transforms(f, domain, q)
    return Multivector(domain.dim, _sphere_average(domain, per_node, 2.0 / sphere_area(domain.dim)))


def _slice_derivatives(f: FieldSample, domain: AxialDomain, q: Paravector,
                       units: Optional[np.ndarray] = None) -> np.ndarray:
    """d/dq_0 T_I f(q) for every sphere node I, from the half-residue formula.

    2 pi d_q0 T_I f(q) = -p.v. int d_q0 S^{-1} f dV_I + pi (alpha f(q_I) + beta f(q_-I)).
    The principal value comes from the polar patch centred at q_I (and its mirror).
    """
    fn = f.require_slice("the derivative of the slice transform")
    u, v, _ = _probe_coordinates(q, "the derivative of the slice transform")
    if not bool(domain.contains(u, v)):
        raise ArgumentError("the half-residue formula needs q inside the domain")
    alg = algebra(domain.dim)
    sampler = _VolumeSampler(f, domain, u, v)
    f1, f2 = fn.stem.values(np.array([u, u]), np.array([v, -v]))
    out = []
    for I in (domain.sphere_quad.coefficients() if units is None else units):
        kernel = SliceKernel(q, I)
        pv = _integrate_terms(alg, kernel.terms(sampler.z, derivative=0), I, sampler.w, sampler.F1, sampler.F2)
        f_plus = f1[0] + alg.product(I, f2[0])
        f_minus = f1[1] + alg.product(I, f2[1])
        residue = alg.product(kernel.alpha, f_plus) + alg.product(kernel.beta, f_minus)
        out.append((-pv + math.pi * residue) / (2.0 * math.pi))
    return np.array(out)


def teodorescu_slice_derivative(f: FieldLike, domain: AxialDomain, I: UnitSliceVector, q: Paravector) -> Multivector:
    f = as_field(f)
    f.require_slice("the derivative of the slice transform")
    return Multivector(domain.dim, _slice_derivatives(f, domain, q, I.coefficients()[None, :])[0])


# --------------------------------------------------------------------------
# boundary operators

class _BoundarySampler:
    def __init__(self, fn: SliceFunction, bq: BoundaryQuadrature) -> None:
        nodes = bq.full_nodes()
        normals = bq.full_normals()
        self.z = nodes[:, 0] + 1j * nodes[:, 1]
        self.nu = normals[:, 0] + 1j * normals[:, 1]
        self.w = bq.full_weights()
        self.tangents = bq.full_tangents()
        self.u, self.v = nodes[:, 0], nodes[:, 1]
        self.fn = fn
        self.F1, self.F2 = fn.stem.values(self.u, self.v)


def _boundary_factor(domain: AxialDomain) -> float:
    return 1.0 / (math.pi * sphere_area(domain.dim))


def _boundary_value(fn: SliceFunction, domain: AxialDomain, q: Paravector, bq: BoundaryQuadrature,
                    derivative: Optional[int] = None) -> np.ndarray:
    alg = algebra(domain.dim)
    sampler = _BoundarySampler(fn, bq)
    per_node = []
    for I in domain.sphere_quad.coefficients():
        kernel = SliceKernel(q, I)
        kernel.check(sampler.z)
        terms = [(left, c * sampler.nu) for left, c in kernel.terms(sampler.z, derivative)]
        per_node.append(_integrate_terms(alg, terms, I, sampler.w, sampler.F1, sampler.F2))
    return _sphere_average(domain, np.array(per_node), _boundary_factor(domain))


def _boundary_distance(domain: AxialDomain, u: float, v: float) -> float:
    return domain.distance_to_boundary(u, v)


def cauchy_boundary(f: FieldLike, domain: AxialDomain, q: Paravector) -> OperatorValue:
    fn = as_field(f).require_slice("the boundary Cauchy operator")
    u, v, _ = _probe_coordinates(q, "the boundary Cauchy operator")
    dist = _boundary_distance(domain, u, v)
    if dist <= ON_BOUNDARY_TOL * max(1.0, math.hypot(u, v)):
        raise ArgumentError("q lies on the boundary; use plemelj_singular for boundary points")
    warnings: List[str] = []
    if dist < 2.0 * domain.boundary_quad.spacing:
        warnings.append(f"near-singular: q is {dist:.3g} from the boundary "
                        f"(node spacing {domain.boundary_quad.spacing:.3g}); boundary rule upsampled")
        logger.debug(warnings[-1])
    bq = domain.boundary_for_distance(dist)
    return OperatorValue(domain.dim, _boundary_value(fn, domain, q, bq), warnings)


def plemelj_singular(f: FieldLike, domain: AxialDomain, q_boundary: Paravector) -> Multivector:
    """Principal value S f(q) at a boundary point, by singularity subtraction.

    For each pole the constant f(pole) is split off: its principal value is the
    half residue pi, and the remainder E(c n)(f - f(pole)) is smooth along the
    contour. A node on the pole gets the limit -I d_s f.
    """
    fn = as_field(f).require_slice("the Plemelj operator")
    u, v, _ = _probe_coordinates(q_boundary, "the Plemelj operator")
    if _boundary_distance(domain, u, v) > ON_BOUNDARY_TOL * max(1.0, math.hypot(u, v)):
        raise ArgumentError(f"q = ({u:g}, {v:g}) is not on the boundary of {domain.profile.describe()}")
    alg = algebra(domain.dim)
    bs = _BoundarySampler(fn, domain.boundary_quad)
    f1q, f2q = fn.stem.values(np.array([u, u]), np.array([v, -v]))
    d1u, d1v, d2u, d2v = fn.stem.partials(bs.u, bs.v)
    zq = complex(u, v)
    per_node = []
    for I in domain.sphere_quad.coefficients():
        kernel = SliceKernel(q_boundary, I)
        total = np.zeros(alg.size)
        for k, ((left, c), pole) in enumerate(zip(kernel.terms(bs.z), (zq, zq.conjugate()))):
            near = np.abs(bs.z - pole) < COINCIDENT_TOL * max(1.0, abs(pole))
            with np.errstate(invalid="ignore"):
                cn = np.where(near, 0.0, c * bs.nu)
            pf1, pf2 = f1q[k], f2q[k]
            inner = _integrate_terms(alg, [(_one(alg), cn)], I, bs.w, bs.F1 - pf1, bs.F2 - pf2)
            inner += math.pi * (pf1 + alg.product(I, pf2))
            for j in np.flatnonzero(near):
                tu, tv = bs.tangents[j]
                ds = (tu * d1u[j] + tv * d1v[j]) + alg.product(I, tu * d2u[j] + tv * d2v[j])
                inner += bs.w[j] * -alg.product(I, ds)
            total += alg.product(left, inner)
        per_node.append(total)
    return Multivector(domain.dim, _sphere_average(domain, np.array(per_node), _boundary_factor(domain)))


def _one(alg) -> np.ndarray:
    e = np.zeros(alg.size)
    e[0] = 1.0
    return e


def derivative_cauchy(f: FieldLike, domain: AxialDomain, q: Paravector, l: Sequence[int]) -> Multivector:
    """The l-th derivative of f at q from its boundary values (|l| <= 2)."""
    fn = as_field(f).require_slice("the derivative Cauchy formula")
    index = validate_multi_index(l, domain.dim)
    if sum(index) == 0:
        return cauchy_boundary(fn, domain, q)
    first, second = split_multi_index(index)

    def first_order(p: Paravector) -> np.ndarray:
        u, v, _ = _probe_coordinates(p, "the derivative Cauchy formula")
        bq = domain.boundary_for_distance(_boundary_distance(domain, u, v))
        return _boundary_value(fn, domain, p, bq, derivative=first)

    if second is None:
        return Multivector(domain.dim, first_order(q))
    h = FD_STEP * max(1.0, q.norm())
    value = (first_order(shifted(q, second, h)) - first_order(shifted(q, second, -h))) / (2.0 * h)
    return Multivector(domain.dim, value)


# --------------------------------------------------------------------------
# volume integrals

def _volume_integral(domain: AxialDomain, per_node: np.ndarray) -> float:
    """sum over sphere nodes and full-slice nodes of |v|^(m-1)-weighted values, shape (K, 2N)."""
    nodes = domain.slice_quad.full_nodes()
    w = domain.slice_quad.full_weights() * np.abs(nodes[:, 1]) ** (domain.dim - 1)
    return float(domain.sphere_quad.weights @ (per_node @ w))


def lp_norm(f: FieldLike, domain: AxialDomain, p: float) -> float:
    if p < 1.0:
        raise ArgumentError(f"L^p norms need p >= 1, got {p}")
    grid = as_field(f).grid(domain)
    return _volume_integral(domain, np.linalg.norm(grid, axis=-1) ** p) ** (1.0 / p)


def representation_defect(f: FieldLike, domain: AxialDomain, p: float = 2.0) -> float:
    """L^p norm of x -> f(x) - alpha f(x_J) - beta f(x_-J) for J the first sphere node.

    Zero for slice fields; the slice L^p space is the kernel of this defect.
    """
    grid = as_field(f).grid(domain)
    alg = algebra(domain.dim)
    units = domain.sphere_quad.coefficients()
    n = domain.slice_quad.size
    mirror = np.concatenate([np.arange(n, 2 * n), np.arange(n)])
    ref, ref_mirror = grid[0], grid[0][mirror]
    defects = []
    for s, I in enumerate(units):
        alpha, beta = alpha_beta_coefficients(I, units[0], domain.dim)
        d = grid[s] - alg.product(alpha, ref) - alg.product(beta, ref_mirror)
        defects.append(np.linalg.norm(d, axis=-1) ** p)
    return _volume_integral(domain, np.array(defects)) ** (1.0 / p)


def random_slice_polynomials(m: int, count: int, seed: int, degree: int = 5,
                             scale: float = 1.0) -> List[SliceFunction]:
    """The constant 1 followed by seeded random polynomials sum_n q^n a_n / scale^n."""
    rng = np.random.default_rng(seed)
    out = [make_named("one", m)]
    for t in range(1, count):
        coeffs = [Multivector(m, rng.standard_normal(1 << m) / scale ** n) for n in range(degree + 1)]
        out.append(make_polynomial(coeffs, m, name=f"random[{t}]"))
    return out


def boundedness_ratios(domain: AxialDomain, p: float, trials: int, seed: int = 0,
                       eval_resolution: int = 16, workers: int = 1) -> List[float]:
    """||T f||_p / ||f||_p over seeded random slice polynomials.

    T f is a slice function and T_I f = T f for slice inputs, so T f is
    recovered on a fixed evaluation grid from T_J at u + J v and u - J v.
    """
    m = domain.dim
    if p <= max(m, 2):
        raise HypothesisViolationError(f"the L^p bound of T needs p > max(m, 2) = {max(m, 2)}, got p = {p:g}")
    if trials < 1:
        raise ArgumentError(f"boundedness probe needs at least one trial, got {trials}")
    alg = algebra(m)
    cu, cv = domain.center
    functions = random_slice_polynomials(m, trials, seed, scale=1.0 + math.hypot(cu, cv))
    nodes, weights = domain.shape.base_rule(eval_resolution)
    J = domain.sphere_units()[0]
    Jc = J.coefficients()
    rules = _map(lambda uv: domain.singular_rule(float(uv[0]), float(uv[1])), list(nodes), workers)
    units = domain.sphere_quad.coefficients()
    vol_w = np.concatenate([weights, weights]) * np.concatenate([nodes[:, 1], nodes[:, 1]]) ** (m - 1)

    def ratio(fn: SliceFunction) -> float:
        field = FieldSample.from_function(fn)
        T1, T2 = [], []
        for (u, v), quad in zip(nodes, rules):
            sampler = _VolumeSampler(field, domain, u, v, quad)
            vals = []
            for unit in (J, -J):
                q = Paravector.from_slice(u, v, unit)
                kernel = SliceKernel(q, Jc)
                vals.append(T_FACTOR * _integrate_terms(alg, kernel.terms(sampler.z), Jc, sampler.w,
                                                         sampler.F1, sampler.F2))
            T1.append(0.5 * (vals[0] + vals[1]))
            T2.append(-0.5 * alg.product(Jc, vals[0] - vals[1]))
        T1, T2 = np.array(T1), np.array(T2)
        total = 0.0
        for ws, I in zip(domain.sphere_quad.weights, units):
            IT2 = alg.product(I, T2)
            mags = np.concatenate([np.linalg.norm(T1 + IT2, axis=1), np.linalg.norm(T1 - IT2, axis=1)])
            total += ws * float(vol_w @ mags ** p)
        return total ** (1.0 / p) / lp_norm(field, domain, p)

    return _map(ratio, functions, workers)


def boundedness_probe(domain: AxialDomain, p: float, trials: int, seed: int = 0,
                      eval_resolution: int = 16, workers: int = 1) -> float:
    return max(boundedness_ratios(domain, p, trials, seed, eval_resolution, workers))


# --------------------------------------------------------------------------
# residual checks

def _stencil_points(u: float, v: float, h: float, Iq: UnitSliceVector) -> List[Paravector]:
    pts = [Paravector.from_slice(u + k * h, v, Iq) for k, _ in _STENCIL]
    pts += [Paravector.from_slice(u, v + k * h, Iq) for k, _ in _STENCIL]
    return pts


def _stencil_G(values: Sequence[np.ndarray], h: float, Iq: UnitSliceVector, m: int) -> Tuple[np.ndarray, np.ndarray]:
    """(G, d_u) from the eight stencil values; G = d_u + I_q d_v."""
    alg = algebra(m)
    du = sum(c * values[i] for i, (_, c) in enumerate(_STENCIL)) / (12.0 * h)
    dv = sum(c * values[4 + i] for i, (_, c) in enumerate(_STENCIL)) / (12.0 * h)
    return du + alg.product(Iq.coefficients(), dv), du


def cauchy_reproduction_residual(f: FieldLike, domain: AxialDomain, probes: Sequence[Paravector],
                                 workers: int = 1) -> ResidualReport:
    """|F f - f| at interior probes; zero for slice monogenic f."""
    _need_probes(probes, "cauchy")
    started = time.perf_counter()
    fn = as_field(f).require_slice("cauchy")

    def one(q):
        return (cauchy_boundary(fn, domain, q) - fn(q)).norm(), None, {}

    return _report("cauchy", fn.name, domain, probes, _map(one, probes, workers), started)


def borel_pompeiu_residual(f: FieldLike, domain: AxialDomain, probes: Sequence[Paravector],
                           cfg: Optional[GConfig] = None, workers: int = 1) -> ResidualReport:
    """|F f + T(G f) - f| at interior probes."""
    _need_probes(probes, "borel-pompeiu")
    started = time.perf_counter()
    fn = as_field(f).require_slice("borel-pompeiu")
    gf = FieldSample.from_function(g_image(fn, cfg))

    def one(q):
        value = cauchy_boundary(fn, domain, q) + teodorescu(gf, domain, q) - fn(q)
        return value.norm(), None, {}

    return _report("borel-pompeiu", fn.name, domain, probes, _map(one, probes, workers), started)


def right_inverse_residual(f: FieldLike, domain: AxialDomain, probes: Sequence[Paravector],
                           cfg: Optional[GConfig] = None, workers: int = 1) -> ResidualReport:
    """|G T f - f| at interior probes, plus the per-slice form and the d/dq_0 cross-check.

    G of T f is taken by fourth-order differences with step spacing/4 (or
    cfg.fd_step when cfg selects finite differences). Extra entries:
    `slice_form_max` = max_I |G T_I f - alpha f(q_I) - beta f(q_-I)| and
    `derivative_residual` = max_I |d_u T_I f - half-residue formula|.
    """
    _need_probes(probes, "right-inverse")
    started = time.perf_counter()
    field = as_field(f)
    fn = field.require_slice("right-inverse")
    m = domain.dim
    alg = algebra(m)
    h = domain.spacing / 4.0
    if cfg is not None and cfg.mode == "finite-difference":
        h = cfg.fd_step
    factor = 2.0 / sphere_area(m)
    units = domain.sphere_quad.coefficients()

    def one(q):
        u, v, Iq = _probe_coordinates(q, "right-inverse")
        if not bool(domain.contains(u, v)) or domain.distance_to_boundary(u, v) <= 4.0 * h:
            return None, "too close to the boundary for the difference stencil", {}
        values = [_slice_transforms(field, domain, p) for p in _stencil_points(u, v, h, Iq)]
        G_slices, du_slices = _stencil_G(values, h, Iq, m)
        fq = fn(q).coeffs
        residual = float(np.linalg.norm(_sphere_average(domain, G_slices, factor) - fq))
        f1, f2 = fn.stem.values(np.array([u, u]), np.array([v, -v]))
        slice_form = 0.0
        for s, I in enumerate(units):
            alpha, beta = alpha_beta_coefficients(Iq.coefficients(), I, m)
            expected = alg.product(alpha, f1[0] + alg.product(I, f2[0])) + \
                alg.product(beta, f1[1] + alg.product(I, f2[1]))
            slice_form = max(slice_form, float(np.linalg.norm(G_slices[s] - expected)))
        derivative = float(np.max(np.linalg.norm(_slice_derivatives(field, domain, q) - du_slices, axis=1)))
        return residual, None, {"slice_form_max": slice_form, "derivative_residual": derivative}

    return _report("right-inverse", fn.name, domain, probes, _map(one, probes, workers), started)


def exterior_monogenicity_check(f: FieldLike, domain: AxialDomain, exterior_probes: Sequence[Paravector],
                                workers: int = 1) -> ResidualReport:
    """|G T f| outside the closure, with difference step 1% of the distance to the domain."""
    _need_probes(exterior_probes, "exterior-monogenicity")
    started = time.perf_counter()
    field = as_field(f)
    factor = 2.0 / sphere_area(domain.dim)

    def one(q):
        u, v, Iq = slice_coordinates(q)
        if Iq is None:
            return None, "on the real axis (outside R^(m+1)_*)", {}
        if bool(domain.contains(u, v)):
            return None, "inside the domain", {}
        d = domain.distance_to_boundary(u, v)
        h = 0.01 * d
        if d == 0.0 or 2.0 * h >= v:
            return None, "stencil does not fit", {}
        values = [_sphere_average(domain, _slice_transforms(field, domain, p), factor)
                  for p in _stencil_points(u, v, h, Iq)]
        G, _ = _stencil_G(values, h, Iq, domain.dim)
        return float(np.linalg.norm(G)), None, {}

    return _report("exterior-monogenicity", field.name, domain, exterior_probes,
                   _map(one, exterior_probes, workers), started)


def _random_interior_points(domain: AxialDomain, count: int, rng: np.random.Generator) -> List[Tuple[float, float]]:
    box = domain.boundary(64).nodes
    lo, hi = box.min(axis=0), box.max(axis=0)
    margin = 0.2 * domain.inradius
    out: List[Tuple[float, float]] = []
    while len(out) < count:
        u, v = rng.uniform(lo[0], hi[0]), rng.uniform(lo[1], hi[1])
        if bool(domain.contains(u, v)) and domain.distance_to_boundary(u, v) >= margin:
            out.append((float(u), float(v)))
    return out


def teodorescu_sliceness_residual(f: FieldLike, domain: AxialDomain, count: int = 32, seed: int = 0,
                                  workers: int = 1) -> ResidualReport:
    """|T f(q) - alpha T f(q_I) - beta T f(q_-I)| at seeded random (q, I) pairs."""
    if count < 1:
        raise ArgumentError("sliceness check needs at least one pair")
    started = time.perf_counter()
    field = as_field(f)
    rng = np.random.default_rng(seed)
    points = _random_interior_points(domain, count, rng)
    pairs = []
    for u, v in points:
        Iq = UnitSliceVector.random(domain.dim, rng)
        I = UnitSliceVector.random(domain.dim, rng)
        pairs.append((Paravector.from_slice(u, v, Iq), I))

    def one(pair):
        q, I = pair
        u, v, Iq = slice_coordinates(q)
        tq = teodorescu(field, domain, q)
        tI = teodorescu(field, domain, Paravector.from_slice(u, v, I))
        tmI = teodorescu(field, domain, Paravector.from_slice(u, v, -I))
        return (tq - representation_combine(tI, tmI, I, Iq)).norm(), None, {}

    return _report("sliceness", field.name, domain, [p[0] for p in pairs], _map(one, pairs, workers), started)


def richardson(ts: Sequence[float], values: Sequence[np.ndarray]) -> Tuple[np.ndarray, bool]:
    """Extrapolate values(t) to t = 0 for t halving at every level.

    Returns the limit and whether the diagonal of the table contracts.
    """
    table = [np.asarray(values[0], dtype=float)]
    diagonal = [table[0]]
    for k in range(1, len(values)):
        row = [np.asarray(values[k], dtype=float)]
        for j in range(1, k + 1):
            row.append(row[j - 1] + (row[j - 1] - table[j - 1]) / (2.0 ** j - 1.0))
        table = row
        diagonal.append(row[-1])
    diffs = [float(np.linalg.norm(diagonal[i] - diagonal[i - 1])) for i in range(1, len(diagonal))]
    converged = not diffs or diffs[-1] <= max(RICHARDSON_FLOOR, 0.5 * diffs[0])
    return diagonal[-1], converged


def one_sided_limits(f: FieldLike, domain: AxialDomain, q: Paravector) -> Tuple[np.ndarray, np.ndarray, bool]:
    """Interior and exterior limits of F f at a boundary point, Richardson-extrapolated."""
    fn = as_field(f).require_slice("one-sided limits")
    u, v, Iq = _probe_coordinates(q, "one-sided limits")
    _, _, nu, nv = domain.nearest_boundary_point(u, v)
    t0 = 0.1 * domain.inradius
    ts = [t0 / 2 ** k for k in range(RICHARDSON_LEVELS)]
    inner = [cauchy_boundary(fn, domain, Paravector.from_slice(u - t * nu, v - t * nv, Iq)).coeffs for t in ts]
    outer = [cauchy_boundary(fn, domain, Paravector.from_slice(u + t * nu, v + t * nv, Iq)).coeffs for t in ts]
    lim_in, ok_in = richardson(ts, inner)
    lim_out, ok_out = richardson(ts, outer)
    return lim_in, lim_out, ok_in and ok_out


def plemelj_jump_check(f: FieldLike, domain: AxialDomain, boundary_probes: Sequence[Paravector],
                       workers: int = 1) -> ResidualReport:
    """Interior limit = f/2 + S f, exterior limit = -f/2 + S f and jump = f at boundary probes."""
    _need_probes(boundary_probes, "plemelj")
    started = time.perf_counter()
    fn = as_field(f).require_slice("plemelj")

    def one(q):
        lim_in, lim_out, converged = one_sided_limits(fn, domain, q)
        fq = fn(q).coeffs
        sf = plemelj_singular(fn, domain, q).coeffs
        r_in = float(np.linalg.norm(lim_in - (0.5 * fq + sf)))
        r_out = float(np.linalg.norm(lim_out - (-0.5 * fq + sf)))
        jump = float(np.linalg.norm(lim_in - lim_out - fq))
        flag = None if converged else "Richardson extrapolation did not converge"
        return max(r_in, r_out, jump), flag, {"interior_max": r_in, "exterior_max": r_out, "jump_max": jump}

    return _report("plemelj", fn.name, domain, boundary_probes, _map(one, boundary_probes, workers), started)


@dataclass(frozen=True)
class ExtensionVerdict:
    is_interior_extendable: bool
    is_exterior_extendable: bool
    interior_residual: float
    exterior_residual: float
    probes: Tuple[Paravector, ...] = ()
    interior_residuals: Tuple[float, ...] = ()
    exterior_residuals: Tuple[float, ...] = ()


def extension_criterion_check(g: FieldLike, domain: AxialDomain, tol: float = 5e-3,
                              probes: Optional[Sequence[Paravector]] = None, seed: int = 0,
                              workers: int = 1) -> ExtensionVerdict:
    """S g = g/2 iff g extends inside; S g = -g/2 iff it extends outside."""
    fn = as_field(g).require_slice("extension criterion")
    pts = list(probes) if probes is not None else domain.lift(domain.boundary_probes(), seed)
    _need_probes(pts, "extension")

    def one(q):
        sg = plemelj_singular(fn, domain, q)
        gq = fn(q)
        return (sg - gq * 0.5).norm(), (sg + gq * 0.5).norm()

    results = _map(one, pts, workers)
    inside = tuple(float(r[0]) for r in results)
    outside = tuple(float(r[1]) for r in results)
    r_in, r_out = max(inside), max(outside)
    return ExtensionVerdict(r_in <= tol, r_out <= tol, r_in, r_out, tuple(pts), inside, outside)


def m1_oracle_residual(domain: AxialDomain, probes: Sequence[Paravector], workers: int = 1) -> ResidualReport:
    """T 1 against the closed form for m = 1 on a disk D with mirror disk.

    For z in D (centre c, radius R): T 1 = (conj(z) - conj(c))/2 + R^2 / (2 (z - conj(c))).
    """
    if domain.dim != 1 or domain.profile.kind != "disk":
        raise ArgumentError("the plane oracle needs m = 1 and a disk profile")
    _need_probes(probes, "m1-oracle")
    started = time.perf_counter()
    p = domain.profile.params
    c = complex(p["u0"], p["v0"])
    R = p["R"]
    one_fn = make_named("one", 1)
    alg = algebra(1)

    def one(q):
        u, v, Iq = _probe_coordinates(q, "m1-oracle")
        z = complex(u, v)
        exact = (z.conjugate() - c.conjugate()) / 2.0 + R * R / (2.0 * (z - c.conjugate()))
        expected = alg.from_complex(np.array(exact), Iq.coefficients())
        return float(np.linalg.norm(teodorescu(one_fn, domain, q).coeffs - expected)), None, {}

    return _report("m1-oracle", "one", domain, probes, _map(one, probes, workers), started)


def convergence_orders(resolutions: Sequence[int], residuals: Sequence[float],
                       floor: float = CONVERGENCE_FLOOR) -> List[Optional[float]]:
    """log(r_i / r_{i+1}) / log(n_{i+1} / n_i); None once the finer residual is below the floor."""
    orders: List[Optional[float]] = []
    for i in range(len(resolutions) - 1):
        r0, r1 = residuals[i], residuals[i + 1]
        if r1 < floor:
            orders.append(None)
        elif r0 <= 0.0:
            orders.append(0.0)
        else:
            orders.append(math.log(r0 / r1) / math.log(resolutions[i + 1] / resolutions[i]))
    return orders
