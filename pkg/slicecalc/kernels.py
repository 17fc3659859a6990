"""
Slice Cauchy kernels.

    S^{-1}(q, x) = -(q^2 - 2 Re[x] q + |x|^2)^{-1} (q - conj(x))
    K(q, x)      = 2 S^{-1}(q, x) / (omega_{m-1} |x_vec|^{m-1})

On a slice C_I the kernel splits as

    S^{-1}(q, x) = alpha (x - q_I)^{-1} + beta (x - q_{-I})^{-1},
    alpha = (1 - I_q I)/2,  beta = (1 + I_q I)/2,

where q_{+-I} = q_0 +- I |q_vec|. `SliceKernel` keeps the two inverses as
complex numbers (C_I is identified with C through I <-> i) and hands out
(left coefficient, complex array) terms; every operator integrates those
terms against a field with plain dot products.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .clifford import Multivector, Paravector, UnitSliceVector, algebra, paravector_inverse, slice_coordinates
from .errors import ArgumentError, SingularityError, UnsupportedOrderError
from .geometry import sphere_area
from .slicefn import SliceFunction, _complex_stem, alpha_beta_coefficients

logger = logging.getLogger(__name__)

SINGULAR_TOL = 1e-13
FD_STEP = 1e-5

Term = Tuple[np.ndarray, np.ndarray]


@dataclass(frozen=True)
class AlphaBeta:
    alpha: Multivector
    beta: Multivector


@dataclass(frozen=True)
class KernelValue:
    value: Optional[Multivector]
    q_distance_I: float
    q_distance_mI: float

    @property
    def singular(self) -> bool:
        return self.value is None


def alpha_beta(Iq: UnitSliceVector, I: UnitSliceVector) -> AlphaBeta:
    if Iq.dim != I.dim:
        raise ArgumentError(f"slice units from R^{Iq.dim} and R^{I.dim}")
    a, b = alpha_beta_coefficients(Iq.coefficients(), I.coefficients(), I.dim)
    return AlphaBeta(Multivector(I.dim, a), Multivector(I.dim, b))


def _check_pair(q: Paravector, x: Paravector) -> None:
    if q.dim != x.dim:
        raise ArgumentError(f"q in R^{q.dim + 1} and x in R^{x.dim + 1}")


def _sphere_of(x: Paravector) -> Tuple[float, float]:
    return x.scalar, x.vector_norm


def _denominator(q: Paravector, x: Paravector) -> Paravector:
    q_sq_scalar = q.scalar ** 2 - q.vector_norm ** 2
    x_sq = x.norm() ** 2
    scalar = q_sq_scalar - 2.0 * x.scalar * q.scalar + x_sq
    vector = tuple((2.0 * q.scalar - 2.0 * x.scalar) * c for c in q.vector)
    return Paravector(q.dim, scalar, vector)


def cauchy_kernel(q: Paravector, x: Paravector) -> Multivector:
    _check_pair(q, x)
    A = _denominator(q, x)
    scale = 1.0 + q.norm() ** 2 + x.norm() ** 2
    if A.norm() < SINGULAR_TOL * scale:
        raise SingularityError(
            f"S^-1(q, x) is singular: q lies on the sphere [x] (Re = {x.scalar:g}, radius {x.vector_norm:g})",
            point=q, sphere=_sphere_of(x),
        )
    q_minus_xbar = q - x.conjugate()
    return -(paravector_inverse(A) * q_minus_xbar)


def kernel_value(q: Paravector, x: Paravector) -> KernelValue:
    _check_pair(q, x)
    u, v, Ix = slice_coordinates(x)
    q0, zeta, _ = slice_coordinates(q)
    d_plus = math.hypot(u - q0, v - zeta)
    d_minus = math.hypot(u - q0, v + zeta)
    try:
        value: Optional[Multivector] = cauchy_kernel(q, x)
    except SingularityError:
        value = None
    return KernelValue(value, d_plus, d_minus)


class SliceKernel:
    """S^{-1}(q, .) and its q-derivatives on the slice C_I, as complex terms."""

    def __init__(self, q: Paravector, I: np.ndarray) -> None:
        self.q = q
        self.m = q.dim
        self.alg = algebra(self.m)
        self.I = np.asarray(I, dtype=float)
        q0, zeta, Iq = slice_coordinates(q)
        self.q0, self.zeta = q0, zeta
        # a real q has no I_q; any unit gives the same kernel there, take I itself
        self.Iq = Iq.coefficients() if Iq is not None else self.I
        self.alpha, self.beta = alpha_beta_coefficients(self.Iq, self.I, self.m)
        self.zq = complex(q0, zeta)

    def distances(self, z: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        return np.abs(z - self.zq), np.abs(z - np.conj(self.zq))

    def check(self, z: np.ndarray) -> None:
        d1, d2 = self.distances(z)
        scale = 1.0 + abs(self.zq) + np.abs(z)
        hit = (d1 < SINGULAR_TOL * scale) | (d2 < SINGULAR_TOL * scale)
        if np.any(hit):
            raise SingularityError(
                f"slice kernel evaluated at q_I or q_-I (Re = {self.q0:g}, radius {self.zeta:g})",
                point=self.q, sphere=(self.q0, self.zeta),
            )

    def terms(self, z: np.ndarray, derivative: Optional[int] = None) -> List[Term]:
        """Terms (L, c) with S^{-1} (or its derivative) = sum L E(c), E(a + ib) = a + I b.

        `derivative` is None for the kernel, 0 for d/dq_0 and i >= 1 for d/dq_i.
        """
        z = np.asarray(z, dtype=complex)
        with np.errstate(divide="ignore", invalid="ignore"):
            c1 = 1.0 / (z - self.zq)
            c2 = 1.0 / (z - np.conj(self.zq))
        if derivative is None:
            return [(self.alpha, c1), (self.beta, c2)]
        if derivative == 0:
            return [(self.alpha, c1 * c1), (self.beta, c2 * c2)]
        if not 1 <= derivative <= self.m:
            raise ArgumentError(f"derivative index must lie in 0..{self.m}, got {derivative}")
        if self.zeta == 0.0:
            raise SingularityError(
                f"d/dq_{derivative} of the slice kernel needs q off the real axis",
                point=self.q, sphere=(self.q0, 0.0),
            )
        qi = self.q.vector[derivative - 1]
        e_i = self.alg.vector(np.eye(self.m)[derivative - 1])
        dIq = (e_i - self.Iq * (qi / self.zeta)) / self.zeta
        rot = 0.5 * self.alg.product(dIq, self.I)
        radial = qi / self.zeta
        return [
            (self.alpha * radial, 1j * c1 * c1),
            (self.beta * radial, -1j * c2 * c2),
            (-rot, c1),
            (rot, c2),
        ]

    def evaluate(self, z: np.ndarray, derivative: Optional[int] = None) -> np.ndarray:
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        self.check(z)
        out = np.zeros(z.shape + (self.alg.size,))
        for left, c in self.terms(z, derivative):
            out += self.alg.product(left, self.alg.from_complex(c, self.I))
        return out


def kernel_slice_decomposition(q: Paravector, I: UnitSliceVector,
                               x_in_plane: Tuple[float, float]) -> Tuple[AlphaBeta, Multivector]:
    if q.dim != I.dim:
        raise ArgumentError(f"q in R^{q.dim + 1} with a slice unit of R^{I.dim}")
    _, zeta, Iq = slice_coordinates(q)
    if Iq is None:
        raise SingularityError("the slice decomposition needs q off the real axis", point=q, sphere=(q.scalar, 0.0))
    kernel = SliceKernel(q, I.coefficients())
    z = complex(x_in_plane[0], x_in_plane[1])
    value = kernel.evaluate(np.array([z]))[0]
    ab = AlphaBeta(Multivector(q.dim, kernel.alpha), Multivector(q.dim, kernel.beta))
    return ab, Multivector(q.dim, value)


def _kernel_scale(x: Paravector) -> float:
    r = x.vector_norm
    if r == 0.0:
        raise SingularityError("K(q, x) is not defined for x on the real axis", point=x, sphere=(x.scalar, 0.0))
    return 2.0 / (sphere_area(x.dim) * r ** (x.dim - 1))


def global_kernel(q: Paravector, x: Paravector) -> Multivector:
    scale = _kernel_scale(x)
    return cauchy_kernel(q, x) * scale


def kernel_function(x: Paravector, scaled: bool = False) -> SliceFunction:
    """q -> S^{-1}(q, x) (or K(q, x) when `scaled`) as a slice function of q.

    With D(z) = z^2 - 2 x_0 z + |x|^2 the stem is -z / D(z) + conj(x) / D(z);
    it is slice monogenic away from the sphere [x].
    """
    if x.vector_norm == 0.0:
        raise SingularityError("the kernel function needs x off the real axis", point=x, sphere=(x.scalar, 0.0))
    m = x.dim
    x0, r2 = x.scalar, x.norm() ** 2
    scale = _kernel_scale(x) if scaled else 1.0
    one = np.zeros(1 << m)
    one[0] = scale
    xbar = x.conjugate().to_multivector().coeffs * scale

    def D(z):
        return z * z - 2.0 * x0 * z + r2

    terms = [
        (lambda z: -z / D(z), lambda z: (z * z - r2) / D(z) ** 2, False, one),
        (lambda z: 1.0 / D(z), lambda z: -(2.0 * z - 2.0 * x0) / D(z) ** 2, False, xbar),
    ]
    name = f"{'K' if scaled else 'S^-1'}(., [{x.scalar:g}, {x.vector_norm:g}])"
    return SliceFunction(_complex_stem(m, terms, name, poles=((x.scalar, x.vector_norm),)))


def validate_multi_index(l: Sequence[int], m: int) -> Tuple[int, ...]:
    index = tuple(int(k) for k in l)
    if len(index) != m + 1 or any(k < 0 for k in index):
        raise ArgumentError(f"multi-index must hold {m + 1} non-negative entries, got {tuple(l)!r}")
    if sum(index) > 2:
        raise UnsupportedOrderError(f"derivative kernels are available up to order 2, got |l| = {sum(index)}")
    return index


def _first_derivative_kernel(q: Paravector, x: Paravector, j: int) -> Multivector:
    scale = _kernel_scale(x)
    cauchy_kernel(q, x)  # raises on the singular sphere
    u, v, Ix = slice_coordinates(x)
    kernel = SliceKernel(q, Ix.coefficients())
    value = kernel.evaluate(np.array([complex(u, v)]), derivative=j)[0]
    return Multivector(q.dim, scale * value)


def shifted(q: Paravector, k: int, h: float) -> Paravector:
    """q moved by h along coordinate k (0 = scalar part)."""
    if k == 0:
        return Paravector(q.dim, q.scalar + h, q.vector)
    vec = list(q.vector)
    vec[k - 1] += h
    return Paravector(q.dim, q.scalar, tuple(vec))


def split_multi_index(index: Tuple[int, ...]) -> Tuple[int, Optional[int]]:
    """First differentiated coordinate and, for |l| = 2, the second one."""
    first = next(i for i, k in enumerate(index) if k > 0)
    rest = list(index)
    rest[first] -= 1
    second = next((i for i, k in enumerate(rest) if k > 0), None)
    return first, second


def derivative_kernel(q: Paravector, x: Paravector, l: Sequence[int]) -> Multivector:
    _check_pair(q, x)
    index = validate_multi_index(l, q.dim)
    if sum(index) == 0:
        return global_kernel(q, x)
    first, second = split_multi_index(index)
    if second is None:
        return _first_derivative_kernel(q, x, first)
    h = FD_STEP * max(1.0, q.norm())
    plus = _first_derivative_kernel(shifted(q, second, h), x, first)
    minus = _first_derivative_kernel(shifted(q, second, -h), x, first)
    return (plus - minus) / (2.0 * h)


def cauchy_kernel_array(q: np.ndarray, x: np.ndarray, m: int) -> Tuple[np.ndarray, np.ndarray]:
    """Vectorised S^{-1} on (N, m+1) coordinate arrays; singular rows come back as NaN with a True mask."""
    q = np.atleast_2d(np.asarray(q, dtype=float))
    x = np.atleast_2d(np.asarray(x, dtype=float))
    alg = algebra(m)
    q0, qv = q[:, 0], q[:, 1:]
    x0 = x[:, 0]
    q_vec_sq = np.sum(qv * qv, axis=1)
    x_sq = np.sum(x * x, axis=1)
    a0 = q0 * q0 - q_vec_sq - 2.0 * x0 * q0 + x_sq
    av = (2.0 * (q0 - x0))[:, None] * qv
    norm_sq = a0 * a0 + np.sum(av * av, axis=1)
    scale = 1.0 + np.sum(q * q, axis=1) + x_sq
    singular = np.sqrt(norm_sq) < SINGULAR_TOL * scale
    safe = np.where(singular, 1.0, norm_sq)
    inv = alg.paravector(a0 / safe, -av / safe[:, None])
    rhs = alg.paravector(q0 - x0, qv + x[:, 1:])
    out = -alg.product(inv, rhs)
    out[singular] = np.nan
    return out, singular


def decomposition_defects(m: int, count: int, rng: np.random.Generator) -> Tuple[List[Paravector], np.ndarray]:
    """Relative gap between the slice decomposition and the direct kernel on random (q, I, x)."""
    if count < 1:
        raise ArgumentError(f"decomposition check needs at least one case, got {count}")
    probes: List[Paravector] = []
    defects = np.empty(count)
    k = 0
    while k < count:
        q = Paravector(m, rng.standard_normal(), tuple(rng.standard_normal(m)))
        I = UnitSliceVector.random(m, rng)
        u, v = rng.standard_normal(), abs(rng.standard_normal())
        x = Paravector.from_slice(u, v, I)
        try:
            direct = cauchy_kernel(q, x)
        except SingularityError:
            continue
        _, split = kernel_slice_decomposition(q, I, (u, v))
        defects[k] = (split - direct).norm() / max(1.0, direct.norm())
        probes.append(q)
        k += 1
    return probes, defects
