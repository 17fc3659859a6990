"""
Real Clifford algebra Cl_m with negative-definite generators (e_i^2 = -1).

Elements are dense coefficient vectors of length 2**m indexed by blades in
graded-lexicographic order:

    1, e1, e2, ..., em, e12, e13, ..., e(m-1)m, e123, ...

Blade products are computed from bitmasks: the result blade is the symmetric
difference, the sign counts the transpositions needed to sort the generators
plus one factor -1 for every generator the two blades share.

Every quadrature path in the package works on arrays of shape (..., 2**m)
through `CliffordAlgebra.product`; the `Multivector`/`Paravector` classes are
the single-value API on top of it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import AlgebraMismatchError, ArgumentError, SingularInputError

MAX_DIM = 6
UNIT_TOL = 1e-12

Number = Union[int, float]


def _check_dim(m: int) -> None:
    if not isinstance(m, (int, np.integer)) or m < 1 or m > MAX_DIM:
        raise ArgumentError(f"Cl_m is supported for 1 <= m <= {MAX_DIM}, got m={m!r}")


def _blade_sign(a: int, b: int) -> int:
    swaps = 0
    x = a >> 1
    while x:
        swaps += bin(x & b).count("1")
        x >>= 1
    sign = -1 if swaps & 1 else 1
    if bin(a & b).count("1") & 1:
        sign = -sign
    return sign


class CliffordAlgebra:
    def __init__(self, m: int) -> None:
        _check_dim(m)
        self.m = m
        self.size = 1 << m
        blades: List[Tuple[int, ...]] = []
        for k in range(m + 1):
            blades.extend(combinations(range(1, m + 1), k))
        self.blades = blades
        self.masks = np.array([sum(1 << (i - 1) for i in b) for b in blades], dtype=np.int64)
        self.index_of_mask: Dict[int, int] = {int(mask): idx for idx, mask in enumerate(self.masks)}
        self.index_of_blade: Dict[Tuple[int, ...], int] = {b: idx for idx, b in enumerate(blades)}
        self.grades = np.array([len(b) for b in blades], dtype=np.int64)
        k = self.grades
        self.conj_signs = np.where(((k * (k + 1)) // 2) % 2 == 0, 1.0, -1.0)

        self.product_index = np.zeros((self.size, self.size), dtype=np.int64)
        self.product_sign = np.zeros((self.size, self.size), dtype=float)
        for i, mi in enumerate(self.masks):
            for j, mj in enumerate(self.masks):
                self.product_index[i, j] = self.index_of_mask[int(mi) ^ int(mj)]
                self.product_sign[i, j] = _blade_sign(int(mi), int(mj))

    def blade_name(self, idx: int) -> str:
        blade = self.blades[idx]
        if not blade:
            return "1"
        return "e" + "".join(str(i) for i in blade)

    def product(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Geometric product of coefficient arrays, broadcasting over leading axes."""
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        if a.shape[-1] != self.size or b.shape[-1] != self.size:
            raise AlgebraMismatchError(
                f"coefficient arrays must end in {self.size} for Cl_{self.m}, got {a.shape} and {b.shape}"
            )
        out = np.zeros(np.broadcast_shapes(a.shape, b.shape))
        for i in range(self.size):
            ai = a[..., i:i + 1]
            if not ai.any():
                continue
            out[..., self.product_index[i]] += self.product_sign[i] * ai * b
        return out

    def conjugate(self, a: np.ndarray) -> np.ndarray:
        return np.asarray(a, dtype=float) * self.conj_signs

    def vector(self, components: Sequence[float]) -> np.ndarray:
        comps = np.asarray(components, dtype=float)
        out = np.zeros(comps.shape[:-1] + (self.size,))
        out[..., 1:self.m + 1] = comps
        return out

    def paravector(self, scalar: np.ndarray, components: np.ndarray) -> np.ndarray:
        out = self.vector(components)
        out[..., 0] = scalar
        return out

    def from_complex(self, z: np.ndarray, unit: np.ndarray) -> np.ndarray:
        """Embed complex numbers into the slice spanned by 1 and `unit` (a 1-vector array)."""
        z = np.asarray(z)
        unit = np.asarray(unit, dtype=float)
        out = z.imag[..., None] * unit
        out = np.array(np.broadcast_to(out, np.broadcast_shapes(out.shape, (self.size,))))
        out[..., 0] += z.real
        return out


@lru_cache(maxsize=None)
def algebra(m: int) -> CliffordAlgebra:
    return CliffordAlgebra(m)


class Multivector:
    __slots__ = ("dim", "coeffs")

    def __init__(self, dim: int, coeffs: Iterable[float]) -> None:
        _check_dim(dim)
        arr = np.array(list(coeffs) if not isinstance(coeffs, np.ndarray) else coeffs, dtype=float)
        if arr.shape != (1 << dim,):
            raise ArgumentError(f"Cl_{dim} needs {1 << dim} coefficients, got shape {arr.shape}")
        arr.setflags(write=False)
        self.dim = int(dim)
        self.coeffs = arr

    @classmethod
    def scalar(cls, m: int, value: float = 1.0) -> "Multivector":
        c = np.zeros(1 << m)
        c[0] = value
        return cls(m, c)

    @classmethod
    def zero(cls, m: int) -> "Multivector":
        return cls(m, np.zeros(1 << m))

    @classmethod
    def basis(cls, m: int, i: int) -> "Multivector":
        return cls.blade(m, i)

    @classmethod
    def blade(cls, m: int, *indices: int) -> "Multivector":
        alg = algebra(m)
        key = tuple(sorted(indices))
        if len(set(key)) != len(key) or key not in alg.index_of_blade:
            raise ArgumentError(f"no blade e{''.join(map(str, indices))} in Cl_{m}")
        # unsorted generator lists pick up the reordering sign
        value = np.zeros(alg.size)
        value[0] = 1.0
        for i in indices:
            e = np.zeros(alg.size)
            e[alg.index_of_blade[(i,)]] = 1.0
            value = alg.product(value, e)
        return cls(m, value)

    @property
    def algebra(self) -> CliffordAlgebra:
        return algebra(self.dim)

    @property
    def scalar_part(self) -> float:
        return float(self.coeffs[0])

    def grade(self, k: int) -> "Multivector":
        mask = self.algebra.grades == k
        return Multivector(self.dim, np.where(mask, self.coeffs, 0.0))

    def is_paravector(self, tol: float = 0.0) -> bool:
        return bool(np.all(np.abs(self.coeffs[self.algebra.grades >= 2]) <= tol))

    def conjugate(self) -> "Multivector":
        return clifford_conjugate(self)

    def norm(self) -> float:
        return norm(self)

    def is_close(self, other: "Multivector", tol: float = 1e-12) -> bool:
        _same_dim(self, other)
        return bool(np.max(np.abs(self.coeffs - other.coeffs)) <= tol)

    def _coerce(self, other: object) -> Optional["Multivector"]:
        if isinstance(other, Multivector):
            _same_dim(self, other)
            return other
        if isinstance(other, Paravector):
            return _same_dim(self, other.to_multivector())
        if isinstance(other, (int, float, np.integer, np.floating)):
            return Multivector.scalar(self.dim, float(other))
        return None

    def __add__(self, other: object) -> "Multivector":
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return Multivector(self.dim, self.coeffs + o.coeffs)

    __radd__ = __add__

    def __sub__(self, other: object) -> "Multivector":
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return Multivector(self.dim, self.coeffs - o.coeffs)

    def __rsub__(self, other: object) -> "Multivector":
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return Multivector(self.dim, o.coeffs - self.coeffs)

    def __neg__(self) -> "Multivector":
        return Multivector(self.dim, -self.coeffs)

    def __mul__(self, other: object) -> "Multivector":
        if isinstance(other, (int, float, np.integer, np.floating)):
            return Multivector(self.dim, self.coeffs * float(other))
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return geometric_product(self, o)

    def __rmul__(self, other: object) -> "Multivector":
        if isinstance(other, (int, float, np.integer, np.floating)):
            return Multivector(self.dim, self.coeffs * float(other))
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return geometric_product(o, self)

    def __truediv__(self, other: object) -> "Multivector":
        if isinstance(other, (int, float, np.integer, np.floating)):
            return Multivector(self.dim, self.coeffs / float(other))
        return NotImplemented

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Multivector):
            return NotImplemented
        return self.dim == other.dim and bool(np.array_equal(self.coeffs, other.coeffs))

    def __hash__(self) -> int:
        return hash((self.dim, self.coeffs.tobytes()))

    def __str__(self) -> str:
        alg = self.algebra
        parts = []
        for idx, c in enumerate(self.coeffs):
            if c == 0.0:
                continue
            name = alg.blade_name(idx)
            parts.append(f"{c:g}" if name == "1" else f"{c:g}{name}")
        return " + ".join(parts).replace("+ -", "- ") if parts else "0"

    def __repr__(self) -> str:
        return f"Multivector({self.dim}, {self})"


@dataclass(frozen=True)
class Paravector:
    dim: int
    scalar: float
    vector: Tuple[float, ...]

    def __post_init__(self) -> None:
        _check_dim(self.dim)
        object.__setattr__(self, "scalar", float(self.scalar))
        object.__setattr__(self, "vector", tuple(float(x) for x in self.vector))
        if len(self.vector) != self.dim:
            raise ArgumentError(f"paravector in R^{self.dim + 1} needs {self.dim} vector components, got {len(self.vector)}")

    @classmethod
    def from_slice(cls, u: float, v: float, unit: "UnitSliceVector") -> "Paravector":
        return cls(unit.dim, u, tuple(v * c for c in unit.components))

    @property
    def array(self) -> np.ndarray:
        return np.array((self.scalar,) + self.vector)

    @property
    def vector_norm(self) -> float:
        return math.sqrt(sum(x * x for x in self.vector))

    def to_multivector(self) -> Multivector:
        alg = algebra(self.dim)
        return Multivector(self.dim, alg.paravector(self.scalar, np.array(self.vector)))

    def conjugate(self) -> "Paravector":
        return Paravector(self.dim, self.scalar, tuple(-x for x in self.vector))

    def norm(self) -> float:
        return math.sqrt(self.scalar * self.scalar + sum(x * x for x in self.vector))

    def inverse(self) -> "Paravector":
        return paravector_inverse(self)

    def slice_coordinates(self) -> Tuple[float, float, Optional["UnitSliceVector"]]:
        return slice_coordinates(self)

    def __add__(self, other: object) -> "Paravector":
        if isinstance(other, Paravector):
            _same_dim(self, other)
            return Paravector(self.dim, self.scalar + other.scalar,
                              tuple(a + b for a, b in zip(self.vector, other.vector)))
        if isinstance(other, (int, float)):
            return Paravector(self.dim, self.scalar + other, self.vector)
        return NotImplemented

    def __sub__(self, other: object) -> "Paravector":
        if isinstance(other, Paravector):
            _same_dim(self, other)
            return Paravector(self.dim, self.scalar - other.scalar,
                              tuple(a - b for a, b in zip(self.vector, other.vector)))
        if isinstance(other, (int, float)):
            return Paravector(self.dim, self.scalar - other, self.vector)
        return NotImplemented

    def __mul__(self, other: object) -> Union["Paravector", Multivector]:
        if isinstance(other, (int, float)):
            return Paravector(self.dim, self.scalar * other, tuple(x * other for x in self.vector))
        if isinstance(other, (Paravector, Multivector)):
            rhs = other.to_multivector() if isinstance(other, Paravector) else other
            return geometric_product(self.to_multivector(), rhs)
        return NotImplemented

    def __rmul__(self, other: object) -> "Paravector":
        if isinstance(other, (int, float)):
            return self * other
        return NotImplemented


@dataclass(frozen=True)
class UnitSliceVector:
    components: Tuple[float, ...]

    def __post_init__(self) -> None:
        comps = tuple(float(c) for c in self.components)
        object.__setattr__(self, "components", comps)
        _check_dim(len(comps))
        n = math.sqrt(sum(c * c for c in comps))
        if abs(n - 1.0) > UNIT_TOL:
            raise ArgumentError(f"slice unit vector must have norm 1, got {n!r}")

    @classmethod
    def from_vector(cls, components: Sequence[float]) -> "UnitSliceVector":
        arr = np.asarray(components, dtype=float)
        n = float(np.linalg.norm(arr))
        if n == 0.0:
            raise SingularInputError("cannot normalise the zero vector")
        return cls(tuple(arr / n))

    @classmethod
    def basis(cls, m: int, i: int) -> "UnitSliceVector":
        comps = [0.0] * m
        comps[i - 1] = 1.0
        return cls(tuple(comps))

    @classmethod
    def random(cls, m: int, rng: np.random.Generator) -> "UnitSliceVector":
        while True:
            g = rng.standard_normal(m)
            n = float(np.linalg.norm(g))
            if n > 1e-8:
                return cls.from_vector(g / n)

    @property
    def dim(self) -> int:
        return len(self.components)

    @property
    def array(self) -> np.ndarray:
        return np.array(self.components)

    def coefficients(self) -> np.ndarray:
        """Coefficient vector of I as an element of Cl_m."""
        return algebra(self.dim).vector(self.array)

    def to_multivector(self) -> Multivector:
        return Multivector(self.dim, self.coefficients())

    def __neg__(self) -> "UnitSliceVector":
        return UnitSliceVector(tuple(-c for c in self.components))


def _same_dim(a, b):
    if a.dim != b.dim:
        raise AlgebraMismatchError(f"incompatible algebras: Cl_{a.dim} and Cl_{b.dim}")
    return b


def geometric_product(a: Multivector, b: Multivector) -> Multivector:
    _same_dim(a, b)
    return Multivector(a.dim, algebra(a.dim).product(a.coeffs, b.coeffs))


def clifford_conjugate(a: Multivector) -> Multivector:
    return Multivector(a.dim, algebra(a.dim).conjugate(a.coeffs))


def norm(a: Union[Multivector, Paravector]) -> float:
    if isinstance(a, Paravector):
        return a.norm()
    return float(np.sqrt(np.dot(a.coeffs, a.coeffs)))


def paravector_inverse(p: Paravector) -> Paravector:
    n2 = p.scalar * p.scalar + sum(x * x for x in p.vector)
    if n2 == 0.0:
        raise SingularInputError("the zero paravector has no inverse")
    c = p.conjugate()
    return Paravector(p.dim, c.scalar / n2, tuple(x / n2 for x in c.vector))


def slice_coordinates(p: Paravector) -> Tuple[float, float, Optional[UnitSliceVector]]:
    v = p.vector_norm
    if v == 0.0:
        return p.scalar, 0.0, None
    unit = tuple(x / v for x in p.vector)
    # renormalise so the unit-norm check holds after rounding
    s = math.sqrt(sum(c * c for c in unit))
    return p.scalar, v, UnitSliceVector(tuple(c / s for c in unit))


def axiom_defects(m: int, count: int, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    """Relative defects of the algebra axioms on `count` random cases.

    Each case checks associativity, the conjugation anti-homomorphism and
    x x^-1 = 1 for a random paravector x; the generator relations
    e_i e_j + e_j e_i = -2 delta_ij are added to every case. Returns the
    paravectors (count, m+1) and the per-case maximum defect.
    """
    if count < 1:
        raise ArgumentError(f"axiom check needs at least one case, got {count}")
    alg = algebra(m)
    a, b, c = (rng.standard_normal((count, alg.size)) for _ in range(3))
    na, nb, nc = (np.linalg.norm(t, axis=1) for t in (a, b, c))
    assoc = np.linalg.norm(alg.product(alg.product(a, b), c) - alg.product(a, alg.product(b, c)), axis=1)
    assoc /= na * nb * nc
    ab = alg.product(a, b)
    anti = np.linalg.norm(alg.conjugate(ab) - alg.product(alg.conjugate(b), alg.conjugate(a)), axis=1) / (na * nb)

    x = rng.standard_normal((count, m + 1))
    xc = alg.paravector(x[:, 0], x[:, 1:])
    x_inv = alg.conjugate(xc) / np.sum(x * x, axis=1)[:, None]
    one = np.zeros(alg.size)
    one[0] = 1.0
    inverse = np.linalg.norm(alg.product(xc, x_inv) - one, axis=1)

    e = alg.vector(np.eye(m))
    pairs = alg.product(e[:, None, :], e[None, :, :])
    anticomm = pairs + np.swapaxes(pairs, 0, 1)
    anticomm[..., 0] += 2.0 * np.eye(m)
    generators = float(np.max(np.abs(anticomm)))

    return x, np.maximum.reduce([assoc, anti, inverse, np.full(count, generators)])
