"""
Stem functions, the slice functions they induce, and the slice
Cauchy-Riemann operator G.

A stem F = F1 + i F2 is given by two vectorised callables. They take
arrays u, v of shape (N,) and return Clifford coefficient arrays of shape
(N, 2**m). The induced slice function is

    f(u + I v) = F1(u, v) + I F2(u, v)

and stems must satisfy the even-odd conditions F1(u, -v) = F1(u, v),
F2(u, -v) = -F2(u, v), so the value does not depend on which of (I, v) and
(-I, -v) is used. Partials are returned as pairs (d/du, d/dv).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .clifford import Multivector, Paravector, UnitSliceVector, algebra, slice_coordinates
from .errors import ArgumentError, DomainError, SingularityError

logger = logging.getLogger(__name__)

StemCallable = Callable[[np.ndarray, np.ndarray], np.ndarray]
PartialCallable = Callable[[np.ndarray, np.ndarray], Tuple[np.ndarray, np.ndarray]]
Field = Callable[[Paravector], Multivector]

FD_STEP = 1e-5
EVEN_ODD_TOL = 1e-10
EVEN_ODD_SAMPLES = 64

NAMED_FUNCTIONS = ("one", "identity", "conjugate", "square", "cube", "exp", "inv_shift")

UNBOUNDED = (-math.inf, math.inf, math.inf)


def _fd_scale(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    return FD_STEP * np.maximum(1.0, np.maximum(np.abs(u), np.abs(v)))


@dataclass(frozen=True, eq=False)
class StemFunction:
    dim: int
    F1: StemCallable
    F2: StemCallable
    dF1: Optional[PartialCallable] = None
    dF2: Optional[PartialCallable] = None
    # (u_min, u_max, v_max): the stem is defined for u_min <= u <= u_max, |v| <= v_max
    support: Tuple[float, float, float] = UNBOUNDED
    name: str = "stem"
    poles: Tuple[Tuple[float, float], ...] = ()

    @property
    def uses_finite_differences(self) -> bool:
        return self.dF1 is None or self.dF2 is None

    def check_support(self, u: np.ndarray, v: np.ndarray) -> None:
        u = np.atleast_1d(np.asarray(u, dtype=float))
        v = np.atleast_1d(np.asarray(v, dtype=float))
        lo, hi, vmax = self.support
        bad = (u < lo) | (u > hi) | (np.abs(v) > vmax)
        for pu, pv in self.poles:
            bad |= (u == pu) & (np.abs(v) == pv)
        if np.any(bad):
            k = int(np.argmax(bad))
            raise DomainError(f"({u[k]:g}, {v[k]:g}) lies outside the support of stem {self.name!r}")

    def values(self, u: np.ndarray, v: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        return np.asarray(self.F1(u, v), dtype=float), np.asarray(self.F2(u, v), dtype=float)

    def partials(self, u: np.ndarray, v: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """(dF1/du, dF1/dv, dF2/du, dF2/dv), central differences when no analytic partials are attached."""
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        if not self.uses_finite_differences:
            f1u, f1v = self.dF1(u, v)
            f2u, f2v = self.dF2(u, v)
            return f1u, f1v, f2u, f2v
        h = _fd_scale(u, v)
        return _central(self, u, v, h)

    def even_odd_defect(self, samples: int = EVEN_ODD_SAMPLES, seed: int = 0) -> float:
        lo, hi, vmax = self.support
        lo, hi = max(lo, -2.0), min(hi, 2.0)
        vmax = min(vmax, 2.0)
        rng = np.random.default_rng(seed)
        u = rng.uniform(lo, hi, samples)
        v = rng.uniform(0.05 * vmax, vmax, samples)
        a1, a2 = self.values(u, v)
        b1, b2 = self.values(u, -v)
        return float(max(np.max(np.abs(a1 - b1)), np.max(np.abs(a2 + b2))))


def _central(stem: StemFunction, u, v, h) -> Tuple[np.ndarray, ...]:
    hc = h[..., None]
    p1, p2 = stem.values(u + h, v)
    m1, m2 = stem.values(u - h, v)
    q1, q2 = stem.values(u, v + h)
    n1, n2 = stem.values(u, v - h)
    return (p1 - m1) / (2 * hc), (q1 - n1) / (2 * hc), (p2 - m2) / (2 * hc), (q2 - n2) / (2 * hc)


def validate_stem(stem: StemFunction, samples: int = EVEN_ODD_SAMPLES, tol: float = EVEN_ODD_TOL) -> List[str]:
    errors: List[str] = []
    u = np.array([0.3, -0.2])
    v = np.array([0.7, 1.1])
    try:
        f1, f2 = stem.values(u, v)
    except Exception as exc:  # stems are user callables
        return [f"stem {stem.name!r} failed to evaluate: {exc}"]
    size = 1 << stem.dim
    for label, arr in (("F1", f1), ("F2", f2)):
        if arr.shape != (2, size):
            errors.append(f"{label} must return shape (N, {size}), got {arr.shape}")
    if errors:
        return errors
    defect = stem.even_odd_defect(samples)
    if defect > tol:
        errors.append(f"stem {stem.name!r} violates the even-odd conditions (defect {defect:.3g})")
    if stem.uses_finite_differences:
        logger.debug("stem %r has no analytic partials; finite differences substitute", stem.name)
    return errors


@dataclass(frozen=True, eq=False)
class SliceFunction:
    stem: StemFunction

    @property
    def dim(self) -> int:
        return self.stem.dim

    @property
    def name(self) -> str:
        return self.stem.name

    def __call__(self, q: Paravector) -> Multivector:
        return evaluate(self, q)

    def on_slice(self, u: np.ndarray, v: np.ndarray, unit: np.ndarray) -> np.ndarray:
        """Values at u + I v (v signed) for the slice unit with coefficients `unit`."""
        f1, f2 = self.stem.values(u, v)
        return f1 + algebra(self.dim).product(unit, f2)

    def partials_on_slice(self, u: np.ndarray, v: np.ndarray, unit: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        alg = algebra(self.dim)
        f1u, f1v, f2u, f2v = self.stem.partials(u, v)
        return f1u + alg.product(unit, f2u), f1v + alg.product(unit, f2v)


def evaluate(f: SliceFunction, q: Paravector) -> Multivector:
    if q.dim != f.dim:
        raise ArgumentError(f"point in R^{q.dim + 1} for a slice function over Cl_{f.dim}")
    u, v, unit = slice_coordinates(q)
    f.stem.check_support(u, v)
    f1, f2 = f.stem.values(np.array([u]), np.array([v]))
    if unit is None:
        return Multivector(f.dim, f1[0])
    return Multivector(f.dim, f1[0] + algebra(f.dim).product(unit.coefficients(), f2[0]))


def alpha_beta_coefficients(Iq: np.ndarray, I: np.ndarray, m: int) -> Tuple[np.ndarray, np.ndarray]:
    prod = algebra(m).product(Iq, I)
    one = np.zeros(1 << m)
    one[0] = 1.0
    return 0.5 * (one - prod), 0.5 * (one + prod)


def representation_combine(fI: Multivector, fmI: Multivector, I: UnitSliceVector, Iq: UnitSliceVector) -> Multivector:
    m = fI.dim
    alpha, beta = alpha_beta_coefficients(Iq.coefficients(), I.coefficients(), m)
    alg = algebra(m)
    return Multivector(m, alg.product(alpha, fI.coeffs) + alg.product(beta, fmI.coeffs))


def sliceness_defect(g: Field, q: Paravector, I: UnitSliceVector) -> float:
    """|g(q) - alpha g(q_I) - beta g(q_-I)|; zero when g is a slice function."""
    u, v, Iq = slice_coordinates(q)
    if Iq is None:
        raise SingularityError("sliceness is tested off the real axis", point=q, sphere=(u, 0.0))
    qI = Paravector.from_slice(u, v, I)
    qmI = Paravector.from_slice(u, -v, I)
    return (g(q) - representation_combine(g(qI), g(qmI), I, Iq)).norm()


@dataclass(frozen=True)
class GConfig:
    mode: str = "analytic"
    fd_step: float = FD_STEP

    def __post_init__(self) -> None:
        if self.mode not in ("analytic", "finite-difference"):
            raise ArgumentError(f"G mode must be 'analytic' or 'finite-difference', got {self.mode!r}")
        if not self.fd_step > 0.0:
            raise ArgumentError(f"fd_step must be positive, got {self.fd_step}")


def _stem_partials(f: SliceFunction, u: np.ndarray, v: np.ndarray, cfg: GConfig):
    if cfg.mode == "analytic":
        return f.stem.partials(u, v)
    h = cfg.fd_step * np.maximum(1.0, np.maximum(np.abs(u), np.abs(v)))
    return _central(f.stem, u, v, h)


def cauchy_riemann_residual(f: SliceFunction, u: np.ndarray, v: np.ndarray, cfg: Optional[GConfig] = None):
    cfg = cfg or GConfig()
    f1u, f1v, f2u, f2v = _stem_partials(f, np.asarray(u, float), np.asarray(v, float), cfg)
    return f1u - f2v, f1v + f2u


def apply_G(f: SliceFunction, q: Paravector, cfg: Optional[GConfig] = None) -> Multivector:
    u, v, Iq = slice_coordinates(q)
    if Iq is None:
        raise SingularityError("G is defined on R^(m+1)_* only; q lies on the real axis", point=q, sphere=(u, 0.0))
    f.stem.check_support(u, v)
    g1, g2 = cauchy_riemann_residual(f, np.array([u]), np.array([v]), cfg)
    return Multivector(f.dim, g1[0] + algebra(f.dim).product(Iq.coefficients(), g2[0]))


def g_image(f: SliceFunction, cfg: Optional[GConfig] = None) -> SliceFunction:
    """The slice function Gf; its stem is (d_u F1 - d_v F2, d_v F1 + d_u F2)."""
    cfg = cfg or GConfig()
    stem = f.stem

    def G1(u, v):
        return cauchy_riemann_residual(f, u, v, cfg)[0]

    def G2(u, v):
        return cauchy_riemann_residual(f, u, v, cfg)[1]

    return SliceFunction(StemFunction(stem.dim, G1, G2, support=stem.support, name=f"G[{stem.name}]", poles=stem.poles))


def conjugate_g_image(f: SliceFunction, cfg: Optional[GConfig] = None) -> SliceFunction:
    """The slice function (d_u - I d_v) f; its stem is (d_u F1 + d_v F2, d_u F2 - d_v F1)."""
    cfg = cfg or GConfig()
    stem = f.stem

    def H1(u, v):
        f1u, _, _, f2v = _stem_partials(f, np.asarray(u, float), np.asarray(v, float), cfg)
        return f1u + f2v

    def H2(u, v):
        _, f1v, f2u, _ = _stem_partials(f, np.asarray(u, float), np.asarray(v, float), cfg)
        return f2u - f1v

    return SliceFunction(StemFunction(stem.dim, H1, H2, support=stem.support, name=f"Gbar[{stem.name}]",
                                      poles=stem.poles))


def is_slice_monogenic(f: SliceFunction, probes: Sequence[Tuple[float, float]], tol: float = 1e-8,
                       cfg: Optional[GConfig] = None) -> Tuple[bool, float]:
    if len(probes) == 0:
        raise ArgumentError("is_slice_monogenic needs at least one probe")
    pts = np.asarray(probes, dtype=float)
    g1, g2 = cauchy_riemann_residual(f, pts[:, 0], pts[:, 1], cfg)
    residual = float(np.max(np.linalg.norm(g1, axis=1) + np.linalg.norm(g2, axis=1)))
    return residual <= tol, residual


_STENCIL = ((-2, 1.0), (-1, -8.0), (1, 8.0), (2, -1.0))


def apply_G_field(g: Field, q: Paravector, h: float) -> Multivector:
    """G of an arbitrary field by fourth-order differences in the slice coordinates of q.

    On R^(m+1)_* the Euler operator sum x_j d_j equals v d_v, so G = d_u + I_q d_v
    for every field, slice or not.
    """
    u, v, Iq = slice_coordinates(q)
    if Iq is None:
        raise SingularityError("G is defined on R^(m+1)_* only; q lies on the real axis", point=q, sphere=(u, 0.0))
    if h <= 0.0 or h >= v:
        raise ArgumentError(f"difference step {h} must lie in (0, v={v})")
    m = q.dim
    du = np.zeros(1 << m)
    dv = np.zeros(1 << m)
    for k, c in _STENCIL:
        du += c * g(Paravector.from_slice(u + k * h, v, Iq)).coeffs
        dv += c * g(Paravector.from_slice(u, v + k * h, Iq)).coeffs
    du /= 12.0 * h
    dv /= 12.0 * h
    return Multivector(m, du + algebra(m).product(Iq.coefficients(), dv))


# --------------------------------------------------------------------------
# constructors

ComplexTerm = Tuple[Callable[[np.ndarray], np.ndarray], Callable[[np.ndarray], np.ndarray], bool, np.ndarray]


def _complex_stem(m: int, terms: Sequence[ComplexTerm], name: str, support=UNBOUNDED, poles=()) -> StemFunction:
    """Stem sum_k phi_k(z) a_k (or phi_k(conj z) a_k) with real-on-real phi_k and right coefficients a_k.

    Each term is (phi, phi_prime, conjugated, coeffs).
    """

    def split(u, v, which):
        z = np.asarray(u, float) + 1j * np.asarray(v, float)
        out1 = np.zeros(z.shape + (1 << m,))
        out2 = np.zeros(z.shape + (1 << m,))
        for phi, dphi, conj, a in terms:
            zz = np.conj(z) if conj else z
            if which == "value":
                val_u = phi(zz)
                out1 += np.real(val_u)[..., None] * a
                out2 += np.imag(val_u)[..., None] * a
            else:
                d = dphi(zz)
                # d/du = phi'(.), d/dv = +/- i phi'(.)
                dd = d if which == "u" else (-1j * d if conj else 1j * d)
                out1 += np.real(dd)[..., None] * a
                out2 += np.imag(dd)[..., None] * a
        return out1, out2

    def F1(u, v):
        return split(u, v, "value")[0]

    def F2(u, v):
        return split(u, v, "value")[1]

    def dF1(u, v):
        return split(u, v, "u")[0], split(u, v, "v")[0]

    def dF2(u, v):
        return split(u, v, "u")[1], split(u, v, "v")[1]

    return StemFunction(m, F1, F2, dF1, dF2, support=support, name=name, poles=tuple(poles))


def _coeffs(m: int, a) -> np.ndarray:
    if isinstance(a, Multivector):
        if a.dim != m:
            raise ArgumentError(f"coefficient in Cl_{a.dim} for a Cl_{m} polynomial")
        return np.array(a.coeffs)
    out = np.zeros(1 << m)
    out[0] = float(a)
    return out


def _power(n: int):
    return (lambda z: z ** n), (lambda z: n * z ** (n - 1) if n > 0 else np.zeros_like(z))


def make_polynomial(coeffs: Sequence[Multivector], m: Optional[int] = None, name: str = "polynomial") -> SliceFunction:
    """The slice function sum_n q^n a_n."""
    if m is None:
        dims = {a.dim for a in coeffs if isinstance(a, Multivector)}
        if len(dims) != 1:
            raise ArgumentError("make_polynomial needs Multivector coefficients of one algebra, or an explicit m")
        m = dims.pop()
    terms = [(*_power(n), False, _coeffs(m, a)) for n, a in enumerate(coeffs)]
    if not terms:
        terms = [(*_power(0), False, np.zeros(1 << m))]
    return SliceFunction(_complex_stem(m, terms, name))


def make_named(name: str, m: int, c: Optional[float] = None, domain=None) -> SliceFunction:
    """Built-in test functions; `inv_shift` is the stem 1/(z - c) for real c."""
    one = _coeffs(m, 1.0)
    if name == "one":
        return make_polynomial([1.0], m, name="one")
    if name == "identity":
        return make_polynomial([0.0, 1.0], m, name="identity")
    if name == "square":
        return make_polynomial([0.0, 0.0, 1.0], m, name="square")
    if name == "cube":
        return make_polynomial([0.0, 0.0, 0.0, 1.0], m, name="cube")
    if name == "conjugate":
        return SliceFunction(_complex_stem(m, [(lambda z: z, lambda z: np.ones_like(z), True, one)], "conjugate"))
    if name == "exp":
        return SliceFunction(_complex_stem(m, [(np.exp, np.exp, False, one)], "exp"))
    if name == "inv_shift":
        if c is None:
            raise ArgumentError("inv_shift needs the real shift c")
        c = float(c)
        if domain is not None and bool(domain.contains(c, 0.0)):
            raise ArgumentError(f"inv_shift pole at {c:g} lies inside {domain.profile.describe()}")
        term = (lambda z: 1.0 / (z - c), lambda z: -1.0 / (z - c) ** 2, False, one)
        return SliceFunction(_complex_stem(m, [term], f"inv_shift({c:g})", poles=((c, 0.0),)))
    raise ArgumentError(f"unknown function {name!r}; expected one of {', '.join(NAMED_FUNCTIONS)}")


def parse_function_name(text: str, m: int, domain=None) -> SliceFunction:
    """Resolve corpus names, including the `inv_shift(c)` form."""
    text = text.strip()
    if text.startswith("inv_shift"):
        inner = text[len("inv_shift"):].strip()
        if not (inner.startswith("(") and inner.endswith(")")):
            raise ArgumentError(f"expected inv_shift(c), got {text!r}")
        try:
            c = float(inner[1:-1])
        except ValueError:
            raise ArgumentError(f"inv_shift shift must be a number, got {inner[1:-1]!r}") from None
        return make_named("inv_shift", m, c=c, domain=domain)
    return make_named(text, m, domain=domain)


def linear_combination(functions: Sequence[SliceFunction], coefficients: Sequence[float],
                       name: str = "combination") -> SliceFunction:
    """Slice function with stem sum_j c_j F_j for real c_j."""
    if len(functions) != len(coefficients) or not functions:
        raise ArgumentError("linear_combination needs matching, non-empty function and coefficient lists")
    m = functions[0].dim
    if any(f.dim != m for f in functions):
        raise ArgumentError("linear_combination mixes algebras")
    cs = [float(c) for c in coefficients]
    stems = [f.stem for f in functions]

    def F(index):
        def value(u, v):
            return sum(c * s.values(u, v)[index] for c, s in zip(cs, stems))
        return value

    def dF(offset):
        def partial(u, v):
            parts = [s.partials(u, v) for s in stems]
            du = sum(c * p[offset] for c, p in zip(cs, parts))
            dv = sum(c * p[offset + 1] for c, p in zip(cs, parts))
            return du, dv
        return partial

    analytic = not any(s.uses_finite_differences for s in stems)
    lo = max(s.support[0] for s in stems)
    hi = min(s.support[1] for s in stems)
    vmax = min(s.support[2] for s in stems)
    poles = tuple(p for s in stems for p in s.poles)
    return SliceFunction(StemFunction(
        m, F(0), F(1), dF(0) if analytic else None, dF(2) if analytic else None,
        support=(lo, hi, vmax), name=name, poles=poles,
    ))


def right_multiply(f: SliceFunction, a: Multivector) -> SliceFunction:
    """The slice function f * a for a constant right factor a."""
    m = f.dim
    alg = algebra(m)
    ac = _coeffs(m, a)
    stem = f.stem

    def F1(u, v):
        return alg.product(stem.values(u, v)[0], ac)

    def F2(u, v):
        return alg.product(stem.values(u, v)[1], ac)

    dF1 = dF2 = None
    if not stem.uses_finite_differences:
        def dF1(u, v):
            f1u, f1v, _, _ = stem.partials(u, v)
            return alg.product(f1u, ac), alg.product(f1v, ac)

        def dF2(u, v):
            _, _, f2u, f2v = stem.partials(u, v)
            return alg.product(f2u, ac), alg.product(f2v, ac)

    return SliceFunction(StemFunction(m, F1, F2, dF1, dF2, support=stem.support,
                                      name=f"{stem.name}*a", poles=stem.poles))


def radial_weight(f: SliceFunction, exponent: float) -> SliceFunction:
    """Slice function with stem |v|^exponent (F1, F2); even-odd conditions are kept."""
    if exponent == 0:
        return f
    stem = f.stem
    k = float(exponent)

    def F1(u, v):
        return np.abs(v)[..., None] ** k * stem.values(u, v)[0]

    def F2(u, v):
        return np.abs(v)[..., None] ** k * stem.values(u, v)[1]

    dF1 = dF2 = None
    if not stem.uses_finite_differences:
        def _weighted(u, v, offset):
            parts = stem.partials(u, v)
            vals = stem.values(u, v)[offset // 2]
            w = np.abs(v)[..., None] ** k
            dw = (k * np.abs(v) ** (k - 1.0) * np.sign(v))[..., None]
            return w * parts[offset], dw * vals + w * parts[offset + 1]

        def dF1(u, v):
            return _weighted(u, v, 0)

        def dF2(u, v):
            return _weighted(u, v, 2)

    return SliceFunction(StemFunction(stem.dim, F1, F2, dF1, dF2, support=stem.support,
                                      name=f"|v|^{k:g}*{stem.name}", poles=stem.poles))
