"""
Axially symmetric domains and their quadrature.

A domain Omega_D in R^{m+1}_* is described by its upper profile D+ in the
half-plane {(u, v): v > 0}. Points of Omega_D are x = u + I v with I on the
unit sphere of R^m, so every volume integral splits as

    dV(x) = |x_vec|^(m-1) dV_I(x) dS(I)

with dV_I the area element on the slice C_I and dS the sphere element.
The conjugation-invariant slice region Omega_I = D+ u mirror(D+) is never
stored; quadratures expose `full_nodes()`/`full_weights()` which append the
mirrored nodes.
"""

from __future__ import annotations

import dataclasses
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import gamma, roots_jacobi

from .clifford import Paravector, UnitSliceVector, algebra
from .errors import ArgumentError, DomainError, GeometryError

logger = logging.getLogger(__name__)

PROFILE_PARAMS: Dict[str, Tuple[str, ...]] = {
    "disk": ("u0", "v0", "R"),
    "rectangle": ("a", "b", "v_min", "v_max"),
    "annulus-sector": ("u0", "v0", "r_in", "r_out", "theta0", "theta1"),
}

DEFAULT_RESOLUTION = 32
DEFAULT_SPHERE_ORDER = 16
PATCH_NODES = 16
PATCH_CELLS = 3.0


def sphere_area(m: int) -> float:
    """omega_{m-1}: surface area of the unit sphere in R^m."""
    return float(2.0 * math.pi ** (m / 2.0) / gamma(m / 2.0))


def _gauss(n: int, a: float, b: float) -> Tuple[np.ndarray, np.ndarray]:
    x, w = leggauss(n)
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


# --------------------------------------------------------------------------
# quadrature records

@dataclass(frozen=True, eq=False)
class SingularPatch:
    center: Tuple[float, float]
    radius: float
    nodes: np.ndarray
    weights: np.ndarray


@dataclass(frozen=True, eq=False)
class SliceQuadrature:
    nodes: np.ndarray
    weights: np.ndarray
    singular_patches: Tuple[SingularPatch, ...] = ()

    @property
    def size(self) -> int:
        return int(self.weights.shape[0])

    @property
    def total_weight(self) -> float:
        return float(np.sum(self.weights))

    def full_nodes(self) -> np.ndarray:
        mirror = self.nodes * np.array([1.0, -1.0])
        return np.concatenate([self.nodes, mirror])

    def full_weights(self) -> np.ndarray:
        return np.concatenate([self.weights, self.weights])


@dataclass(frozen=True, eq=False)
class BoundaryQuadrature:
    nodes: np.ndarray
    tangents: np.ndarray
    normals: np.ndarray
    weights: np.ndarray

    @property
    def size(self) -> int:
        return int(self.weights.shape[0])

    @property
    def perimeter(self) -> float:
        return float(np.sum(self.weights))

    @property
    def spacing(self) -> float:
        return float(np.max(self.weights))

    def full_nodes(self) -> np.ndarray:
        return np.concatenate([self.nodes, self.nodes * np.array([1.0, -1.0])])

    def full_normals(self) -> np.ndarray:
        return np.concatenate([self.normals, self.normals * np.array([1.0, -1.0])])

    def full_tangents(self) -> np.ndarray:
        # mirrored curve keeps positive orientation: tangent is the rotated mirrored normal
        n = self.full_normals()
        return np.stack([-n[:, 1], n[:, 0]], axis=1)

    def full_weights(self) -> np.ndarray:
        return np.concatenate([self.weights, self.weights])


@dataclass(frozen=True, eq=False)
class SphereQuadrature:
    dim: int
    nodes: np.ndarray
    weights: np.ndarray

    @property
    def size(self) -> int:
        return int(self.weights.shape[0])

    def units(self) -> List[UnitSliceVector]:
        return [UnitSliceVector.from_vector(row) for row in self.nodes]

    def coefficients(self) -> np.ndarray:
        """(K, 2**m) Clifford coefficients of the node vectors."""
        norms = np.linalg.norm(self.nodes, axis=1, keepdims=True)
        return algebra(self.dim).vector(self.nodes / norms)


def _full_sphere(m: int, order: int) -> Tuple[np.ndarray, np.ndarray]:
    if m == 2:
        theta = 2.0 * math.pi * (np.arange(order) + 0.5) / order
        nodes = np.stack([np.cos(theta), np.sin(theta)], axis=1)
        return nodes, np.full(order, 2.0 * math.pi / order)
    a = (m - 3) / 2.0
    t, wt = roots_jacobi(max(2, order // 2), a, a)
    sub_nodes, sub_w = _full_sphere(m - 1, order)
    s = np.sqrt(1.0 - t * t)
    nodes = np.concatenate(
        [np.column_stack([si * sub_nodes, np.full(len(sub_w), ti)]) for si, ti in zip(s, t)]
    )
    weights = np.concatenate([wi * sub_w for wi in wt])
    return nodes, weights


def sphere_rule(m: int, order: int = DEFAULT_SPHERE_ORDER) -> SphereQuadrature:
    """Quadrature on the half sphere S+ = {I : last nonzero coordinate > 0}.

    Weights sum to omega_{m-1}/2. Integrands are evaluated per slice C_I and
    C_I = C_{-I}, so folding a full-sphere rule onto S+ loses nothing.
    """
    if order < 1:
        raise ArgumentError(f"sphere order must be positive, got {order}")
    if m == 1:
        return SphereQuadrature(1, np.array([[1.0]]), np.array([1.0]))
    if m == 2:
        theta = math.pi * (np.arange(order) + 0.5) / order
        nodes = np.stack([np.cos(theta), np.sin(theta)], axis=1)
        return SphereQuadrature(2, nodes, np.full(order, math.pi / order))
    if m == 3:
        n_t = max(2, order // 2)
        t, wt = _gauss(n_t, 0.0, 1.0)
        phi = 2.0 * math.pi * np.arange(order) / order
        s = np.sqrt(1.0 - t * t)
        nodes = np.array([[si * math.cos(p), si * math.sin(p), ti] for si, ti in zip(s, t) for p in phi])
        weights = np.array([wi * 2.0 * math.pi / order for wi in wt for _ in phi])
        return SphereQuadrature(3, nodes, weights)
    nodes, weights = _full_sphere(m, order)
    flip = nodes[:, -1] < 0.0
    nodes[flip] *= -1.0
    return SphereQuadrature(m, nodes, 0.5 * weights)


# --------------------------------------------------------------------------
# profile shapes

def _segment_closest(p: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    d = b - a
    t = float(np.clip(np.dot(p - a, d) / np.dot(d, d), 0.0, 1.0))
    return a + t * d


def _angle_in(theta: float, lo: float, hi: float) -> bool:
    rel = (theta - lo) % (2.0 * math.pi)
    return rel <= hi - lo + 1e-15


class _Shape:
    """Common geometry of a profile D+; subclasses supply the kind-specific parts."""

    center: np.ndarray

    def area(self) -> float:
        raise NotImplementedError

    def v_min(self) -> float:
        raise NotImplementedError

    def base_rule(self, n: int) -> Tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    def boundary(self, n: int) -> BoundaryQuadrature:
        raise NotImplementedError

    def boundary_count_for_spacing(self, h: float) -> int:
        raise NotImplementedError

    def contains(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def closest(self, p: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Nearest boundary point and the outward normal there."""
        raise NotImplementedError

    def ray_panels(self, c: np.ndarray) -> Optional[List[Tuple[float, float, bool]]]:
        """Angular panels (start, end, periodic) for a ray rule from c, or None."""
        return None

    def ray_length(self, c: np.ndarray, theta: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def perimeter(self) -> float:
        return self.boundary(256).perimeter


class _Disk(_Shape):
    def __init__(self, u0: float, v0: float, R: float) -> None:
        self.center = np.array([u0, v0], dtype=float)
        self.R = float(R)

    def area(self) -> float:
        return math.pi * self.R ** 2

    def perimeter(self) -> float:
        return 2.0 * math.pi * self.R

    def v_min(self) -> float:
        return float(self.center[1] - self.R)

    def base_rule(self, n: int) -> Tuple[np.ndarray, np.ndarray]:
        r, wr = _gauss(max(2, n // 2), 0.0, self.R)
        n_t = max(4, n)
        theta = 2.0 * math.pi * np.arange(n_t) / n_t
        rr, tt = np.meshgrid(r, theta, indexing="ij")
        nodes = self.center + np.stack([rr * np.cos(tt), rr * np.sin(tt)], axis=-1).reshape(-1, 2)
        weights = (wr[:, None] * r[:, None] * np.full(n_t, 2.0 * math.pi / n_t)[None, :]).reshape(-1)
        return nodes, weights

    def boundary(self, n: int) -> BoundaryQuadrature:
        theta = 2.0 * math.pi * (np.arange(n) + 0.5) / n
        normals = np.stack([np.cos(theta), np.sin(theta)], axis=1)
        tangents = np.stack([-np.sin(theta), np.cos(theta)], axis=1)
        return BoundaryQuadrature(
            self.center + self.R * normals, tangents, normals, np.full(n, 2.0 * math.pi * self.R / n)
        )

    def boundary_count_for_spacing(self, h: float) -> int:
        return int(math.ceil(2.0 * math.pi * self.R / h))

    def contains(self, u, v):
        return (np.asarray(u) - self.center[0]) ** 2 + (np.asarray(v) - self.center[1]) ** 2 < self.R ** 2

    def closest(self, p):
        d = p - self.center
        r = float(np.linalg.norm(d))
        normal = d / r if r > 0 else np.array([1.0, 0.0])
        return self.center + self.R * normal, normal

    def ray_panels(self, c):
        return [(0.0, 2.0 * math.pi, True)]

    def ray_length(self, c, theta):
        d = c - self.center
        de = d[0] * np.cos(theta) + d[1] * np.sin(theta)
        return -de + np.sqrt(de * de - float(np.dot(d, d)) + self.R ** 2)


class _Rectangle(_Shape):
    def __init__(self, a: float, b: float, v_min: float, v_max: float) -> None:
        self.a, self.b, self.lo, self.hi = float(a), float(b), float(v_min), float(v_max)
        self.center = np.array([(self.a + self.b) / 2.0, (self.lo + self.hi) / 2.0])

    def corners(self) -> np.ndarray:
        return np.array([[self.a, self.lo], [self.b, self.lo], [self.b, self.hi], [self.a, self.hi]])

    def area(self) -> float:
        return (self.b - self.a) * (self.hi - self.lo)

    def perimeter(self) -> float:
        return 2.0 * ((self.b - self.a) + (self.hi - self.lo))

    def v_min(self) -> float:
        return self.lo

    def base_rule(self, n: int) -> Tuple[np.ndarray, np.ndarray]:
        u, wu = _gauss(n, self.a, self.b)
        v, wv = _gauss(n, self.lo, self.hi)
        uu, vv = np.meshgrid(u, v, indexing="ij")
        return np.stack([uu.ravel(), vv.ravel()], axis=1), np.outer(wu, wv).ravel()

    def boundary(self, n: int) -> BoundaryQuadrature:
        nodes, tangents, normals, weights = [], [], [], []
        c = self.corners()
        outward = [(0.0, -1.0), (1.0, 0.0), (0.0, 1.0), (-1.0, 0.0)]
        for k in range(4):
            p0, p1 = c[k], c[(k + 1) % 4]
            s = (np.arange(n) + 0.5) / n
            nodes.append(p0 + s[:, None] * (p1 - p0))
            length = float(np.linalg.norm(p1 - p0))
            tangents.append(np.tile((p1 - p0) / length, (n, 1)))
            normals.append(np.tile(outward[k], (n, 1)))
            weights.append(np.full(n, length / n))
        return BoundaryQuadrature(
            np.concatenate(nodes), np.concatenate(tangents), np.concatenate(normals), np.concatenate(weights)
        )

    def boundary_count_for_spacing(self, h: float) -> int:
        return int(math.ceil(max(self.b - self.a, self.hi - self.lo) / h))

    def contains(self, u, v):
        u, v = np.asarray(u), np.asarray(v)
        return (u > self.a) & (u < self.b) & (v > self.lo) & (v < self.hi)

    def closest(self, p):
        c = self.corners()
        outward = [(0.0, -1.0), (1.0, 0.0), (0.0, 1.0), (-1.0, 0.0)]
        best, best_d, best_n = None, math.inf, None
        for k in range(4):
            q = _segment_closest(p, c[k], c[(k + 1) % 4])
            d = float(np.linalg.norm(p - q))
            if d < best_d:
                best, best_d, best_n = q, d, np.array(outward[k])
        return best, best_n

    def ray_panels(self, c):
        angles = sorted(math.atan2(k[1] - c[1], k[0] - c[0]) % (2.0 * math.pi) for k in self.corners())
        return [(angles[i], angles[i + 1] if i < 3 else angles[0] + 2.0 * math.pi, False) for i in range(4)]

    def ray_length(self, c, theta):
        cos, sin = np.cos(theta), np.sin(theta)
        with np.errstate(divide="ignore", invalid="ignore"):
            tu = np.where(cos > 0, (self.b - c[0]) / cos, np.where(cos < 0, (self.a - c[0]) / cos, np.inf))
            tv = np.where(sin > 0, (self.hi - c[1]) / sin, np.where(sin < 0, (self.lo - c[1]) / sin, np.inf))
        return np.minimum(tu, tv)


class _AnnulusSector(_Shape):
    def __init__(self, u0, v0, r_in, r_out, theta0, theta1) -> None:
        self.origin = np.array([u0, v0], dtype=float)
        self.r_in, self.r_out = float(r_in), float(r_out)
        self.t0, self.t1 = float(theta0), float(theta1)
        rm, tm = 0.5 * (self.r_in + self.r_out), 0.5 * (self.t0 + self.t1)
        self.center = self.origin + rm * np.array([math.cos(tm), math.sin(tm)])

    def area(self) -> float:
        return 0.5 * (self.t1 - self.t0) * (self.r_out ** 2 - self.r_in ** 2)

    def perimeter(self) -> float:
        return (self.t1 - self.t0) * (self.r_in + self.r_out) + 2.0 * (self.r_out - self.r_in)

    def v_min(self) -> float:
        candidates = [math.sin(self.t0), math.sin(self.t1)]
        k = math.ceil((self.t0 + math.pi / 2.0) / (2.0 * math.pi))
        if -math.pi / 2.0 + 2.0 * math.pi * k <= self.t1:
            candidates.append(-1.0)
        smin = min(candidates)
        radius = self.r_out if smin < 0.0 else self.r_in
        return float(self.origin[1] + radius * smin)

    def base_rule(self, n: int) -> Tuple[np.ndarray, np.ndarray]:
        r, wr = _gauss(max(2, n // 2), self.r_in, self.r_out)
        t, wt = _gauss(max(2, n), self.t0, self.t1)
        rr, tt = np.meshgrid(r, t, indexing="ij")
        nodes = self.origin + np.stack([rr * np.cos(tt), rr * np.sin(tt)], axis=-1).reshape(-1, 2)
        return nodes, (wr[:, None] * r[:, None] * wt[None, :]).reshape(-1)

    def _pieces(self, n: int):
        s = (np.arange(n) + 0.5) / n
        dt = self.t1 - self.t0
        # outer arc t0 -> t1, edge at t1 inwards, inner arc t1 -> t0, edge at t0 outwards
        th = self.t0 + dt * s
        e = np.stack([np.cos(th), np.sin(th)], axis=1)
        yield self.origin + self.r_out * e, e, np.full(n, dt * self.r_out / n)
        e1 = np.array([math.cos(self.t1), math.sin(self.t1)])
        r = self.r_out - (self.r_out - self.r_in) * s
        yield self.origin + r[:, None] * e1, np.tile([-e1[1], e1[0]], (n, 1)), np.full(n, (self.r_out - self.r_in) / n)
        th = self.t1 - dt * s
        e = np.stack([np.cos(th), np.sin(th)], axis=1)
        yield self.origin + self.r_in * e, -e, np.full(n, dt * self.r_in / n)
        e0 = np.array([math.cos(self.t0), math.sin(self.t0)])
        r = self.r_in + (self.r_out - self.r_in) * s
        yield self.origin + r[:, None] * e0, np.tile([e0[1], -e0[0]], (n, 1)), np.full(n, (self.r_out - self.r_in) / n)

    def boundary(self, n: int) -> BoundaryQuadrature:
        parts = list(self._pieces(n))
        nodes = np.concatenate([p[0] for p in parts])
        normals = np.concatenate([p[1] for p in parts])
        tangents = np.stack([-normals[:, 1], normals[:, 0]], axis=1)
        return BoundaryQuadrature(nodes, tangents, normals, np.concatenate([p[2] for p in parts]))

    def boundary_count_for_spacing(self, h: float) -> int:
        longest = max((self.t1 - self.t0) * self.r_out, self.r_out - self.r_in)
        return int(math.ceil(longest / h))

    def contains(self, u, v):
        du = np.asarray(u) - self.origin[0]
        dv = np.asarray(v) - self.origin[1]
        r = np.hypot(du, dv)
        rel = (np.arctan2(dv, du) - self.t0) % (2.0 * math.pi)
        return (r > self.r_in) & (r < self.r_out) & (rel > 0.0) & (rel < self.t1 - self.t0)

    def closest(self, p):
        d = p - self.origin
        theta = math.atan2(d[1], d[0])
        r = float(np.linalg.norm(d))
        candidates = []
        for radius, sign in ((self.r_out, 1.0), (self.r_in, -1.0)):
            if r > 0 and _angle_in(theta, self.t0, self.t1):
                e = d / r
                candidates.append((self.origin + radius * e, sign * e))
        for t, sign in ((self.t1, 1.0), (self.t0, -1.0)):
            e = np.array([math.cos(t), math.sin(t)])
            q = _segment_closest(p, self.origin + self.r_in * e, self.origin + self.r_out * e)
            candidates.append((q, sign * np.array([-e[1], e[0]])))
        return min(candidates, key=lambda c: float(np.linalg.norm(p - c[0])))


def _make_shape(kind: str, params: Mapping[str, float]) -> _Shape:
    if kind == "disk":
        return _Disk(params["u0"], params["v0"], params["R"])
    if kind == "rectangle":
        return _Rectangle(params["a"], params["b"], params["v_min"], params["v_max"])
    return _AnnulusSector(
        params["u0"], params["v0"], params["r_in"], params["r_out"], params["theta0"], params["theta1"]
    )


# --------------------------------------------------------------------------
# profile and domain

@dataclass(frozen=True, eq=False)
class ProfileRegion:
    kind: str
    params: Dict[str, float]
    resolution: int = DEFAULT_RESOLUTION

    @classmethod
    def parse(cls, text: str, resolution: int = DEFAULT_RESOLUTION) -> "ProfileRegion":
        """Parse the `kind=disk,u0=0,v0=2,R=0.5` form."""
        data: Dict[str, Any] = {}
        for item in text.split(","):
            item = item.strip()
            if not item:
                continue
            if "=" not in item:
                raise ArgumentError(f"profile entry {item!r} is not key=value")
            key, value = item.split("=", 1)
            data[key.strip()] = value.strip()
        return cls.from_mapping(data, resolution)

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any], resolution: int = DEFAULT_RESOLUTION) -> "ProfileRegion":
        kind = str(data.get("kind", "")).strip()
        if kind not in PROFILE_PARAMS:
            raise ArgumentError(f"profile kind must be one of {sorted(PROFILE_PARAMS)}, got {kind!r}")
        params: Dict[str, float] = {}
        for key in PROFILE_PARAMS[kind]:
            if key not in data:
                raise ArgumentError(f"profile kind={kind} needs parameter {key!r}")
            try:
                params[key] = float(data[key])
            except (TypeError, ValueError):
                raise ArgumentError(f"profile parameter {key!r} must be a number, got {data[key]!r}") from None
        extra = sorted(set(data) - set(PROFILE_PARAMS[kind]) - {"kind", "resolution"})
        if extra:
            raise ArgumentError(f"unknown profile parameters for kind={kind}: {', '.join(extra)}")
        return cls(kind, params, int(data.get("resolution", resolution)))

    def with_resolution(self, n: int) -> "ProfileRegion":
        return dataclasses.replace(self, resolution=int(n))

    def describe(self) -> str:
        return ",".join([f"kind={self.kind}"] + [f"{k}={self.params[k]:g}" for k in PROFILE_PARAMS[self.kind]])

    def to_dict(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {"kind": self.kind}
        out.update(self.params)
        return out

    def validate(self) -> List[str]:
        errors: List[str] = []
        if self.kind not in PROFILE_PARAMS:
            return [f"unknown profile kind {self.kind!r}"]
        missing = [k for k in PROFILE_PARAMS[self.kind] if k not in self.params]
        if missing:
            return [f"missing profile parameter(s): {', '.join(missing)}"]
        p = self.params
        if self.resolution < 2:
            errors.append(f"resolution must be at least 2, got {self.resolution}")
        if self.kind == "disk" and p["R"] <= 0:
            errors.append(f"disk radius must be positive, got {p['R']}")
        if self.kind == "rectangle" and not (p["a"] < p["b"] and p["v_min"] < p["v_max"]):
            errors.append("rectangle needs a < b and v_min < v_max")
        if self.kind == "annulus-sector":
            if not 0.0 <= p["r_in"] < p["r_out"]:
                errors.append("annulus sector needs 0 <= r_in < r_out")
            if not 0.0 < p["theta1"] - p["theta0"] < 2.0 * math.pi:
                errors.append("annulus sector needs 0 < theta1 - theta0 < 2*pi")
        if errors:
            return errors
        if _make_shape(self.kind, p).v_min() <= 0.0:
            errors.append(
                f"profile {self.describe()} touches or crosses v = 0; domains must lie in R^(m+1)_* "
                "(the closed profile has to stay in the open upper half-plane)"
            )
        return errors


@dataclass(frozen=True, eq=False)
class AxialDomain:
    profile: ProfileRegion
    dim: int
    slice_quad: SliceQuadrature
    boundary_quad: BoundaryQuadrature
    sphere_quad: SphereQuadrature
    shape: _Shape = field(repr=False)

    @property
    def resolution(self) -> int:
        return self.profile.resolution

    @property
    def profile_area(self) -> float:
        return self.shape.area()

    @property
    def volume(self) -> float:
        v = self.slice_quad.nodes[:, 1]
        return sphere_area(self.dim) * float(np.sum(self.slice_quad.weights * v ** (self.dim - 1)))

    @property
    def spacing(self) -> float:
        return math.sqrt(self.profile_area / self.slice_quad.size)

    @property
    def inradius(self) -> float:
        return self.distance_to_boundary(*self.shape.center)

    @property
    def center(self) -> Tuple[float, float]:
        return float(self.shape.center[0]), float(self.shape.center[1])

    def contains(self, u, v):
        return self.shape.contains(u, v)

    def distance_to_boundary(self, u: float, v: float) -> float:
        p = np.array([u, v], dtype=float)
        q, _ = self.shape.closest(p)
        return float(np.linalg.norm(p - q))

    def nearest_boundary_point(self, u: float, v: float) -> Tuple[float, float, float, float]:
        """(u, v, n_u, n_v) of the closest boundary point and its outward normal."""
        q, n = self.shape.closest(np.array([u, v], dtype=float))
        return float(q[0]), float(q[1]), float(n[0]), float(n[1])

    def boundary(self, n: int) -> BoundaryQuadrature:
        return self.shape.boundary(n)

    def boundary_for_distance(self, t: float) -> BoundaryQuadrature:
        """Boundary rule with spacing <= t/4 for targets at distance t."""
        count = self.shape.boundary_count_for_spacing(t / 4.0)
        if count <= self.resolution:
            return self.boundary_quad
        return self.shape.boundary(count)

    def sphere_units(self) -> List[UnitSliceVector]:
        return self.sphere_quad.units()

    # probes ---------------------------------------------------------------

    def _ring(self, radius: float, count: int, offset: float) -> List[Tuple[float, float]]:
        cu, cv = self.center
        phi = 2.0 * math.pi * (np.arange(count) + offset) / count
        return [(float(cu + radius * math.cos(a)), float(cv + radius * math.sin(a))) for a in phi]

    def interior_probes(self, count: int = 8) -> List[Tuple[float, float]]:
        return self._ring(0.5 * self.inradius, count, 0.5)

    def exterior_probes(self, count: int = 8) -> List[Tuple[float, float]]:
        reach = float(np.max(np.linalg.norm(self.shape.boundary(64).nodes - self.shape.center, axis=1)))
        return self._ring(reach + 0.5 * self.inradius, count, 0.5)

    def boundary_probes(self, count: int = 8) -> List[Tuple[float, float]]:
        bq = self.shape.boundary(max(2, count))
        idx = (np.arange(count) * bq.size) // count
        return [(float(bq.nodes[i, 0]), float(bq.nodes[i, 1])) for i in idx]

    def lift(self, points: Sequence[Tuple[float, float]], seed: int = 0) -> List[Paravector]:
        """Place profile points on seeded random slices of R^{m+1}."""
        rng = np.random.default_rng(seed)
        out = []
        for u, v in points:
            unit = UnitSliceVector.random(self.dim, rng)
            out.append(Paravector.from_slice(u, v, unit))
        return out

    # singular refinement ------------------------------------------------------

    def default_patch_radius(self, u: float, v: float) -> float:
        return min(PATCH_CELLS * self.spacing, 0.5 * self.distance_to_boundary(u, v))

    def singular_rule(self, u: float, v: float, radius: Optional[float] = None) -> SliceQuadrature:
        """Slice rule refined around (u, v); the plain rule when (u, v) is outside the profile."""
        if not bool(self.contains(u, v)):
            return self.slice_quad
        if radius is None:
            radius = self.default_patch_radius(u, v)
        return _patched_rule(self, (u, v), radius)


def _patched_rule(domain: AxialDomain, center: Tuple[float, float], radius: float) -> SliceQuadrature:
    c = np.array(center, dtype=float)
    s, ws = _gauss(PATCH_NODES, 0.0, 1.0)
    r = radius * s * s
    wr = ws * 2.0 * radius * s * r
    theta = 2.0 * math.pi * np.arange(PATCH_NODES) / PATCH_NODES
    rr, tt = np.meshgrid(r, theta, indexing="ij")
    p_nodes = c + np.stack([rr * np.cos(tt), rr * np.sin(tt)], axis=-1).reshape(-1, 2)
    p_weights = (wr[:, None] * np.full(PATCH_NODES, 2.0 * math.pi / PATCH_NODES)[None, :]).reshape(-1)
    patch = SingularPatch((float(c[0]), float(c[1])), float(radius), p_nodes, p_weights)

    shape = domain.shape
    panels = shape.ray_panels(c)
    n = domain.resolution
    if panels is None:
        base_nodes, base_weights = domain.slice_quad.nodes, domain.slice_quad.weights
        keep = np.linalg.norm(base_nodes - c, axis=1) >= radius
        outer_w = base_weights[keep]
        scale = (domain.profile_area - float(np.sum(p_weights))) / float(np.sum(outer_w))
        logger.debug("patch at %s: dropped %d regular nodes, rescaled the rest by %.6g",
                     center, int(np.sum(~keep)), scale)
        nodes = np.concatenate([p_nodes, base_nodes[keep]])
        weights = np.concatenate([p_weights, outer_w * scale])
        return SliceQuadrature(nodes, weights, (patch,))

    diam = math.sqrt(domain.profile_area)
    dist = max(domain.distance_to_boundary(*center), 1e-12)
    n_theta = max(n, int(math.ceil(32.0 / math.sqrt(dist / diam))))
    n_r = max(16, n // 2)
    ray_nodes, ray_weights = [], []
    for lo, hi, periodic in panels:
        if periodic:
            th = lo + (hi - lo) * np.arange(n_theta) / n_theta
            wt = np.full(n_theta, (hi - lo) / n_theta)
        else:
            th, wt = _gauss(max(16, n_theta // len(panels)), lo, hi)
        length = shape.ray_length(c, th)
        x, wx = leggauss(n_r)
        for t, w, L in zip(th, wt, length):
            rs = radius + 0.5 * (L - radius) * (x + 1.0)
            ray_nodes.append(c + rs[:, None] * np.array([math.cos(t), math.sin(t)]))
            ray_weights.append(w * 0.5 * (L - radius) * wx * rs)
    nodes = np.concatenate([p_nodes] + ray_nodes)
    weights = np.concatenate([p_weights] + ray_weights)
    logger.debug("patch at %s radius %.3g: %d patch + %d ray nodes", center, radius, len(p_weights), len(weights) - len(p_weights))
    return SliceQuadrature(nodes, weights, (patch,))


def build_domain(profile: ProfileRegion, m: int, sphere_order: int = DEFAULT_SPHERE_ORDER) -> AxialDomain:
    if m < 1:
        raise ArgumentError(f"m must be at least 1, got {m}")
    errors = profile.validate()
    if errors:
        raise DomainError("; ".join(errors))
    shape = _make_shape(profile.kind, profile.params)
    nodes, weights = shape.base_rule(profile.resolution)
    domain = AxialDomain(
        profile=profile,
        dim=m,
        slice_quad=SliceQuadrature(nodes, weights),
        boundary_quad=shape.boundary(profile.resolution),
        sphere_quad=sphere_rule(m, sphere_order),
        shape=shape,
    )
    logger.debug("built %s for m=%d: %d slice nodes, %d boundary nodes, %d sphere nodes",
                 profile.describe(), m, domain.slice_quad.size, domain.boundary_quad.size, domain.sphere_quad.size)
    return domain


def with_singular_patch(domain: AxialDomain, center: Tuple[float, float], radius: float) -> AxialDomain:
    u, v = float(center[0]), float(center[1])
    if radius <= 0.0:
        raise GeometryError(f"patch radius must be positive, got {radius}")
    if not bool(domain.contains(u, v)) or radius > domain.distance_to_boundary(u, v):
        raise GeometryError(f"patch at ({u:g}, {v:g}) with radius {radius:g} escapes {domain.profile.describe()}")
    return dataclasses.replace(domain, slice_quad=_patched_rule(domain, (u, v), radius))


def gauss_residual(domain: AxialDomain, f, g, unit: Optional[UnitSliceVector] = None) -> float:
    """|int (f D)g + f(D g) dV_I - int f n g dsigma_I| on the full slice C_I, D = d_u + I d_v.

    `f` and `g` are slice functions (anything providing `on_slice` and
    `partials_on_slice`).
    """
    alg = algebra(domain.dim)
    unit = unit or UnitSliceVector.basis(domain.dim, 1)
    I = unit.coefficients()
    nodes = domain.slice_quad.full_nodes()
    w = domain.slice_quad.full_weights()
    u, v = nodes[:, 0], nodes[:, 1]
    fv, gv = f.on_slice(u, v, I), g.on_slice(u, v, I)
    fu, fvv = f.partials_on_slice(u, v, I)
    gu, gvv = g.partials_on_slice(u, v, I)
    volume_side = alg.product(fu, gv) + alg.product(alg.product(fvv, I), gv) + alg.product(fv, gu + alg.product(I, gvv))
    lhs = np.tensordot(w, volume_side, axes=(0, 0))

    bq = domain.boundary_quad
    bn = bq.full_nodes()
    normals = bq.full_normals()
    fb, gb = f.on_slice(bn[:, 0], bn[:, 1], I), g.on_slice(bn[:, 0], bn[:, 1], I)
    n = alg.from_complex(normals[:, 0] + 1j * normals[:, 1], I)
    rhs = np.tensordot(bq.full_weights(), alg.product(alg.product(fb, n), gb), axes=(0, 0))
    return float(np.linalg.norm(lhs - rhs))
