"""Serializable descriptions of the measures studied on H^n.

Measures are represented up to a positive constant by natural parameter
measures (d theta, dt, Lebesgue on subspaces, area on the light cone), never by
exact spherical Hausdorff normalizations.

JSON layout (``"schema": 1`` on the top-level object)::

    {"kind": "atomic",    "n": 1, "points": [[...], ...], "weights": [...]}
    {"kind": "curve",     "n": 1, "pieces": [{"family": ..., "params": {...},
                                               "lo": a, "hi": b, "weight": w}, ...]}
    {"kind": "surface",   "n": 1, "family": ..., "params": {...}, "weight": w}
    {"kind": "subgroup",  "n": 2, "basis": [[...], ...], "flag": "horizontal"|"vertical"}
    {"kind": "heat-product", "n": 2, "base": {...}}
    {"kind": "transformed",  "n": 1, "inner": {...}, "similarity": {...}, "mass_scale": c}

Curve families: ``circle`` (radius, height; H^1), ``vertical-line`` (base: x'
in R^{2n}), ``horizontal-line`` (point in H^n, direction in R^{2n}),
``horizontal-lift`` (center, radius, z0; H^1, experimental). Curves carry a
constant density ``weight`` per piece with respect to the curve parameter.

Surface families: ``cylinder`` (radius; H^1, parameters theta and t),
``vertical-plane`` (point x', direction in R^{2n}; parameters u and t),
``light-cone`` (k with 4 <= k <= n; the Kowalski-Preiss cone in slots 1..4,
free slots 5..k, measured by cone area times Lebesgue).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, ClassVar

import numpy as np

from . import core

SCHEMA_VERSION = 1
TWO_PI = 2.0 * math.pi

CURVE_FAMILIES = ("circle", "vertical-line", "horizontal-line", "horizontal-lift")
SURFACE_FAMILIES = ("cylinder", "vertical-plane", "light-cone")


class MeasureSpec:
    """Base class of the tagged measure descriptions."""

    kind: ClassVar[str] = ""
    bounded: ClassVar[bool] = False

    @property
    def n(self) -> int:
        raise NotImplementedError

    def _payload(self) -> dict:
        raise NotImplementedError

    def to_json(self, top: bool = True) -> dict:
        d: dict[str, Any] = {"kind": self.kind, "n": self.n}
        if top:
            d = {"schema": SCHEMA_VERSION, **d}
        d.update(self._payload())
        return d


def _clean(params: dict) -> dict:
    out = {}
    for key, val in params.items():
        if isinstance(val, (list, tuple, np.ndarray)):
            out[key] = [float(v) for v in np.asarray(val, dtype=float).ravel()]
        elif isinstance(val, (bool, np.bool_)):
            out[key] = bool(val)
        elif isinstance(val, (int, np.integer)):
            out[key] = int(val)
        else:
            out[key] = float(val)
    return out


@dataclass(frozen=True)
class Atomic(MeasureSpec):
    points: tuple[tuple[float, ...], ...]
    weights: tuple[float, ...] = ()

    kind: ClassVar[str] = "atomic"
    bounded: ClassVar[bool] = True

    def __post_init__(self):
        pts = tuple(core.Point.of(p).coords for p in self.points)
        if not pts:
            raise ValueError("atomic measure needs at least one atom")
        if len({len(p) for p in pts}) != 1:
            raise ValueError("atoms must share one ambient dimension")
        w = tuple(float(v) for v in self.weights) or (1.0,) * len(pts)
        if len(w) != len(pts):
            raise ValueError("one weight per atom required")
        if any(not v > 0 for v in w):
            raise ValueError("atom weights must be positive")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    @property
    def n(self) -> int:
        return (len(self.points[0]) - 1) // 2

    @property
    def array(self) -> np.ndarray:
        return np.array(self.points)

    def _payload(self):
        return {"points": [list(p) for p in self.points], "weights": list(self.weights)}


@dataclass(frozen=True)
class CurvePiece:
    family: str
    params: dict = field(default_factory=dict)
    lo: float = 0.0
    hi: float = TWO_PI
    weight: float = 1.0

    def __post_init__(self):
        if self.family not in CURVE_FAMILIES:
            raise ValueError(f"unknown curve family {self.family!r}")
        if not self.weight >= 0:
            raise ValueError("curve density must be nonnegative")
        if not self.lo < self.hi:
            raise ValueError("curve domain needs lo < hi")
        object.__setattr__(self, "params", _clean(self.params))
        object.__setattr__(self, "lo", float(self.lo))
        object.__setattr__(self, "hi", float(self.hi))
        object.__setattr__(self, "weight", float(self.weight))

    @property
    def n(self) -> int:
        p = self.params
        if self.family == "vertical-line":
            return len(p["base"]) // 2
        if self.family == "horizontal-line":
            return (len(p["point"]) - 1) // 2
        return 1

    @property
    def bounded(self) -> bool:
        return math.isfinite(self.lo) and math.isfinite(self.hi)

    def __call__(self, t) -> np.ndarray:
        """Curve points at parameter values t (any shape)."""
        t = np.asarray(t, dtype=float)
        p = self.params
        if self.family == "circle":
            R, h = p["radius"], p["height"]
            return np.stack([R * np.cos(t), R * np.sin(t), np.full_like(t, h)], axis=-1)
        if self.family == "vertical-line":
            base = np.asarray(p["base"])
            out = np.empty(t.shape + (base.size + 1,))
            out[..., :-1] = base
            out[..., -1] = t
            return out
        if self.family == "horizontal-line":
            q, v = np.asarray(p["point"]), np.asarray(p["direction"])
            step = np.zeros(t.shape + (q.size,))
            step[..., :-1] = t[..., None] * v
            return core.multiply(q, step)
        c1, c2 = p["center"]
        rho, z0 = p["radius"], p["z0"]
        z = z0 + 2 * rho * c2 * (np.cos(t) - 1) - 2 * rho * c1 * np.sin(t) - 2 * rho * rho * t
        return np.stack([c1 + rho * np.cos(t), c2 + rho * np.sin(t), z], axis=-1)

    def to_json(self) -> dict:
        return {"family": self.family, "params": self.params,
                "lo": _num(self.lo), "hi": _num(self.hi), "weight": self.weight}

    @classmethod
    def from_json(cls, d: dict) -> "CurvePiece":
        return cls(d["family"], d.get("params", {}), _denum(d.get("lo", 0.0)),
                   _denum(d.get("hi", TWO_PI)), d.get("weight", 1.0))


def _num(v: float):
    # JSON has no infinities; keep them as strings
    return v if math.isfinite(v) else ("inf" if v > 0 else "-inf")


def _denum(v) -> float:
    return float(v)


@dataclass(frozen=True)
class Curve(MeasureSpec):
    pieces: tuple[CurvePiece, ...]

    kind: ClassVar[str] = "curve"

    def __post_init__(self):
        pieces = tuple(self.pieces)
        if not pieces:
            raise ValueError("curve measure needs at least one piece")
        if len({p.n for p in pieces}) != 1:
            raise ValueError("curve pieces must share one ambient dimension")
        object.__setattr__(self, "pieces", pieces)

    @property
    def n(self) -> int:
        return self.pieces[0].n

    @property
    def is_bounded(self) -> bool:
        return all(p.bounded for p in self.pieces)

    def _payload(self):
        return {"pieces": [p.to_json() for p in self.pieces]}


@dataclass(frozen=True)
class Surface(MeasureSpec):
    family: str
    params: dict = field(default_factory=dict)
    weight: float = 1.0
    ambient_n: int = 1

    kind: ClassVar[str] = "surface"

    def __post_init__(self):
        if self.family not in SURFACE_FAMILIES:
            raise ValueError(f"unknown surface family {self.family!r}")
        if not self.weight >= 0:
            raise ValueError("surface density must be nonnegative")
        object.__setattr__(self, "params", _clean(self.params))
        object.__setattr__(self, "weight", float(self.weight))
        if self.family == "light-cone":
            k = self.params["k"]
            if not 4 <= k <= self.ambient_n:
                raise ValueError("light-cone needs 4 <= k <= n")
        elif self.family == "cylinder" and self.ambient_n != 1:
            raise ValueError("cylinder family lives in H^1")

    @property
    def n(self) -> int:
        return self.ambient_n

    def _payload(self):
        return {"family": self.family, "params": self.params, "weight": self.weight}


@dataclass(frozen=True)
class SubgroupHaar(MeasureSpec):
    """Lebesgue measure on a homogeneous subgroup V x 0 or W x R."""

    basis: tuple[tuple[float, ...], ...]
    flag: str
    ambient_n: int

    kind: ClassVar[str] = "subgroup"

    def __post_init__(self):
        if self.flag not in ("horizontal", "vertical"):
            raise ValueError("flag must be 'horizontal' or 'vertical'")
        basis = tuple(tuple(float(v) for v in b) for b in self.basis)
        m = 2 * self.ambient_n
        if any(len(b) != m for b in basis):
            raise ValueError(f"basis vectors must have length {m}")
        if basis and np.linalg.matrix_rank(np.array(basis)) < len(basis):
            raise ValueError("basis vectors must be independent")
        if self.flag == "horizontal":
            if not basis:
                raise ValueError("horizontal subgroup needs a nonempty basis")
            B = np.array(basis)
            pairing = B @ core.symplectic_matrix(self.ambient_n) @ B.T
            scale = max(1.0, float(np.max(np.abs(B))) ** 2)
            if np.max(np.abs(pairing)) > 1e-10 * scale:
                raise ValueError("horizontal subgroup basis must span an isotropic subspace")
        object.__setattr__(self, "basis", basis)

    @property
    def n(self) -> int:
        return self.ambient_n

    @property
    def dim_subspace(self) -> int:
        return len(self.basis)

    @property
    def topological_dim(self) -> int:
        return self.dim_subspace + (self.flag == "vertical")

    @property
    def sub_riemannian_dim(self) -> int:
        return self.topological_dim + (self.flag == "vertical")

    @property
    def orthonormal(self) -> np.ndarray:
        """Rows form an orthonormal basis of the horizontal subspace."""
        if not self.basis:
            return np.zeros((0, 2 * self.ambient_n))
        q, _ = np.linalg.qr(np.array(self.basis).T)
        return q.T

    def _payload(self):
        return {"basis": [list(b) for b in self.basis], "flag": self.flag}


@dataclass(frozen=True)
class HeatProduct(MeasureSpec):
    """base (x) Lebesgue in x_{2n+1}; base must live in slots 1..n at height 0.

    On that set d_H is the heat metric of R^{n+1} through ``core.embed_W``.
    """

    base: MeasureSpec

    kind: ClassVar[str] = "heat-product"

    def __post_init__(self):
        if isinstance(self.base, (HeatProduct, Transformed)):
            raise ValueError("heat-product base must be an untransformed flat measure")
        pts = sample_support(self.base, 64, seed=0)
        n = self.base.n
        if np.max(np.abs(pts[:, n:])) > 1e-10 * max(1.0, float(np.max(np.abs(pts)))):
            raise ValueError("heat-product base must be supported in slots 1..n at height 0")

    @property
    def n(self) -> int:
        return self.base.n

    def _payload(self):
        return {"base": self.base.to_json(top=False)}


@dataclass(frozen=True)
class Transformed(MeasureSpec):
    """mass_scale * S_# inner."""

    inner: MeasureSpec
    similarity: core.Similarity
    mass_scale: float = 1.0

    kind: ClassVar[str] = "transformed"

    def __post_init__(self):
        if not self.mass_scale > 0:
            raise ValueError("mass_scale must be positive")
        if self.similarity.n != self.inner.n:
            raise ValueError("similarity and measure live in different groups")
        object.__setattr__(self, "mass_scale", float(self.mass_scale))

    @property
    def n(self) -> int:
        return self.inner.n

    def _payload(self):
        return {"inner": self.inner.to_json(top=False),
                "similarity": self.similarity.to_json(),
                "mass_scale": self.mass_scale}


def is_bounded(spec: MeasureSpec) -> bool:
    if isinstance(spec, Atomic):
        return True
    if isinstance(spec, Curve):
        return spec.is_bounded
    if isinstance(spec, Transformed):
        return is_bounded(spec.inner)
    return False


# -- constructors ----------------------------------------------------------------

def polygon_vertices(m: int, phase: float = 0.0, height: float = 0.0,
                     radius: float = 1.0) -> np.ndarray:
    if m < 1:
        raise ValueError("polygon needs m >= 1")
    th = phase + TWO_PI * np.arange(m) / m
    cs = np.stack([np.cos(th), np.sin(th)], axis=-1)
    # exact zeros at quarter turns keep polynomial moments exact
    cs[np.abs(cs) < 4 * np.finfo(float).eps] = 0.0
    return np.column_stack([radius * cs, np.full(m, float(height))])


def make_polygon_counting(m: int, phase: float = 0.0, height: float = 0.0,
                          second: tuple[int, float, float] | None = None) -> Atomic:
    """Counting measure on a regular m-gon on S^1 x {height}, optionally plus a second one."""
    pts = polygon_vertices(m, phase, height)
    if second is not None:
        m2, phase2, height2 = second
        pts = np.vstack([pts, polygon_vertices(m2, phase2, height2)])
    return Atomic(tuple(map(tuple, pts)))


def make_circle_measure(height: float = 0.0, radius: float = 1.0) -> Curve:
    return Curve((CurvePiece("circle", {"radius": radius, "height": height}),))


def make_circle_pair(a: float, b: float) -> Curve:
    if not a < b:
        raise ValueError("circle pair needs a < b")
    return Curve((CurvePiece("circle", {"radius": 1.0, "height": a}),
                  CurvePiece("circle", {"radius": 1.0, "height": b})))


def make_vertical_lines_through_polygon(m: int, phase: float = 0.0) -> Curve:
    verts = polygon_vertices(m, phase)
    return Curve(tuple(
        CurvePiece("vertical-line", {"base": v[:2]}, -math.inf, math.inf) for v in verts
    ))


def make_vertical_line(base) -> Curve:
    return Curve((CurvePiece("vertical-line", {"base": base}, -math.inf, math.inf),))


def make_horizontal_line(point, direction) -> Curve:
    return Curve((CurvePiece("horizontal-line", {"point": point, "direction": direction},
                             -math.inf, math.inf),))


def make_horizontal_lift(center=(0.0, 0.0), radius: float = 1.0, z0: float = 0.0,
                         lo: float = 0.0, hi: float = TWO_PI) -> Curve:
    """Horizontal lift of a planar circle (experimental; profiling only)."""
    return Curve((CurvePiece("horizontal-lift",
                             {"center": center, "radius": radius, "z0": z0}, lo, hi),))


def make_subgroup_haar(basis, flag: str, n: int | None = None) -> SubgroupHaar:
    basis = [list(map(float, b)) for b in basis]
    if n is None:
        if not basis:
            raise ValueError("pass n for an empty basis")
        n = len(basis[0]) // 2
    return SubgroupHaar(tuple(map(tuple, basis)), flag, n)


def make_vertical_axis(n: int = 1) -> SubgroupHaar:
    return make_subgroup_haar([], "vertical", n)


def make_cylinder(radius: float = 1.0) -> Surface:
    return Surface("cylinder", {"radius": radius})


def make_vertical_plane(point, direction) -> Surface:
    point = np.asarray(point, dtype=float)
    return Surface("vertical-plane", {"point": point, "direction": direction},
                   ambient_n=point.size // 2)


def make_light_cone(n: int = 4, k: int = 4) -> Surface:
    return Surface("light-cone", {"k": k}, ambient_n=n)


def transform_measure(spec: MeasureSpec, S: core.Similarity,
                      mass_scale: float = 1.0) -> Transformed:
    """(result)(A) = mass_scale * spec(S^{-1}(A))."""
    return Transformed(spec, S, mass_scale)


# -- JSON -----------------------------------------------------------------------

def spec_from_json(d: dict) -> MeasureSpec:
    if "schema" in d and d["schema"] != SCHEMA_VERSION:
        raise ValueError(f"unsupported schema version {d['schema']}")
    try:
        kind = d["kind"]
        if kind == "atomic":
            return Atomic(tuple(map(tuple, d["points"])), tuple(d.get("weights", ())))
        if kind == "curve":
            return Curve(tuple(CurvePiece.from_json(p) for p in d["pieces"]))
        if kind == "surface":
            return Surface(d["family"], d.get("params", {}), d.get("weight", 1.0), int(d["n"]))
        if kind == "subgroup":
            return SubgroupHaar(tuple(map(tuple, d["basis"])), d["flag"], int(d["n"]))
        if kind == "heat-product":
            return HeatProduct(spec_from_json(d["base"]))
        if kind == "transformed":
            return Transformed(spec_from_json(d["inner"]),
                               core.Similarity.from_json(d["similarity"]),
                               d.get("mass_scale", 1.0))
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed measure spec: {exc!r}") from exc
    raise ValueError(f"unknown measure kind {d.get('kind')!r}")


# -- support sampling -------------------------------------------------------------

def _rng(seed) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed))


def _unit_sphere(rng, count: int, dim: int) -> np.ndarray:
    g = rng.standard_normal((count, dim))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def light_cone_embed(omega, rho, sign, free, n: int) -> np.ndarray:
    """Points (rho*omega, sign*rho, free, 0..., 0) of H^n."""
    rho = np.asarray(rho, dtype=float)
    out = np.zeros(rho.shape + (2 * n + 1,))
    out[..., :3] = omega * rho[..., None]
    out[..., 3] = sign * rho
    free = np.asarray(free, dtype=float)
    if free.shape[-1]:
        out[..., 4:4 + free.shape[-1]] = free
    return out


def sample_support(spec: MeasureSpec, count: int, seed: int = 0,
                   window: float = 1.0) -> np.ndarray:
    """Deterministic points of supp(spec); unbounded parameters use [-window, window].

    Atomic measures enumerate their atoms (cyclically if count exceeds them).
    """
    rng = _rng(seed)
    if isinstance(spec, Atomic):
        pts = spec.array
        return pts[np.arange(count) % len(pts)]
    if isinstance(spec, Curve):
        idx = rng.integers(len(spec.pieces), size=count)
        out = np.empty((count, 2 * spec.n + 1))
        u = rng.random(count)
        for i, piece in enumerate(spec.pieces):
            sel = idx == i
            lo = piece.lo if math.isfinite(piece.lo) else -window
            hi = piece.hi if math.isfinite(piece.hi) else window
            out[sel] = piece(lo + (hi - lo) * u[sel])
        return out
    if isinstance(spec, Surface):
        p = spec.params
        if spec.family == "cylinder":
            th = TWO_PI * rng.random(count)
            t = window * (2 * rng.random(count) - 1)
            R = p["radius"]
            return np.stack([R * np.cos(th), R * np.sin(th), t], axis=-1)
        if spec.family == "vertical-plane":
            point, v = np.asarray(p["point"]), np.asarray(p["direction"])
            u = window * (2 * rng.random(count) - 1)
            t = window * (2 * rng.random(count) - 1)
            out = np.empty((count, point.size + 1))
            out[:, :-1] = point + u[:, None] * v
            out[:, -1] = t
            return out
        k = int(p["k"])
        omega = _unit_sphere(rng, count, 3)
        rho = window * rng.random(count)
        sign = np.where(rng.random(count) < 0.5, -1.0, 1.0)
        free = window * (2 * rng.random((count, k - 4)) - 1)
        return light_cone_embed(omega, rho, sign, free, spec.n)
    if isinstance(spec, SubgroupHaar):
        B = spec.orthonormal
        coef = window * (2 * rng.random((count, B.shape[0])) - 1)
        out = np.zeros((count, 2 * spec.n + 1))
        out[:, :-1] = coef @ B
        if spec.flag == "vertical":
            out[:, -1] = window * window * (2 * rng.random(count) - 1)
        return out
    if isinstance(spec, HeatProduct):
        out = sample_support(spec.base, count, seed, window)
        out[:, -1] = window * window * (2 * _rng([seed, 1]).random(count) - 1)
        return out
    if isinstance(spec, Transformed):
        return spec.similarity(sample_support(spec.inner, count, seed, window))
    raise TypeError(f"no sampler for {type(spec).__name__}")


def _circle_residual(p, R, h):
    return np.abs(np.hypot(p[..., 0], p[..., 1]) - R) + np.abs(p[..., 2] - h)


def _curve_piece_residual(piece: CurvePiece, p: np.ndarray) -> np.ndarray:
    prm = piece.params
    if piece.family == "circle":
        return _circle_residual(p, prm["radius"], prm["height"])
    if piece.family == "vertical-line":
        return np.linalg.norm(p[..., :-1] - np.asarray(prm["base"]), axis=-1)
    if piece.family == "horizontal-line":
        q, v = np.asarray(prm["point"]), np.asarray(prm["direction"])
        z = core.multiply(core.inverse(q), p)
        t = z[..., :-1] @ v / (v @ v)
        return (np.linalg.norm(z[..., :-1] - t[..., None] * v, axis=-1) + np.abs(z[..., -1]))
    c = np.asarray(prm["center"])
    th = np.arctan2(p[..., 1] - c[1], p[..., 0] - c[0])
    # choose the branch of theta inside the domain closest to the point's height
    best = np.full(p.shape[:-1], np.inf)
    for shift in range(int(np.floor(piece.lo / TWO_PI)) - 1, int(np.ceil(piece.hi / TWO_PI)) + 2):
        t = np.clip(th + shift * TWO_PI, piece.lo, piece.hi)
        best = np.minimum(best, np.linalg.norm(piece(t) - p, axis=-1))
    return best


def support_residual(spec: MeasureSpec, p) -> np.ndarray:
    """Euclidean-scale distance from p to supp(spec); 0 on the support."""
    p = np.asarray(p, dtype=float)
    if isinstance(spec, Atomic):
        return np.min(np.linalg.norm(p[..., None, :] - spec.array, axis=-1), axis=-1)
    if isinstance(spec, Curve):
        return np.min(np.stack([_curve_piece_residual(pc, p) for pc in spec.pieces]), axis=0)
    if isinstance(spec, Surface):
        prm = spec.params
        if spec.family == "cylinder":
            return np.abs(np.hypot(p[..., 0], p[..., 1]) - prm["radius"])
        if spec.family == "vertical-plane":
            point, v = np.asarray(prm["point"]), np.asarray(prm["direction"])
            d = p[..., :-1] - point
            u = d @ v / (v @ v)
            return np.linalg.norm(d - u[..., None] * v, axis=-1)
        k = int(prm["k"])
        x = p[..., :4]
        cone = np.abs(np.linalg.norm(x[..., :3], axis=-1) - np.abs(x[..., 3]))
        rest = np.linalg.norm(p[..., k:], axis=-1)
        return cone + rest
    if isinstance(spec, SubgroupHaar):
        B = spec.orthonormal
        xp = p[..., :-1]
        off = np.linalg.norm(xp - (xp @ B.T) @ B, axis=-1)
        if spec.flag == "horizontal":
            off = off + np.abs(p[..., -1])
        return off
    if isinstance(spec, HeatProduct):
        q = p.copy()
        q[..., -1] = 0.0
        return support_residual(spec.base, q)
    if isinstance(spec, Transformed):
        return support_residual(spec.inner, spec.similarity.inverse()(p))
    raise TypeError(f"no residual for {type(spec).__name__}")
