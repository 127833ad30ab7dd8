"""Equilateral sets in (H^1, d_H): checks, the three triangle families, pair
normal forms and numerical searches for larger configurations."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy import optimize

from . import core

SQRT3 = math.sqrt(3.0)
THETA_MIN = math.asin(0.25)
THETA_MAX = math.pi - THETA_MIN
SCAN_NODES = 4096
EQ_TOL = 1e-9


def _points(A) -> np.ndarray:
    P = np.atleast_2d(np.asarray(A, dtype=float))
    if P.shape[-1] != 3:
        raise ValueError("equilateral sets live in H^1 (3 coordinates per point)")
    return P


def pairwise_distances(A) -> np.ndarray:
    P = _points(A)
    return core.dist_H(P[:, None, :], P[None, :, :])


def distance_multiset(A, x) -> list[float]:
    """Sorted d_H(x, a) for a in A; x must be one of the points of A."""
    P = _points(A)
    x = np.asarray(x, dtype=float)
    if not np.any(np.all(P == x, axis=1)):
        raise ValueError("x is not a point of A")
    return sorted(core.dist_H(x, P).tolist())


def is_equilateral(A, tol: float = EQ_TOL) -> tuple[bool, float]:
    """(all pairwise distances agree within tol relative to the mean, mean side)."""
    P = _points(A)
    if P.shape[0] < 2:
        raise ValueError("need at least two points")
    D = pairwise_distances(P)
    off = D[np.triu_indices(P.shape[0], 1)]
    if np.any(off == 0):
        raise ValueError("duplicate points")
    side = float(off.mean())
    return bool(np.max(np.abs(off - side)) <= tol * side), side


# -- triangle families ---------------------------------------------------------------

def family_i_candidates() -> dict:
    """Both readings of the vertical-pair triangle and their distance multisets."""
    out = {}
    for label, rho in (("3^(1/4)", 3 ** 0.25), ("(3/4)^(1/4)", 0.75 ** 0.25)):
        A = np.array([[0, 0, 1], [0, 0, -1], [rho, 0, 0]], dtype=float)
        ok, side = is_equilateral(A)
        out[label] = {"points": A.tolist(), "multisets": [distance_multiset(A, a) for a in A],
                      "equilateral": ok, "side": side}
    return out


def family_ii_radius(theta: float) -> float:
    if not THETA_MIN - 1e-15 <= theta <= THETA_MAX + 1e-15:
        raise ValueError(f"theta={theta} outside [arcsin(1/4), pi - arcsin(1/4)]")
    s = math.sin(theta)
    return math.sqrt(max(2 * s * math.sqrt(5 + s * s) - 2 * s * s - 1, 0.0))


def family_ii_third_point(theta: float) -> np.ndarray:
    """(r cos theta, r sin theta, t) completing {(1,0,0), (-1,0,0)} with side 2."""
    r = family_ii_radius(theta)
    t = (r * r + 1) * math.cos(theta) / math.sin(theta)
    return np.array([r * math.cos(theta), r * math.sin(theta), t])


def family_ii_triangle(theta: float) -> np.ndarray:
    return np.vstack([[1.0, 0, 0], [-1.0, 0, 0], family_ii_third_point(theta)])


@dataclass(frozen=True)
class TriangleFamilyIII:
    x0: float
    theta: float
    r: float
    t: float
    residual: float

    @property
    def side(self) -> float:
        return (9 + 12 * self.x0 ** 2) ** 0.25

    def points(self) -> np.ndarray:
        h = SQRT3 / 2
        return np.array([[-self.x0, h, 0.0], [-self.x0, -h, 0.0],
                         [self.r * math.cos(self.theta), self.r * math.sin(self.theta), self.t]])

    def to_json(self) -> dict:
        return {"x0": self.x0, "theta": self.theta, "r": self.r, "t": self.t,
                "residual": self.residual, "side": self.side, "points": self.points().tolist()}


def xy_residual(x0: float, r: float, theta: float) -> float:
    """LHS - RHS of the implicit relation between r and theta."""
    c = math.cos(theta)
    mod2 = (x0 + r * c) ** 2 + (r * math.sin(theta)) ** 2
    return 3 * (3 + 4 * x0 * x0 - r * r) * c * c - (0.75 + mod2) ** 2


def family_iii_t(x0: float, r: float, theta: float) -> float:
    return -math.tan(theta) * (r * r + x0 * x0 + 0.75) + 0.0


def family_iii_solve(x0: float, theta: float, nodes: int = SCAN_NODES,
                     verify_tol: float = 1e-8) -> list[TriangleFamilyIII]:
    """All roots r in (0, sqrt(3 + 4 x0^2)] found by a sign-change scan and bisection.

    Past the upper end the left side is negative and the right side positive, so
    nothing is missed there. Exact zeros on the grid count as roots.
    """
    if not x0 > 0:
        raise ValueError("x0 must be positive")
    if abs(math.cos(theta)) < 1e-12:
        raise ValueError("cos(theta) must be nonzero")
    grid = np.linspace(0.0, math.sqrt(3 + 4 * x0 * x0), nodes + 1)[1:]
    vals = np.array([xy_residual(x0, r, theta) for r in grid])
    roots = [float(r) for r, v in zip(grid, vals) if v == 0.0]
    for i in np.nonzero(vals[:-1] * vals[1:] < 0)[0]:
        roots.append(optimize.brentq(lambda r: xy_residual(x0, r, theta), grid[i], grid[i + 1],
                                     xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200))
    out = []
    for r in sorted(roots):
        tri = TriangleFamilyIII(float(x0), float(theta), r, family_iii_t(x0, r, theta),
                                xy_residual(x0, r, theta))
        if is_equilateral(tri.points(), verify_tol)[0]:
            out.append(tri)
    return out


def sweep_family_ii(thetas: Iterable[float]) -> list[dict]:
    rows = []
    for th in thetas:
        A = family_ii_triangle(th)
        D4 = pairwise_distances(A)[np.triu_indices(3, 1)] ** 4
        rows.append({"theta": th, "r": family_ii_radius(th), "t": float(A[2, 2]),
                     "residual": float(np.max(np.abs(D4 - 16.0)))})
    return rows


def sweep_family_iii(x0: float, thetas: Iterable[float]) -> list[dict]:
    rows = []
    for th in thetas:
        for tri in family_iii_solve(x0, th):
            rows.append({"theta": th, "r": tri.r, "t": tri.t, "residual": tri.residual})
    return rows


def rows_to_csv(rows: Sequence[dict], columns=("theta", "r", "t", "residual")) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow({k: repr(float(row[k])) for k in columns})
    return buf.getvalue()


# -- pair normal forms ---------------------------------------------------------------

@dataclass(frozen=True)
class PairNormalForm:
    similarity: core.Similarity
    kind: str
    x0: float | None
    canonical: np.ndarray

    @property
    def tag(self) -> str:
        return f"generic({self.x0!r})" if self.kind == "generic" else self.kind


def _rot(phi: float) -> core.Similarity:
    return core.Similarity(np.zeros(3), core.rotation_2d(phi))


def normalize_pair(x, y, tol: float = 1e-12) -> PairNormalForm:
    """A similarity taking {x, y} to one of the three canonical pairs, x first.

    vertical:   x -> (0,0,-1), y -> (0,0,1)
    horizontal: x -> (-1,0,0), y -> (1,0,0)
    generic:    x -> (-x0, sqrt3/2, 0), y -> (-x0, -sqrt3/2, 0) with x0 > 0
    """
    x, y = _points(x)[0], _points(y)[0]
    d = core.multiply(core.inverse(x), y)
    h = math.hypot(d[0], d[1])
    scale = float(core.koranyi_norm(d))
    if scale == 0:
        raise ValueError("x and y coincide")
    # roundoff in d grows with the inputs, not with the size of d
    ref_h = scale + math.hypot(*x[:2]) + math.hypot(*y[:2])
    ref_t = scale * scale + abs(x[2]) + abs(y[2]) + 2 * math.hypot(*x[:2]) * math.hypot(*y[:2])
    to_e = core.Similarity.translate(core.inverse(x))
    if h <= tol * ref_h:
        lam = math.sqrt(2 / abs(d[2]))
        sign = 1.0 if d[2] > 0 else -1.0
        S = core.Similarity.translate([0, 0, -sign]).compose(
            core.Similarity.dilation(lam, 1)).compose(to_e)
        if sign < 0:
            # flip so that y lands on (0,0,1)
            S = core.Similarity(np.zeros(3), core.rotation_2d(0.0), reflect=True).compose(S)
        return PairNormalForm(S, "vertical", None, np.array([[0, 0, -1.0], [0, 0, 1.0]]))
    if abs(d[2]) <= tol * ref_t:
        S = core.Similarity.translate([-1.0, 0, 0]).compose(
            core.Similarity.dilation(2 / h, 1)).compose(
            _rot(-math.atan2(d[1], d[0]))).compose(to_e)
        return PairNormalForm(S, "horizontal", None, np.array([[-1.0, 0, 0], [1.0, 0, 0]]))
    S = to_e
    w = d.copy()
    if d[2] < 0:
        S = core.Similarity(np.zeros(3), np.eye(2), reflect=True).compose(S)
        w = S(y)
    u = np.array([-SQRT3 / 2 * abs(d[2]) / h ** 2, SQRT3 / 2, 0.0])
    x0 = -u[0]
    S = core.Similarity.translate(u).compose(core.Similarity.dilation(SQRT3 / h, 1)).compose(
        _rot(-math.pi / 2 - math.atan2(w[1], w[0]))).compose(S)
    return PairNormalForm(S, "generic", float(x0), np.array([u, [-x0, -SQRT3 / 2, 0.0]]))


# -- four and more points ------------------------------------------------------------

def standard_triangle() -> np.ndarray:
    """The cube roots of unity in the horizontal plane; side 12^(1/4)."""
    h = SQRT3 / 2
    return np.array([[1.0, 0, 0], [-0.5, h, 0], [-0.5, -h, 0]])


def find_fourth_vertex(tol: float = 1e-14, upper: float = 1e3) -> np.ndarray:
    """w = (0, 0, w3) with d_H(w, vertex) equal to the side of the standard triangle."""
    tri = standard_triangle()
    side = float(core.dist_H(tri[0], tri[1]))

    def g(w3):
        return float(core.dist_H([0.0, 0.0, w3], tri[0])) - side

    g0, g1 = g(0.0), g(upper)
    if not (g0 < 0 < g1):
        raise RuntimeError(f"no sign change for the fourth vertex: g(0)={g0}, g({upper})={g1}")
    w3 = optimize.brentq(g, 0.0, upper, xtol=tol, rtol=4 * np.finfo(float).eps, maxiter=500)
    return np.array([0.0, 0.0, w3])


def four_point_set() -> np.ndarray:
    return np.vstack([standard_triangle(), find_fourth_vertex()])


def normalized_variance(flat: np.ndarray, k: int) -> float:
    P = np.vstack([np.zeros(3), np.asarray(flat).reshape(k - 1, 3)])
    d = pairwise_distances(P)[np.triu_indices(k, 1)]
    m = d.mean()
    if m == 0:
        return float("inf")
    return float(np.var(d / m))


@dataclass
class SearchResult:
    k: int
    points: np.ndarray
    variance: float
    seeds: list[int]
    best_seed: int

    def to_json(self) -> dict:
        return {"k": self.k, "points": self.points.tolist(), "variance": self.variance,
                "seeds": self.seeds, "best_seed": self.best_seed}


def search_equilateral(k: int, seeds: Sequence[int] = tuple(range(8)),
                       iterations: int = 20000) -> SearchResult:
    """Multi-start Powell search minimizing the variance of normalized pairwise d_H.

    The first point is pinned at the identity. Reports the best value found and
    claims nothing about existence.
    """
    if k < 4:
        raise ValueError("search_equilateral needs k >= 4; triangles are covered by the families")
    best = None
    for seed in seeds:
        rng = np.random.default_rng(np.random.SeedSequence(seed))
        x = rng.normal(size=3 * (k - 1))
        for _ in range(3):
            res = optimize.minimize(normalized_variance, x, args=(k,), method="Powell",
                                    options={"maxiter": iterations, "maxfev": iterations * 10,
                                             "xtol": 1e-12, "ftol": 1e-16})
            x = res.x
        val = normalized_variance(x, k)
        if best is None or val < best[0]:
            best = (val, x, seed)
    val, x, seed = best
    pts = np.vstack([np.zeros(3), x.reshape(k - 1, 3)])
    return SearchResult(k, pts, val, list(seeds), seed)
