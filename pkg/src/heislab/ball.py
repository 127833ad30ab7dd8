"""Evaluation of mu(B(x, r)) for every measure kind, with error control.

Closed balls throughout. Atomic measures are counted exactly. Curves use root
isolation of t -> d_H(x, gamma(t)) - r on a scan grid. Vertical ruled surfaces,
subgroups and heat products reduce by Fubini to one-dimensional integrals of
known closed-form fibre lengths. Everything else falls back to stratified,
seed-deterministic Monte Carlo.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, optimize, special

from . import core
from .measures import (TWO_PI, Atomic, Curve, CurvePiece, HeatProduct, MeasureSpec,
                       Surface, SubgroupHaar, Transformed, light_cone_embed)

SCAN_NODES = 2048
MC_BUDGET = 10**6
MC_STRATA = 64
DEFAULT_TOL = 1e-6

METHODS = ("exact-count", "quadrature-1d", "quadrature-2d", "monte-carlo")


@dataclass(frozen=True)
class BallEstimate:
    value: float
    abs_error: float
    method: str
    samples_or_nodes: int
    converged: bool = True

    def __post_init__(self):
        object.__setattr__(self, "value", float(self.value))
        object.__setattr__(self, "abs_error", float(self.abs_error))
        object.__setattr__(self, "samples_or_nodes", int(self.samples_or_nodes))
        object.__setattr__(self, "converged", bool(self.converged))
        if self.abs_error < 0:
            raise ValueError("abs_error must be nonnegative")
        if self.method == "exact-count" and self.abs_error != 0:
            raise ValueError("exact counts carry no error")

    def scaled(self, c: float) -> "BallEstimate":
        return BallEstimate(c * self.value, c * self.abs_error, self.method,
                            self.samples_or_nodes, self.converged)

    def to_json(self) -> dict:
        return asdict(self)


# -- root isolation -------------------------------------------------------------

def sublevel_length(g: Callable[[np.ndarray], np.ndarray], a: float, b: float,
                    nodes: int = SCAN_NODES) -> tuple[float, int, float]:
    """Lebesgue measure of {t in [a, b] : g(t) <= 0} for continuous g.

    Sign changes on the scan grid are bracketed and solved to ~1e-12 of the
    window; discrete local extrema are probed for dips the grid stepped over.
    Returns (length, number of roots, per-root abscissa tolerance).
    """
    if not b > a:
        return 0.0, 0, 0.0
    xtol = max(1e-12 * (b - a), 4 * np.finfo(float).eps * max(abs(a), abs(b)))
    t = np.linspace(a, b, nodes + 1)
    v = np.asarray(g(t), dtype=float)
    f = lambda s: float(g(np.array([s]))[0])
    roots: list[float] = []
    inside = v <= 0
    for i in np.flatnonzero(inside[:-1] != inside[1:]):
        lo, hi = t[i], t[i + 1]
        if v[i] == 0.0:
            roots.append(lo)
            continue
        roots.append(optimize.brentq(f, lo, hi, xtol=xtol))
    padded = np.concatenate([[np.inf], v, [np.inf]])
    dips = (v > 0) & (v <= padded[:-2]) & (v <= padded[2:])
    padded = np.concatenate([[-np.inf], v, [-np.inf]])
    bumps = (v <= 0) & (v >= padded[:-2]) & (v >= padded[2:])
    for i in np.flatnonzero(dips | bumps):
        lo, hi = t[max(i - 1, 0)], t[min(i + 1, nodes)]
        sgn = 1.0 if dips[i] else -1.0
        res = optimize.minimize_scalar(lambda s: sgn * f(s), bounds=(lo, hi),
                                       method="bounded", options={"xatol": xtol})
        crossed = res.fun <= 0 if dips[i] else res.fun < 0
        if crossed:
            m = res.x
            for p, q in ((lo, m), (m, hi)):
                if (f(p) <= 0) != (f(q) <= 0):
                    roots.append(optimize.brentq(f, p, q, xtol=xtol))
    pts = np.unique(np.concatenate([[a], np.clip(roots, a, b), [b]]))
    mids = 0.5 * (pts[:-1] + pts[1:])
    mask = np.asarray(g(mids)) <= 0 if mids.size else np.array([], bool)
    length = float(np.sum(np.diff(pts)[mask]))
    return length, len(roots), xtol


# -- parameter windows ------------------------------------------------------------

def arc_windows(center: float, half: float, lo: float, hi: float) -> list[tuple[float, float]]:
    """Pieces of the arc [center-half, center+half] (mod 2 pi) inside [lo, hi]."""
    if half <= 0 and half != 0:
        return []
    if half >= math.pi:
        return [(lo, hi)]
    out = []
    kmin = math.floor((lo - center - half) / TWO_PI)
    kmax = math.ceil((hi - center + half) / TWO_PI)
    for k in range(kmin, kmax + 1):
        a = max(lo, center - half + k * TWO_PI)
        b = min(hi, center + half + k * TWO_PI)
        if b > a:
            out.append((a, b))
    return out


def circle_arc(R: float, cxy, r: float) -> tuple[float, float] | None:
    """Arc (center angle, half width) of the circle |z| = R lying within r of cxy."""
    d = math.hypot(cxy[0], cxy[1])
    if d == 0.0:
        return (0.0, math.pi) if R <= r else None
    c = (R * R + d * d - r * r) / (2 * R * d)
    if c > 1:
        return None
    phi = math.atan2(cxy[1], cxy[0])
    return phi, (math.pi if c <= -1 else math.acos(c))


def line_window(p, v, x, r: float) -> tuple[float, float] | None:
    """{u : |p + u v - x| <= r} for vectors in R^m."""
    p, v, x = (np.asarray(a, dtype=float) for a in (p, v, x))
    d = p - x
    vv = float(v @ v)
    u0 = -float(d @ v) / vv
    h2 = float(d @ d) - u0 * u0 * vv
    if h2 > r * r:
        return None
    half = math.sqrt(max(r * r - h2, 0.0) / vv)
    return u0 - half, u0 + half


def curve_windows(piece: CurvePiece, x: np.ndarray, r: float) -> list[tuple[float, float]]:
    """Parameter windows guaranteed to contain gamma^{-1}(B(x, r))."""
    prm = piece.params
    xp = x[:-1]
    if piece.family in ("circle", "horizontal-lift"):
        c = np.asarray(prm.get("center", (0.0, 0.0)))
        arc = circle_arc(prm["radius"], xp - c, r)
        if arc is None:
            return []
        return arc_windows(arc[0], arc[1], piece.lo, piece.hi)
    if piece.family == "vertical-line":
        base = np.asarray(prm["base"])
        if np.linalg.norm(base - xp) > r:
            return []
        shift = x[-1] + float(core.symplectic_form(xp, base))
        return [(max(piece.lo, shift - r * r), min(piece.hi, shift + r * r))]
    q, v = np.asarray(prm["point"]), np.asarray(prm["direction"])
    w = line_window(q[:-1], v, xp, r)
    if w is None:
        return []
    a, b = max(piece.lo, w[0]), min(piece.hi, w[1])
    return [(a, b)] if b > a else []


# -- per-kind evaluators -------------------------------------------------------------

def _atomic_ball(spec: Atomic, x, r) -> BallEstimate:
    d = core.dist_H(x, spec.array)
    return BallEstimate(float(np.sum(np.asarray(spec.weights)[d <= r])), 0.0,
                        "exact-count", len(spec.weights))


def _curve_ball(spec: Curve, x, r, tol) -> BallEstimate:
    total, err, nodes = 0.0, 0.0, 0
    for piece in spec.pieces:
        if piece.weight == 0:
            continue
        g = lambda t, piece=piece: core.dist_H(x, piece(t)) - r
        for a, b in curve_windows(piece, x, r):
            length, nroots, xtol = sublevel_length(g, a, b)
            total += piece.weight * length
            err += piece.weight * nroots * xtol
            nodes += SCAN_NODES + 1
    return BallEstimate(total, err, "quadrature-1d", nodes, err <= tol)


def _fibre(r: float, rho) -> np.ndarray:
    """Length 2 sqrt(r^4 - rho^4) of the vertical fibre of B(x, r) at horizontal offset rho."""
    rho = np.asarray(rho, dtype=float)
    return 2.0 * np.sqrt(np.maximum(r ** 4 - rho ** 4, 0.0))


def _smooth_endpoints(f, a, b, epsabs, epsrel=1e-11):
    """Integrate f over [a, b] after u = m - h cos(phi), removing sqrt endpoint behaviour."""
    m, h = 0.5 * (a + b), 0.5 * (b - a)
    val, err = integrate.quad(lambda phi: f(m - h * math.cos(phi)) * h * math.sin(phi),
                              0.0, math.pi, epsabs=epsabs, epsrel=epsrel, limit=200)
    return val, err


def _vertical_surface_ball(spec: Surface, x, r, tol) -> BallEstimate:
    prm, xp = spec.params, x[:-1]
    if spec.family == "cylinder":
        R = prm["radius"]
        arc = circle_arc(R, xp, r)
        windows = arc_windows(arc[0], arc[1], 0.0, TWO_PI) if arc else []
        c = lambda u: R * np.array([math.cos(u), math.sin(u)])
    else:
        point, v = np.asarray(prm["point"]), np.asarray(prm["direction"])
        w = line_window(point, v, xp, r)
        windows = [w] if w else []
        c = lambda u: point + u * v
    total, err = 0.0, 0.0
    for a, b in windows:
        f = lambda u: float(_fibre(r, np.linalg.norm(c(u) - xp)))
        val, e = _smooth_endpoints(f, a, b, epsabs=1e-3 * tol)
        total += val
        err += e
    w = spec.weight
    return BallEstimate(w * total, w * err, "quadrature-1d", len(windows), w * err <= tol)


def _convex_sublevel(coef: Sequence[float], r: float) -> tuple[float, float] | None:
    """Interval where the convex quartic a^4 + c2 a^2 + c1 a + c0 is <= 0 (|a| <= r)."""
    c2, c1, c0 = coef
    f = lambda a: ((a * a + c2) * a + c1) * a + c0
    df = lambda a: (4 * a * a + 2 * c2) * a + c1
    span = r + 1.0
    amin = optimize.brentq(df, -span - abs(c1), span + abs(c1), xtol=1e-15)
    if f(amin) > 0:
        return None
    lo = optimize.brentq(f, amin - span, amin, xtol=1e-15) if f(amin - span) > 0 else amin - span
    hi = optimize.brentq(f, amin, amin + span, xtol=1e-15) if f(amin + span) > 0 else amin + span
    return lo, hi


def _unit_ball_volume(k: int) -> float:
    return math.pi ** (k / 2) / math.gamma(k / 2 + 1)


def _sphere_area(k: int) -> float:
    """Area of the unit sphere S^{k-1} in R^k."""
    return 2 * math.pi ** (k / 2) / math.gamma(k / 2)


def _subgroup_ball(spec: SubgroupHaar, x, r, tol) -> BallEstimate:
    B = spec.orthonormal
    k = B.shape[0]
    xp, xt = x[:-1], x[-1]
    proj = B.T @ (B @ xp)
    h2 = max(float(xp @ xp - proj @ proj), 0.0)
    if spec.flag == "vertical":
        if h2 > r * r:
            return BallEstimate(0.0, 0.0, "quadrature-1d", 0)
        if k == 0:
            return BallEstimate(float(_fibre(r, math.sqrt(h2))), 0.0, "quadrature-1d", 1)
        rho1 = math.sqrt(r * r - h2)
        f = lambda p: p ** (k - 1) * float(_fibre(r, math.sqrt(p * p + h2)))
        val, err = _smooth_endpoints(f, 0.0, rho1, epsabs=1e-3 * tol)
        c = _sphere_area(k)
        return BallEstimate(c * val, c * err, "quadrature-1d", 1, c * err <= tol)
    # horizontal: (|u|^2 + h^2)^2 + (beta + a.u)^2 <= r^4 over u in R^k
    J = core.symplectic_matrix(spec.n)
    avec = B @ (J.T @ xp)
    beta = xt + float(xp @ J @ proj)
    anorm = float(np.linalg.norm(avec))
    coef = (2 * h2 + anorm * anorm, 2 * anorm * beta, h2 * h2 + beta * beta - r ** 4)
    iv = _convex_sublevel(coef, r)
    if iv is None:
        return BallEstimate(0.0, 0.0, "quadrature-1d", 0)
    lo, hi = iv
    if k == 1:
        return BallEstimate(hi - lo, 2e-15 * max(1.0, r), "quadrature-1d", 2)

    def radial(a):
        q = math.sqrt(max(r ** 4 - (beta + anorm * a) ** 2, 0.0)) - h2 - a * a
        return _unit_ball_volume(k - 1) * max(q, 0.0) ** ((k - 1) / 2)

    val, err = _smooth_endpoints(radial, lo, hi, epsabs=1e-3 * tol)
    return BallEstimate(val, err, "quadrature-1d", 1, err <= tol)


def _heat_product_ball(spec: HeatProduct, x, r, tol, seed) -> BallEstimate:
    base, n = spec.base, spec.n
    xp = x[:-1]
    if isinstance(base, Atomic):
        rho = np.linalg.norm(base.array[:, :-1] - xp, axis=-1)
        val = float(np.sum(np.asarray(base.weights) * _fibre(r, rho)))
        return BallEstimate(val, 1e-15 * max(val, 1.0), "quadrature-1d", len(base.weights))
    h2 = float(xp[n:] @ xp[n:])
    center = np.zeros_like(x)
    center[:n] = xp[:n]
    if h2 >= r * r:
        return BallEstimate(0.0, 0.0, "quadrature-1d", 0)
    errs = []

    def base_mass(tau):
        rho4 = r ** 4 - tau * tau
        rad2 = math.sqrt(max(rho4, 0.0)) - h2
        if rad2 <= 0:
            return 0.0
        est = ball_measure(base, center, math.sqrt(rad2), tol=1e-3 * tol, seed=seed)
        errs.append(est.abs_error)
        return est.value

    tmax = math.sqrt(r ** 4 - h2 * h2)
    val, err = integrate.quad(base_mass, 0.0, tmax, epsabs=1e-4 * tol, epsrel=1e-10, limit=200)
    err = 2 * (err + tmax * (max(errs) if errs else 0.0))
    return BallEstimate(2 * val, err, "quadrature-1d", len(errs), err <= tol)


def _in_isotropic_slots(x, n) -> bool:
    scale = max(1.0, float(np.max(np.abs(x))))
    return float(np.max(np.abs(x[n:]))) <= 1e-14 * scale


def _cone_ball(spec: Surface, x, r, tol, seed, budget) -> BallEstimate:
    from .cone import cone_ball_mass

    n, k = spec.n, int(spec.params["k"])
    if not _in_isotropic_slots(x, n):
        return monte_carlo_ball(spec, x, r, seed=seed, budget=budget)
    h2 = float(x[k:n] @ x[k:n])
    if h2 > r * r:
        return BallEstimate(0.0, 0.0, "quadrature-1d", 0)
    val, err = cone_ball_mass(x[:k], math.sqrt(r * r - h2), tol=1e-3 * tol)
    w = spec.weight
    return BallEstimate(w * val, w * err, "quadrature-1d", 1, w * err <= tol)


# -- Monte Carlo ----------------------------------------------------------------------

@dataclass
class _Plan:
    dim: int
    measure: float
    draw: Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]]


def _concat_windows(windows):
    lengths = np.array([b - a for _, a, b in windows])
    cum = np.concatenate([[0.0], np.cumsum(lengths)])
    return lengths, cum


def _pick(windows, u):
    """Map u in [0,1) to (window index, parameter) uniformly over the union."""
    lengths, cum = _concat_windows(windows)
    s = u * cum[-1]
    idx = np.clip(np.searchsorted(cum, s, side="right") - 1, 0, len(windows) - 1)
    starts = np.array([a for _, a, _ in windows])
    return idx, starts[idx] + (s - cum[idx])


def _shear_t(x, pts_h, s):
    """Heights placing the vertical fibre of B(x, r) over horizontal points pts_h."""
    return x[-1] + core.symplectic_form(x[:-1], pts_h) + s


def _plan(spec: MeasureSpec, x, r) -> _Plan | None:
    n = spec.n
    if isinstance(spec, Curve):
        windows = [(p, a, b) for p in spec.pieces for a, b in curve_windows(p, x, r)]
        if not windows:
            return None

        def draw(u):
            idx, t = _pick(windows, u[:, 0])
            pts = np.empty((u.shape[0], 2 * n + 1))
            w = np.empty(u.shape[0])
            for i, (piece, _, _) in enumerate(windows):
                sel = idx == i
                pts[sel] = piece(t[sel])
                w[sel] = piece.weight
            return pts, w

        return _Plan(1, float(sum(b - a for _, a, b in windows)), draw)
    if isinstance(spec, Surface) and spec.family in ("cylinder", "vertical-plane"):
        prm = spec.params
        if spec.family == "cylinder":
            R = prm["radius"]
            arc = circle_arc(R, x[:-1], r)
            wins = arc_windows(arc[0], arc[1], 0.0, TWO_PI) if arc else []
            horiz = lambda u: R * np.stack([np.cos(u), np.sin(u)], axis=-1)
        else:
            point, v = np.asarray(prm["point"]), np.asarray(prm["direction"])
            w0 = line_window(point, v, x[:-1], r)
            wins = [w0] if w0 else []
            horiz = lambda u: point + u[:, None] * v
        if not wins:
            return None
        windows = [(None, a, b) for a, b in wins]

        def draw(u):
            _, par = _pick(windows, u[:, 0])
            h = horiz(par)
            pts = np.empty((u.shape[0], 2 * n + 1))
            pts[:, :-1] = h
            pts[:, -1] = _shear_t(x, h, r * r * (2 * u[:, 1] - 1))
            return pts, np.full(u.shape[0], spec.weight)

        return _Plan(2, sum(b - a for a, b in wins) * 2 * r * r, draw)
    if isinstance(spec, Surface):
        k = int(spec.params["k"])
        xn = float(np.linalg.norm(x[:-1]))
        rho_max = (xn + r) / math.sqrt(2)
        rho_min = max(0.0, (xn - r) / math.sqrt(2)) if k == 4 else 0.0
        free_c = x[4:k]

        def draw(u):
            cz = 2 * u[:, 1] - 1
            az = TWO_PI * u[:, 2]
            sz = np.sqrt(np.maximum(1 - cz * cz, 0.0))
            omega = np.stack([sz * np.cos(az), sz * np.sin(az), cz], axis=-1)
            rho = rho_min + (rho_max - rho_min) * u[:, 0]
            sign = np.where(u[:, 3] < 0.5, -1.0, 1.0)
            free = free_c + r * (2 * u[:, 4:] - 1)
            pts = light_cone_embed(omega, rho, sign, free, n)
            return pts, spec.weight * math.sqrt(2) * rho * rho

        measure = 4 * math.pi * (rho_max - rho_min) * 2 * (2 * r) ** (k - 4)
        return _Plan(4 + k - 4, measure, draw)
    if isinstance(spec, SubgroupHaar):
        B = spec.orthonormal
        k = B.shape[0]
        c = B @ x[:-1]
        vertical = spec.flag == "vertical"

        def draw(u):
            pts = np.zeros((u.shape[0], 2 * n + 1))
            h = (c + r * (2 * u[:, :k] - 1)) @ B
            pts[:, :-1] = h
            if vertical:
                pts[:, -1] = _shear_t(x, h, r * r * (2 * u[:, k] - 1))
            return pts, np.ones(u.shape[0])

        return _Plan(max(k + vertical, 1), (2 * r) ** k * (2 * r * r if vertical else 1.0), draw)
    if isinstance(spec, HeatProduct):
        inner = _plan(spec.base, x, r)
        if inner is None:
            return None

        def draw(u):
            pts, w = inner.draw(u[:, :-1])
            pts = pts.copy()
            pts[:, -1] = _shear_t(x, pts[:, :-1], r * r * (2 * u[:, -1] - 1))
            return pts, w

        return _Plan(inner.dim + 1, inner.measure * 2 * r * r, draw)
    raise TypeError(f"no Monte Carlo plan for {type(spec).__name__}")


def monte_carlo_ball(spec: MeasureSpec, x, r: float, seed: int = 0,
                     budget: int = MC_BUDGET, strata: int = MC_STRATA) -> BallEstimate:
    """Stratified estimate; one independent substream per stratum of the first axis."""
    x = np.asarray(x, dtype=float)
    if isinstance(spec, Transformed):
        S_inv = spec.similarity.inverse()
        est = monte_carlo_ball(spec.inner, S_inv(x), r / spec.similarity.scale,
                               seed, budget, strata)
        return est.scaled(spec.mass_scale)
    if isinstance(spec, Atomic) or (isinstance(spec, HeatProduct) and isinstance(spec.base, Atomic)):
        return ball_measure(spec, x, r)
    plan = _plan(spec, x, r)
    if plan is None or plan.measure == 0:
        return BallEstimate(0.0, 0.0, "monte-carlo", 0)
    strata = max(1, min(strata, budget))
    per = max(budget // strata, 2)
    r4 = r ** 4
    means = np.empty(strata)
    vars_ = np.empty(strata)
    for s, child in enumerate(np.random.SeedSequence(seed).spawn(strata)):
        rng = np.random.Generator(np.random.PCG64(child))
        u = rng.random((per, plan.dim))
        u[:, 0] = (s + u[:, 0]) / strata
        pts, w = plan.draw(u)
        vals = w * (core.dist4_H(x, pts) <= r4)
        means[s] = vals.mean()
        vars_[s] = vals.var(ddof=1)
        if vars_[s] == 0.0:
            # all samples agree; the stratum may still hide a sliver of mass ~ 3/per
            vars_[s] = float(np.max(np.abs(w))) ** 2 * 3.0 / per
    value = plan.measure * means.mean()
    sigma = plan.measure * math.sqrt(vars_.sum() / per) / strata
    return BallEstimate(float(value), float(3 * sigma), "monte-carlo", per * strata)


# -- public API --------------------------------------------------------------------------

def ball_measure(spec: MeasureSpec, x, r: float, tol: float = DEFAULT_TOL, seed: int = 0,
                 method: str | None = None, budget: int = MC_BUDGET) -> BallEstimate:
    """mu(B(x, r)) for the closed Korányi ball.

    ``method="monte-carlo"`` forces the stratified sampler (used for
    cross-checks); otherwise the deterministic route for the kind is taken.
    Quadrature results with abs_error > tol come back with converged=False.
    """
    if not r > 0:
        raise ValueError(f"radius must be positive, got {r}")
    if not tol > 0:
        raise ValueError("tol must be positive")
    x = np.asarray(x, dtype=float)
    if x.shape != (2 * spec.n + 1,):
        raise ValueError(f"center must be a point of H^{spec.n}")
    if isinstance(spec, Transformed):
        S = spec.similarity
        est = ball_measure(spec.inner, S.inverse()(x), r / S.scale,
                           tol / spec.mass_scale, seed, method, budget)
        return est.scaled(spec.mass_scale)
    if method == "monte-carlo":
        return monte_carlo_ball(spec, x, r, seed=seed, budget=budget)
    if method not in (None, *METHODS):
        raise ValueError(f"unknown method {method!r}")
    if isinstance(spec, Atomic):
        return _atomic_ball(spec, x, r)
    if isinstance(spec, Curve):
        return _curve_ball(spec, x, r, tol)
    if isinstance(spec, Surface):
        if spec.family == "light-cone":
            return _cone_ball(spec, x, r, tol, seed, budget)
        return _vertical_surface_ball(spec, x, r, tol)
    if isinstance(spec, SubgroupHaar):
        return _subgroup_ball(spec, x, r, tol)
    if isinstance(spec, HeatProduct):
        return _heat_product_ball(spec, x, r, tol, seed)
    raise TypeError(f"unsupported measure {type(spec).__name__}")


def distance_profile(spec: MeasureSpec, x, radii: Sequence[float], tol: float = DEFAULT_TOL,
                     seed: int = 0, method: str | None = None) -> list[BallEstimate]:
    """f(r) = mu(B(x, r)) on an increasing radius grid."""
    radii = np.asarray(radii, dtype=float)
    if radii.ndim != 1 or radii.size == 0 or np.any(radii <= 0) or np.any(np.diff(radii) <= 0):
        raise ValueError("radii must be positive and strictly increasing")
    return [ball_measure(spec, x, float(r), tol, seed, method) for r in radii]


def vertical_ball_closed_form(dim_w: int, r: float) -> float:
    """Lebesgue measure of B(e, r) in W x R with dim W = dim_w (centre on the subgroup)."""
    if dim_w == 0:
        return 2.0 * r * r
    return _sphere_area(dim_w) * 0.5 * special.beta(dim_w / 4, 1.5) * r ** (dim_w + 2)
