"""Uniform-distribution and s-uniformity verdicts, densities, blow-ups and the
support functionals F(x, s) and P_j(x)."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

from . import core
from .ball import DEFAULT_TOL, BallEstimate, ball_measure
from .measures import (Atomic, Curve, MeasureSpec, Transformed, is_bounded, sample_support,
                       transform_measure)

DEFAULT_RADII = tuple(2.0 ** k for k in range(-6, 3))
UD_TOL = 1e-3
FIT_TOL = 1e-3
CLUSTER_RTOL = 1e-9


@dataclass
class UniformityReport:
    points: list[list[float]]
    radii: list[float]
    values: list[list[float]]
    errors: list[list[float]]
    max_rel_deviation: float
    error_budget: float
    fitted_exponent: float
    fit_residual: float
    fitted_constant: float
    verdict: str
    converged: bool = True
    s: float | None = None

    def to_json(self) -> dict:
        return asdict(self)

    def to_csv(self) -> str:
        """Rows (point_index, r, value, abs_error), points outer, radii inner."""
        lines = ["point_index,r,value,abs_error"]
        for i, (vals, errs) in enumerate(zip(self.values, self.errors)):
            for r, v, e in zip(self.radii, vals, errs):
                lines.append(f"{i},{r!r},{v!r},{e!r}")
        return "\n".join(lines) + "\n"

    @property
    def uniformly_distributed(self) -> bool:
        return self.verdict == "uniformly-distributed" or self.verdict.startswith("s-uniform")


@dataclass
class DensityEstimate:
    point: list[float]
    s: float
    upper: float
    lower: float
    radii_used: list[float]
    ratios: list[float] = field(default_factory=list)
    trend: str = "converged"
    converged: bool = True

    def __post_init__(self):
        if self.upper < self.lower:
            raise ValueError("upper density below lower density")

    def to_json(self) -> dict:
        return asdict(self)


def fit_growth_exponent(radii, values) -> tuple[float, float, float]:
    """Least squares log f = s log r + log c; returns (s, c, rms log residual)."""
    r = np.asarray(radii, dtype=float).ravel()
    v = np.asarray(values, dtype=float).ravel()
    keep = v > 0
    if keep.sum() < 2 or np.ptp(np.log(r[keep])) == 0:
        return float("nan"), float("nan"), float("inf")
    lr, lv = np.log(r[keep]), np.log(v[keep])
    A = np.column_stack([lr, np.ones_like(lr)])
    (slope, icpt), *_ = np.linalg.lstsq(A, lv, rcond=None)
    resid = lv - A @ np.array([slope, icpt])
    return float(slope), float(math.exp(icpt)), float(np.sqrt(np.mean(resid ** 2)))


def _distance_clusters(d: np.ndarray) -> np.ndarray:
    d = np.sort(d.ravel())
    keep = np.concatenate([[True], np.diff(d) > CLUSTER_RTOL * np.maximum(d[1:], 1.0)])
    return d[keep]


def _atoms(spec: MeasureSpec) -> np.ndarray | None:
    """Atom positions of an atomic measure, seen through any similarities; else None."""
    if isinstance(spec, Atomic):
        return spec.array
    if isinstance(spec, Transformed):
        inner = _atoms(spec.inner)
        return None if inner is None else spec.similarity(inner)
    return None


def atomic_probe_radii(atoms: np.ndarray, radii: Sequence[float]) -> np.ndarray:
    """Grid radii away from every distance cluster, plus one radius between clusters.

    Between clusters the counting function of every atom is constant, so these
    radii decide uniform distribution exactly; a radius sitting on a cluster
    would turn the verdict into a rounding coin flip.
    """
    d = _distance_clusters(core.dist_H(atoms[:, None, :], atoms[None, :, :]))
    grid = np.asarray(radii, float)
    gap = np.min(np.abs(grid[:, None] - d[None, :]), axis=1)
    grid = grid[gap > 10 * CLUSTER_RTOL * np.maximum(grid, 1.0)]
    mids = 0.5 * (d[:-1] + d[1:])
    extra = np.concatenate([mids, [2 * d[-1] + 1.0]])
    return np.unique(np.concatenate([grid, extra[extra > 0]]))


def _support_points(spec: MeasureSpec, num_points: int, seed: int, points) -> np.ndarray:
    if points is not None:
        return np.atleast_2d(np.asarray(points, dtype=float))
    atoms = _atoms(spec)
    if atoms is not None:
        return atoms
    return sample_support(spec, num_points, seed)


def _evaluate_grid(spec, pts, radii, tol, seed, method):
    vals = np.empty((len(pts), len(radii)))
    errs = np.empty_like(vals)
    converged = True
    for i, x in enumerate(pts):
        for j, r in enumerate(radii):
            est = ball_measure(spec, x, float(r), tol=tol, seed=seed, method=method)
            vals[i, j], errs[i, j] = est.value, est.abs_error
            converged &= est.converged
    return vals, errs, converged


def _spread(vals, errs):
    hi, lo = vals.max(axis=0), vals.min(axis=0)
    mean = vals.mean(axis=0)
    safe = np.where(mean > 0, mean, 1.0)
    dev = np.where(mean > 0, (hi - lo) / safe, 0.0)
    budget = np.where(mean > 0, 2 * errs.max(axis=0) / safe, 0.0)
    return float(dev.max()), float(budget.max())


def check_uniformly_distributed(spec: MeasureSpec, num_points: int = 8,
                                radii: Sequence[float] = DEFAULT_RADII, tol: float = UD_TOL,
                                seed: int = 0, points=None, method: str | None = None,
                                ball_tol: float = DEFAULT_TOL) -> UniformityReport:
    """Compare mu(B(x, r)) across support points x for every r on the grid.

    Atomic measures are evaluated at all atoms and at radii separating every
    distance cluster, which makes the verdict exact.
    """
    radii = np.asarray(radii, dtype=float)
    if radii.size == 0 or np.any(radii <= 0):
        raise ValueError("radii must be positive")
    pts = _support_points(spec, num_points, seed, points)
    atoms = _atoms(spec)
    if atoms is not None:
        radii = atomic_probe_radii(atoms, radii)
    vals, errs, converged = _evaluate_grid(spec, pts, radii, ball_tol, seed, method)
    dev, budget = _spread(vals, errs)
    s, c, resid = fit_growth_exponent(np.broadcast_to(radii, vals.shape), vals)
    if not converged:
        verdict = "inconclusive"
    elif dev < tol + budget:
        verdict = "uniformly-distributed"
    else:
        verdict = "neither"
    return UniformityReport(pts.tolist(), radii.tolist(), vals.tolist(), errs.tolist(),
                            dev, budget, s, resid, c, verdict, converged)


def check_s_uniform(spec: MeasureSpec, num_points: int = 8,
                    radii: Sequence[float] = DEFAULT_RADII, tol: float = FIT_TOL,
                    seed: int = 0, points=None, method: str | None = None,
                    ball_tol: float = DEFAULT_TOL) -> UniformityReport:
    """Pooled log-log fit of mu(B(x, r)) = c r^s over support points and radii."""
    radii = np.asarray(radii, dtype=float)
    if radii.size < 2 or radii.max() / radii.min() < 100:
        raise ValueError("s-uniformity needs radii spanning at least two decades")
    rep = check_uniformly_distributed(spec, num_points, radii, max(tol, UD_TOL), seed,
                                      points, method, ball_tol)
    if rep.verdict == "uniformly-distributed":
        # error bars in log space add to the residual allowance
        vals, errs = np.array(rep.values), np.array(rep.errors)
        log_budget = float(np.max(errs / np.where(vals > 0, vals, np.inf)))
        if rep.fit_residual < tol + log_budget and math.isfinite(rep.fitted_exponent):
            rep.verdict = f"s-uniform({rep.fitted_exponent:.6g})"
            rep.s = rep.fitted_exponent
    return rep


def growth_exponent(spec: MeasureSpec, x, radii: Sequence[float], tol: float = DEFAULT_TOL,
                    seed: int = 0, method: str | None = None) -> tuple[float, float, float]:
    """Fitted exponent of r -> mu(B(x, r)) at one point; (s, c, residual)."""
    vals = [ball_measure(spec, x, float(r), tol, seed, method).value for r in radii]
    return fit_growth_exponent(radii, vals)


def density(spec: MeasureSpec, x, s: float, radii_decreasing: Sequence[float],
            tol: float = DEFAULT_TOL, seed: int = 0) -> DensityEstimate:
    """Upper/lower s-density read off the smaller half of a decreasing radius grid.

    The limit is reported, not certified: ``trend`` is "converged" when the
    tail ratios agree to 1%, otherwise "to-zero", "to-infinity" or "oscillating".
    """
    radii = np.asarray(radii_decreasing, dtype=float)
    if radii.size < 2 or np.any(np.diff(radii) >= 0):
        raise ValueError("radii must be strictly decreasing")
    if radii.min() < 1e-4:
        raise ValueError("radii below 1e-4 are under the floating-point floor")
    ests = [ball_measure(spec, x, float(r), tol, seed) for r in radii]
    ratios = np.array([e.value for e in ests]) / radii ** s
    tail = slice(radii.size // 2, None)
    tr, tq = radii[tail], ratios[tail]
    upper, lower = float(tq.max()), float(tq.min())
    if upper > 0 and (upper - lower) <= 1e-2 * upper:
        trend = "converged"
    elif lower <= 0 and upper <= 0:
        trend = "to-zero"
    else:
        pos = tq > 0
        slope = np.polyfit(np.log(tr[pos]), np.log(tq[pos]), 1)[0] if pos.sum() >= 2 else 1.0
        if np.any(~pos) or slope > 0.05:
            trend = "to-zero"
        elif slope < -0.05:
            trend = "to-infinity"
        else:
            trend = "oscillating"
    return DensityEstimate(list(map(float, np.asarray(x, float))), float(s), upper, lower,
                           tr.tolist(), tq.tolist(), trend, all(e.converged for e in ests))


def blowup(spec: MeasureSpec, x0, k: float, s: float) -> Transformed:
    """nu_k(A) = k^s mu(x0 . delta_{1/k}(A)), the push-forward under p -> delta_k(x0^{-1} p)."""
    if not k > 0:
        raise ValueError("blow-up factor must be positive")
    x0 = np.asarray(x0, dtype=float)
    S = core.Similarity(core.dilate(k, core.inverse(x0)), np.eye(x0.size - 1), scale=k)
    return transform_measure(spec, S, k ** s)


def tangent_transform(spec: MeasureSpec, a, r: float, c: float) -> Transformed:
    """c T_{a,r#} mu with T_{a,r}(p) = delta_{1/r}(a^{-1} p)."""
    if not (r > 0 and c > 0):
        raise ValueError("r and c must be positive")
    a = np.asarray(a, dtype=float)
    S = core.Similarity(core.dilate(1 / r, core.inverse(a)), np.eye(a.size - 1), scale=1 / r)
    return transform_measure(spec, S, c)


def tangent_map(a, r: float) -> Callable[[np.ndarray], np.ndarray]:
    a = np.asarray(a, dtype=float)
    return lambda p: core.dilate(1 / r, core.multiply(core.inverse(a), p))


# -- integrals against bounded measures --------------------------------------------------

def integrate_measure(spec: MeasureSpec, func: Callable[[np.ndarray], np.ndarray],
                      tol: float = 1e-12) -> tuple[float, float]:
    """Integral of func over a bounded-support measure; returns (value, error estimate)."""
    if not is_bounded(spec):
        raise ValueError("integration needs a measure with bounded support")
    if isinstance(spec, Atomic):
        return float(np.sum(np.asarray(spec.weights) * func(spec.array))), 0.0
    if isinstance(spec, Transformed):
        val, err = integrate_measure(spec.inner, lambda p: func(spec.similarity(p)),
                                     tol / spec.mass_scale)
        return spec.mass_scale * val, spec.mass_scale * err
    if isinstance(spec, Curve):
        total, err = 0.0, 0.0
        for piece in spec.pieces:
            if piece.family == "circle" and math.isclose(piece.hi - piece.lo, 2 * math.pi):
                val, e = _periodic_trapezoid(lambda t: func(piece(t)), piece.lo, tol)
            else:
                val, e = integrate.quad(lambda t: float(func(piece(np.array([t])))[0]),
                                        piece.lo, piece.hi, epsabs=tol, epsrel=0, limit=400)
            total += piece.weight * val
            err += piece.weight * e
        return total, err
    raise ValueError(f"cannot integrate against {type(spec).__name__}")


def _periodic_trapezoid(f, lo, tol, start=64, max_nodes=2 ** 20):
    """Trapezoid rule on a full period; doubles nodes until successive values agree."""
    m = start
    prev = None
    while m <= max_nodes:
        t = lo + 2 * math.pi * np.arange(m) / m
        val = float(np.sum(f(t))) * 2 * math.pi / m
        if prev is not None and abs(val - prev) <= tol:
            return val, abs(val - prev)
        prev, m = val, 2 * m
    return prev, float("inf")


def support_functional(spec: MeasureSpec, x, x0, s: float, tol: float = 1e-12) -> float:
    """F(x, s): integral of exp(-s||x^{-1} z||^4) - exp(-s||x0^{-1} z||^4) d mu(z)."""
    if not s > 0:
        raise ValueError("s must be positive")
    x, x0 = np.asarray(x, float), np.asarray(x0, float)

    def f(z):
        return (np.exp(-s * core.koranyi_norm4(core.multiply(core.inverse(x), z)))
                - np.exp(-s * core.koranyi_norm4(core.multiply(core.inverse(x0), z))))

    return integrate_measure(spec, f, tol)[0]


def moment_polynomial(spec: MeasureSpec, j: int, x, x0, tol: float = 1e-12) -> float:
    """P_j(x): integral of ||x^{-1} z||^{4j} - ||x0^{-1} z||^{4j} d mu(z)."""
    if j < 1:
        raise ValueError("j must be a positive integer")
    x, x0 = np.asarray(x, float), np.asarray(x0, float)

    def f(z):
        return (core.koranyi_norm4(core.multiply(core.inverse(x), z)) ** j
                - core.koranyi_norm4(core.multiply(core.inverse(x0), z)) ** j)

    return integrate_measure(spec, f, tol)[0]


def layer_cake_integral(spec: MeasureSpec, x, s: float, tol: float = 1e-10) -> float:
    """Integral of exp(-s||x^{-1}z||^4) d mu via t -> mu(B(x, (-log t / s)^{1/4})) on (0, 1]."""
    def mass(t):
        if t >= 1.0:
            return 0.0
        return ball_measure(spec, x, (-math.log(t) / s) ** 0.25).value

    if isinstance(spec, Atomic):
        # the integrand is a step function with jumps at exp(-s d^4)
        d = np.sort(core.dist_H(x, spec.array))
        cuts = np.unique(np.concatenate([[0.0, 1.0], np.exp(-s * d ** 4)]))
        return float(sum(integrate.quad(mass, a, b, epsabs=tol)[0]
                         for a, b in zip(cuts[:-1], cuts[1:]) if b > a))
    return integrate.quad(mass, 0.0, 1.0, epsabs=tol, limit=400)[0]


def doubling_bound(spec: MeasureSpec, x, support_point, s: float, r: float,
                   tol: float = DEFAULT_TOL, seed: int = 0) -> dict:
    """Both sides of mu(B(x, r)) <= (5r/s)^Q f_mu(s) with their error bars."""
    if not 0 < s < r:
        raise ValueError("need 0 < s < r")
    Q = core.homogeneous_dimension(spec.n)
    lhs = ball_measure(spec, x, r, tol, seed)
    f = ball_measure(spec, support_point, s, tol, seed)
    factor = (5 * r / s) ** Q
    return {"lhs": lhs.value, "rhs": factor * f.value,
            "error": lhs.abs_error + factor * f.abs_error,
            "holds": lhs.value <= factor * f.value + 3 * (lhs.abs_error + factor * f.abs_error)}


def profile_table(spec: MeasureSpec, points, radii, tol: float = DEFAULT_TOL,
                  seed: int = 0) -> list[tuple[int, float, BallEstimate]]:
    rows = []
    for i, x in enumerate(np.atleast_2d(np.asarray(points, float))):
        for r in radii:
            rows.append((i, float(r), ball_measure(spec, x, float(r), tol, seed)))
    return rows
