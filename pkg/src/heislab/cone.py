"""The light cone C in R^4, its isotropic embeddings C_H and C~_H, and heat products.

C = {x in R^4 : x1^2 + x2^2 + x3^2 = x4^2} carries the area measure
sqrt(2) rho^2 d rho d omega in coordinates x = (rho omega, +-rho), omega in S^2.
In H^n (n >= 4) the cone sits in the isotropic slots 1..4, where d_H agrees with
the Euclidean metric.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from . import core
from .measures import HeatProduct, MeasureSpec, Surface, light_cone_embed, make_light_cone

SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class LightConeSpec:
    n: int
    k: int = 4
    variant: str = "C_H"

    def __post_init__(self):
        if self.n < 4 or not 4 <= self.k <= self.n:
            raise ValueError("light cone embedding needs n >= 4 and 4 <= k <= n")
        if self.variant not in ("C_H", "C~_H"):
            raise ValueError("variant must be 'C_H' or 'C~_H'")

    def measure(self) -> MeasureSpec:
        cone = make_light_cone(self.n, self.k)
        return cone if self.variant == "C_H" else heat_product_measure(cone)

    @property
    def uniformity_exponent(self) -> int:
        return self.k - 1 if self.variant == "C_H" else self.k + 1


def cone_membership(p, tol: float = 1e-10) -> bool:
    p = np.asarray(p, dtype=float)
    if p.shape != (4,):
        raise ValueError("cone points live in R^4")
    scale = max(1.0, float(p @ p))
    return abs(float(p[:3] @ p[:3] - p[3] ** 2)) < tol * scale


def sample_cone(seed: int, count: int, radius_window=(0.0, 1.0)) -> np.ndarray:
    """Points of C distributed by cone area with rho in radius_window."""
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    a, b = radius_window
    rho = np.cbrt(a ** 3 + (b ** 3 - a ** 3) * rng.random(count))
    g = rng.standard_normal((count, 3))
    omega = g / np.linalg.norm(g, axis=1, keepdims=True)
    sign = np.where(rng.random(count) < 0.5, -1.0, 1.0)
    return np.column_stack([omega * rho[:, None], sign * rho])


def _cone4_mass(x4: np.ndarray, R: float, tol: float) -> tuple[float, float]:
    """Area of B_E(x, R) on C for x in R^4."""
    if R <= 0:
        return 0.0, 0.0
    xh = float(np.linalg.norm(x4[:3]))
    D = float(x4 @ x4) - R * R
    total, err = 0.0, 0.0
    for sigma in (1.0, -1.0):
        c4 = sigma * x4[3]

        def piece(u):
            b = xh * u + c4
            disc = b * b - 2 * D
            if disc < 0:
                return 0.0
            sq = math.sqrt(disc)
            hi = 0.5 * (b + sq)
            lo = max(0.5 * (b - sq), 0.0)
            return SQRT2 / 3 * (hi ** 3 - lo ** 3) if hi > 0 else 0.0

        if xh == 0.0:
            total += 2 * math.pi * 2 * piece(0.0)
            continue
        cuts = [-1.0, 1.0]
        if D > 0:
            u0 = (math.sqrt(2 * D) - c4) / xh
            if u0 >= 1:
                continue
            cuts[0] = max(u0, -1.0)
        else:
            kink = -c4 / xh
            if -1 < kink < 1:
                cuts.insert(1, kink)
        for a, b in zip(cuts[:-1], cuts[1:]):
            m, h = 0.5 * (a + b), 0.5 * (b - a)
            val, e = integrate.quad(lambda phi: piece(m - h * math.cos(phi)) * h * math.sin(phi),
                                    0.0, math.pi, epsabs=tol, epsrel=1e-12, limit=200)
            total += 2 * math.pi * val
            err += 2 * math.pi * e
    return total, err


def cone_ball_mass(xk, R: float, tol: float = 1e-9) -> tuple[float, float]:
    """Euclidean ball mass of (cone area x Lebesgue^{k-4}) on C x R^{k-4}, centre xk in R^k."""
    xk = np.asarray(xk, dtype=float)
    k = xk.size
    if k == 4:
        return _cone4_mass(xk, R, tol)
    area = 2 * math.pi ** ((k - 4) / 2) / math.gamma((k - 4) / 2)
    errs = []

    def shell(p):
        v, e = _cone4_mass(xk[:4], math.sqrt(max(R * R - p * p, 0.0)), tol)
        errs.append(e)
        return p ** (k - 5) * v

    val, e = integrate.quad(shell, 0.0, R, epsabs=tol, epsrel=1e-10, limit=200)
    return area * val, area * (e + R * max(errs, default=0.0))


def cone_uniform_constant() -> float:
    """B_E(0, R) on C has area (4 pi / 3) R^3."""
    return 4 * math.pi / 3


def euclidean_cone_ball(x, r: float, method: str = "quadrature", samples: int = 10**6,
                        seed: int = 0, tol: float = 1e-9):
    """Area of B_E(x, r) intersected with C for x on C (Euclidean metric of R^4)."""
    from .ball import MC_STRATA, BallEstimate

    x = np.asarray(x, dtype=float)
    if not cone_membership(x):
        raise ValueError("centre must lie on the light cone")
    if method == "quadrature":
        val, err = _cone4_mass(x, r, tol)
        return BallEstimate(val, err, "quadrature-1d", 1, err <= 1e3 * tol)
    if method != "monte-carlo":
        raise ValueError(f"unknown method {method!r}")
    xn = float(np.linalg.norm(x))
    rho0 = xn / SQRT2
    a, b = max(0.0, (xn - r) / SQRT2), (xn + r) / SQRT2
    window = 2 * 4 * math.pi * SQRT2 * (b ** 3 - a ** 3) / 3
    basis = _frame(x[:3] / rho0) if rho0 > 0 else np.eye(3)
    sigma0 = 1.0 if x[3] >= 0 else -1.0
    per = max(samples // MC_STRATA, 2)
    means = np.empty(MC_STRATA)
    vars_ = np.empty(MC_STRATA)
    for s, child in enumerate(np.random.SeedSequence(seed).spawn(MC_STRATA)):
        rng = np.random.Generator(np.random.PCG64(child))
        u = rng.random((per, 4))
        u[:, 0] = (s + u[:, 0]) / MC_STRATA
        rho = np.cbrt(a ** 3 + (b ** 3 - a ** 3) * u[:, 0])
        sign = np.where(u[:, 3] < 0.5, -1.0, 1.0)
        if rho0 > 0:
            # |z - x|^2 <= r^2 forces omega . omega0 >= m; sample that cap only
            with np.errstate(divide="ignore", invalid="ignore"):
                m = (2 * rho ** 2 + 2 * rho0 ** 2 - r * r) / (2 * rho * rho0) - sign * sigma0
            lo = np.clip(np.nan_to_num(m, nan=-1.0, neginf=-1.0), -1.0, 1.0)
            frac = (1.0 - lo) / 2.0
            cz = lo + (1.0 - lo) * u[:, 1]
        else:
            frac = np.ones(per)
            cz = 2 * u[:, 1] - 1
        az = 2 * math.pi * u[:, 2]
        sz = np.sqrt(np.maximum(1 - cz * cz, 0.0))
        omega = np.stack([sz * np.cos(az), sz * np.sin(az), cz], axis=-1) @ basis
        z = np.column_stack([omega * rho[:, None], sign * rho])
        hit = frac * (np.sum((z - x) ** 2, axis=1) <= r * r)
        means[s], vars_[s] = hit.mean(), hit.var(ddof=1)
    value = window * means.mean()
    sigma = window * math.sqrt(vars_.sum() / per) / MC_STRATA
    return BallEstimate(float(value), float(3 * sigma), "monte-carlo", per * MC_STRATA)


def _frame(axis: np.ndarray) -> np.ndarray:
    """Rows e1, e2, axis: an orthonormal frame whose third vector is ``axis``."""
    helper = np.eye(3)[int(np.argmin(np.abs(axis)))]
    e1 = np.cross(axis, helper)
    e1 /= np.linalg.norm(e1)
    return np.vstack([e1, np.cross(axis, e1), axis])


def embed_cone_point(p4, n: int, free=()) -> np.ndarray:
    """(p4, free, 0, ..., 0) in H^n."""
    out = np.zeros(2 * n + 1)
    out[:4] = p4
    out[4:4 + len(free)] = free
    return out


def embedded_cone_ball_equality(x, r: float, samples: int = 10**4, seed: int = 0,
                                k: int = 4, tol: float = 1e-10) -> dict:
    """Compare membership in B_H(x, r) and B_E(x, r) for sampled points of C_H.

    A disagreement counts only when the two distances straddle r by more than tol.
    """
    x = np.asarray(x, dtype=float)
    n = (x.size - 1) // 2
    LightConeSpec(n, k)
    if not cone_membership(x[:4]) or np.any(x[k:] != 0):
        raise ValueError("centre must lie on C_H")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    reach = max(r, 1e-3)
    xn = float(np.linalg.norm(x[:k]))
    rho = (xn + 2 * reach) / SQRT2 * rng.random(samples)
    g = rng.standard_normal((samples, 3))
    omega = g / np.linalg.norm(g, axis=1, keepdims=True)
    sign = np.where(rng.random(samples) < 0.5, -1.0, 1.0)
    free = x[4:k] + 2 * reach * (2 * rng.random((samples, k - 4)) - 1)
    z = light_cone_embed(omega, rho, sign, free, n)
    z = np.vstack([z, x])
    dH = core.dist_H(x, z)
    dE = np.linalg.norm(z - x, axis=1)
    inH, inE = dH <= r, dE <= r
    ambiguous = (np.abs(dH - r) <= tol) | (np.abs(dE - r) <= tol)
    disagree = int(np.sum((inH != inE) & ~ambiguous))
    return {
        "samples": int(z.shape[0]),
        "inside": int(np.sum(inH)),
        "disagreements": disagree,
        "agreement": 1.0 - disagree / z.shape[0],
        "max_metric_gap": float(np.max(np.abs(dH - dE))),
    }


def isotropy_control(x, eps: float = 1e-2) -> dict:
    """A point off the isotropic slots whose d_H and Euclidean ball memberships differ."""
    x = np.asarray(x, dtype=float)
    n = (x.size - 1) // 2
    j = int(np.argmax(np.abs(x[:n])))
    if x[j] == 0:
        raise ValueError("control needs a centre away from the vertex")
    z = x.copy()
    z[n + j] += eps
    dE = float(np.linalg.norm(z - x))
    dH = float(core.dist_H(x, z))
    r = 0.5 * (dE + dH)
    return {"z": z.tolist(), "d_E": dE, "d_H": dH, "r": r,
            "in_B_E": dE <= r, "in_B_H": dH <= r}


def heat_product_measure(base: MeasureSpec) -> HeatProduct:
    """base (x) Lebesgue on the last coordinate, measured with the heat metric."""
    return HeatProduct(base)


def heat_product_constant(m: float) -> float:
    """I_m = integral over [-1, 1] of (1 - tau^2)^{m/4}, a Beta function value."""
    return float(special.beta(0.5, m / 4 + 1))


def heat_product_reduced(c: float, m: float, r: float) -> float:
    """c * integral over [-r^2, r^2] of (r^4 - t^2)^{m/4} dt."""
    val, _ = integrate.quad(lambda t: (r ** 4 - t * t) ** (m / 4), -r * r, r * r,
                            epsabs=1e-14, epsrel=1e-12)
    return c * val
