"""Heisenberg group arithmetic, the Korányi and heat metrics, and similarities.

Points of H^n are arrays whose last axis has length 2n+1; every function here
broadcasts over leading axes. :class:`Point` is a thin validated wrapper used
at API boundaries and for JSON.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

REL_TOL = 1e-12
ROTATION_TOL = 1e-10


def _dim(arr: np.ndarray) -> int:
    m = arr.shape[-1]
    if m < 3 or m % 2 == 0:
        raise ValueError(f"Heisenberg points need 2n+1 >= 3 coordinates, got {m}")
    return (m - 1) // 2


def _as(x) -> np.ndarray:
    return np.asarray(x, dtype=float)


@dataclass(frozen=True)
class Point:
    """A point of H^n stored as 2n+1 finite coordinates."""

    coords: tuple[float, ...]

    def __post_init__(self):
        c = tuple(float(v) for v in self.coords)
        _dim(np.empty(len(c)))
        if not all(np.isfinite(c)):
            raise ValueError("Point coordinates must be finite")
        object.__setattr__(self, "coords", c)

    @property
    def n(self) -> int:
        return (len(self.coords) - 1) // 2

    def __array__(self, dtype=None, copy=None):
        return np.array(self.coords, dtype=dtype or float)

    def __len__(self):
        return len(self.coords)

    @classmethod
    def of(cls, x) -> "Point":
        return cls(tuple(np.asarray(x, dtype=float).ravel()))

    @classmethod
    def identity(cls, n: int) -> "Point":
        return cls((0.0,) * (2 * n + 1))

    def to_json(self) -> list[float]:
        return list(self.coords)


def identity(n: int) -> np.ndarray:
    return np.zeros(2 * n + 1)


def homogeneous_dimension(n: int) -> int:
    """Hausdorff dimension Q = 2n+2 of (H^n, d_H)."""
    return 2 * n + 2


def symplectic_form(xp, yp) -> np.ndarray:
    """A(x', y') = -2 sum_j (x_j y_{j+n} - x_{j+n} y_j)."""
    xp, yp = _as(xp), _as(yp)
    if xp.shape[-1] != yp.shape[-1] or xp.shape[-1] % 2:
        raise ValueError("symplectic_form needs equal even-length vectors")
    n = xp.shape[-1] // 2
    return -2.0 * (
        np.sum(xp[..., :n] * yp[..., n:], axis=-1)
        - np.sum(xp[..., n:] * yp[..., :n], axis=-1)
    )


def symplectic_matrix(n: int) -> np.ndarray:
    """Matrix J with A(x', y') = x'^T J y'."""
    J = np.zeros((2 * n, 2 * n))
    J[:n, n:] = -2.0 * np.eye(n)
    J[n:, :n] = 2.0 * np.eye(n)
    return J


def multiply(x, y) -> np.ndarray:
    x, y = _as(x), _as(y)
    if x.shape[-1] != y.shape[-1]:
        raise ValueError("points live in different Heisenberg groups")
    _dim(x)
    xp, yp = x[..., :-1], y[..., :-1]
    out = np.empty(np.broadcast_shapes(x.shape, y.shape))
    out[..., :-1] = xp + yp
    out[..., -1] = x[..., -1] + y[..., -1] + symplectic_form(xp, yp)
    return out


def inverse(x) -> np.ndarray:
    x = _as(x)
    _dim(x)
    return -x


def dilate(r: float, p) -> np.ndarray:
    if not r > 0:
        raise ValueError(f"dilation factor must be positive, got {r}")
    p = _as(p).copy()
    _dim(p)
    p[..., :-1] *= r
    p[..., -1] *= r * r
    return p


def koranyi_norm4(x) -> np.ndarray:
    """Fourth power of the Korányi norm, computed without roots."""
    x = _as(x)
    sq = np.sum(x[..., :-1] ** 2, axis=-1)
    return sq * sq + x[..., -1] ** 2


def koranyi_norm(x) -> np.ndarray:
    x = _as(x)
    _dim(x)
    return np.sqrt(np.sqrt(koranyi_norm4(x)))


def dist4_H(x, y) -> np.ndarray:
    return koranyi_norm4(multiply(inverse(x), y))


def dist_H(x, y) -> np.ndarray:
    """Korányi distance ||x^{-1} y||."""
    return np.sqrt(np.sqrt(dist4_H(x, y)))


def heat_dist(x, y) -> np.ndarray:
    """(|x'-y'|^4 + (x_last - y_last)^2)^{1/4} on R^{n+1}."""
    x, y = _as(x), _as(y)
    if x.shape[-1] != y.shape[-1] or x.shape[-1] < 2:
        raise ValueError("heat_dist needs equal-length vectors of length >= 2")
    d = y - x
    sq = np.sum(d[..., :-1] ** 2, axis=-1)
    return (sq * sq + d[..., -1] ** 2) ** 0.25


def embed_W(x) -> np.ndarray:
    """R^{n+1} -> H^n, (x_1..x_n, x_{n+1}) -> (x_1..x_n, 0..0, x_{n+1})."""
    x = _as(x)
    n = x.shape[-1] - 1
    if n < 1:
        raise ValueError("embed_W needs at least two coordinates")
    out = np.zeros(x.shape[:-1] + (2 * n + 1,))
    out[..., :n] = x[..., :n]
    out[..., -1] = x[..., -1]
    return out


def rotation_2d(phi: float) -> np.ndarray:
    """U(1) acting on (x_1, x_2) of H^1 as multiplication by e^{i phi}."""
    c, s = np.cos(phi), np.sin(phi)
    return np.array([[c, -s], [s, c]])


def unitary_to_real(U) -> np.ndarray:
    """Real 2n x 2n matrix of U in U(n) acting on z_j = x_j + i x_{j+n}."""
    U = np.asarray(U, dtype=complex)
    n = U.shape[0]
    R = np.empty((2 * n, 2 * n))
    R[:n, :n] = U.real
    R[:n, n:] = -U.imag
    R[n:, :n] = U.imag
    R[n:, n:] = U.real
    return R


def is_unitary_rotation(R, tol: float = ROTATION_TOL) -> bool:
    """True iff R is orthogonal and preserves the symplectic form A."""
    R = np.asarray(R, dtype=float)
    if R.ndim != 2 or R.shape[0] != R.shape[1] or R.shape[0] % 2:
        return False
    m = R.shape[0]
    J = symplectic_matrix(m // 2)
    return bool(
        np.allclose(R.T @ R, np.eye(m), atol=tol)
        and np.allclose(R.T @ J @ R, J, atol=tol)
    )


def _reflection_diag(n: int) -> np.ndarray:
    return np.concatenate([-np.ones(n), np.ones(n)])


@dataclass(frozen=True)
class Similarity:
    """p -> q . delta_scale(rho^reflect(R p')).

    Normal form: rotate, then reflect, then dilate, then left-translate by q.
    The reflection negates x_1..x_n and x_{2n+1}.
    """

    translation: np.ndarray
    rotation: np.ndarray
    reflect: bool = False
    scale: float = 1.0
    _check: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        q = np.array(self.translation, dtype=float)
        R = np.array(self.rotation, dtype=float)
        n = _dim(q)
        if R.shape != (2 * n, 2 * n):
            raise ValueError(f"rotation must be {2 * n}x{2 * n}")
        if self._check and not is_unitary_rotation(R):
            raise ValueError("rotation is not in U(n): fails orthogonality or A-preservation")
        if not self.scale > 0:
            raise ValueError("similarity scale must be positive")
        q.flags.writeable = False
        R.flags.writeable = False
        object.__setattr__(self, "translation", q)
        object.__setattr__(self, "rotation", R)
        object.__setattr__(self, "reflect", bool(self.reflect))
        object.__setattr__(self, "scale", float(self.scale))

    @property
    def n(self) -> int:
        return (self.translation.shape[0] - 1) // 2

    @classmethod
    def identity(cls, n: int) -> "Similarity":
        return cls(np.zeros(2 * n + 1), np.eye(2 * n))

    @classmethod
    def translate(cls, q) -> "Similarity":
        q = _as(q)
        return cls(q, np.eye(q.shape[-1] - 1))

    @classmethod
    def dilation(cls, r: float, n: int) -> "Similarity":
        return cls(np.zeros(2 * n + 1), np.eye(2 * n), scale=r)

    def linear(self, p) -> np.ndarray:
        """The automorphism part delta_r . rho^e . R applied to p."""
        p = _as(p)
        out = np.empty_like(p)
        out[..., :-1] = p[..., :-1] @ self.rotation.T
        out[..., -1] = p[..., -1]
        if self.reflect:
            out[..., :-1] *= _reflection_diag(self.n)
            out[..., -1] *= -1.0
        return dilate(self.scale, out)

    def __call__(self, p) -> np.ndarray:
        return multiply(self.translation, self.linear(p))

    def inverse(self) -> "Similarity":
        D = np.diag(_reflection_diag(self.n)) if self.reflect else np.eye(2 * self.n)
        rot = D @ self.rotation.T @ D
        lin_inv = Similarity(np.zeros_like(self.translation), rot, self.reflect,
                             1.0 / self.scale, _check=False)
        return Similarity(lin_inv.linear(inverse(self.translation)), rot,
                          self.reflect, 1.0 / self.scale, _check=False)

    def compose(self, other: "Similarity") -> "Similarity":
        """self after other."""
        D = np.diag(_reflection_diag(self.n)) if other.reflect else np.eye(2 * self.n)
        rot = D @ self.rotation @ D @ other.rotation
        q = multiply(self.translation, self.linear(other.translation))
        return Similarity(q, rot, self.reflect != other.reflect,
                          self.scale * other.scale, _check=False)

    def to_json(self) -> dict:
        return {
            "translation": self.translation.tolist(),
            "rotation": self.rotation.tolist(),
            "reflect": self.reflect,
            "scale": self.scale,
        }

    @classmethod
    def from_json(cls, d: dict) -> "Similarity":
        return cls(np.array(d["translation"]), np.array(d["rotation"]),
                   bool(d.get("reflect", False)), float(d.get("scale", 1.0)))

    def __eq__(self, other):
        if not isinstance(other, Similarity):
            return NotImplemented
        return (self.reflect == other.reflect
                and np.array_equal(self.translation, other.translation)
                and np.array_equal(self.rotation, other.rotation)
                and self.scale == other.scale)

    def __hash__(self):
        return hash((self.translation.tobytes(), self.rotation.tobytes(),
                     self.reflect, self.scale))
