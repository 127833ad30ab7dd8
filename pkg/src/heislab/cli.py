"""Command line front end. Every run writes one deterministic JSON (or CSV) report."""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import math
import sys
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy

from . import __version__, cone, equilateral, measures, uniformity
from .ball import DEFAULT_TOL, ball_measure

EXIT_OK, EXIT_BAD_INPUT, EXIT_UNCONVERGED = 0, 2, 3


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RadiiGrid:
    lo: float
    hi: float
    count: int
    log_spaced: bool = True

    def __post_init__(self):
        if not (0 < self.lo < self.hi) or self.count < 2:
            raise ConfigError("radii grid needs 0 < min < max and count >= 2")

    @classmethod
    def parse(cls, text: str) -> "RadiiGrid":
        try:
            lo, hi, count = text.split(":")
            lo, hi, count = float(lo), float(hi), int(count)
        except ValueError as exc:
            raise ConfigError(f"bad --radii {text!r}: expected MIN:MAX:COUNT") from exc
        return cls(lo, hi, count)

    def values(self) -> np.ndarray:
        if self.log_spaced:
            return np.geomspace(self.lo, self.hi, self.count)
        return np.linspace(self.lo, self.hi, self.count)


@dataclass
class RunConfig:
    command: str
    spec: str | None = None
    seed: int = 0
    tol: float | None = None
    ball_tol: float = DEFAULT_TOL
    radii: RadiiGrid | None = None
    out: str | None = None
    format: str = "json"
    strict: bool = False
    options: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        d = dataclasses.asdict(self)
        d.pop("out")
        return d


def _radii_arg(text: str) -> RadiiGrid:
    try:
        return RadiiGrid.parse(text)
    except ConfigError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def versions() -> dict:
    return {"heislab": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": ".".join(map(str, sys.version_info[:3]))}


def load_spec(path: str) -> measures.MeasureSpec:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read spec {path!r}: {exc}") from exc
    try:
        return measures.spec_from_json(data)
    except (ValueError, KeyError, TypeError) as exc:
        raise ConfigError(f"malformed spec {path!r}: {exc}") from exc


def _vector(text: str | None):
    if text is None:
        return None
    try:
        v = json.loads(text) if text.lstrip().startswith("[") else [float(s) for s in text.split(",")]
        return np.asarray(v, dtype=float)
    except ValueError as exc:
        raise ConfigError(f"cannot parse point {text!r}") from exc


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else repr(f)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if hasattr(obj, "to_json"):
        return _jsonable(obj.to_json())
    return obj


def emit_plot_table(report: dict) -> str:
    """CSV with columns point_index, r, value, abs_error in report order."""
    rows = report.get("result", {}).get("profile")
    if rows is None:
        raise ConfigError("report carries no profile data")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["point_index", "r", "value", "abs_error"])
    for row in rows:
        w.writerow([row["point_index"], repr(float(row["r"])), repr(float(row["value"])),
                    repr(float(row["abs_error"]))])
    return buf.getvalue()


# -- commands ------------------------------------------------------------------------

def _radii(cfg: RunConfig, default=uniformity.DEFAULT_RADII) -> np.ndarray:
    return cfg.radii.values() if cfg.radii else np.asarray(default, dtype=float)


def _need_spec(cfg: RunConfig) -> measures.MeasureSpec:
    if not cfg.spec:
        raise ConfigError(f"{cfg.command} needs --spec")
    return load_spec(cfg.spec)


def cmd_verify_ud(cfg: RunConfig) -> tuple[dict, bool]:
    spec = _need_spec(cfg)
    rep = uniformity.check_uniformly_distributed(
        spec, cfg.options["points"], _radii(cfg), cfg.tol or uniformity.UD_TOL, cfg.seed,
        ball_tol=cfg.ball_tol, method=cfg.options.get("method"))
    return rep.to_json(), rep.converged


def cmd_verify_uniform(cfg: RunConfig) -> tuple[dict, bool]:
    spec = _need_spec(cfg)
    rep = uniformity.check_s_uniform(
        spec, cfg.options["points"], _radii(cfg), cfg.tol or uniformity.FIT_TOL, cfg.seed,
        ball_tol=cfg.ball_tol, method=cfg.options.get("method"))
    return rep.to_json(), rep.converged


def _profile_points(cfg: RunConfig, spec) -> np.ndarray:
    pt = _vector(cfg.options.get("point"))
    if pt is not None:
        return np.atleast_2d(pt)
    return measures.sample_support(spec, cfg.options["points"], cfg.seed)


def cmd_profile(cfg: RunConfig) -> tuple[dict, bool]:
    spec = _need_spec(cfg)
    pts = _profile_points(cfg, spec)
    rows, ok = [], True
    for i, x in enumerate(pts):
        for r in _radii(cfg):
            est = ball_measure(spec, x, float(r), cfg.ball_tol, cfg.seed,
                               method=cfg.options.get("method"))
            ok &= est.converged
            rows.append({"point_index": i, "r": float(r), **est.to_json()})
    return {"points": pts, "profile": rows}, ok


def cmd_density(cfg: RunConfig) -> tuple[dict, bool]:
    spec = _need_spec(cfg)
    x = _profile_points(cfg, spec)[0]
    radii = np.sort(_radii(cfg, np.geomspace(1e-3, 1e-1, 9)))[::-1]
    est = uniformity.density(spec, x, cfg.options["s"], radii, cfg.ball_tol, cfg.seed)
    return est.to_json(), est.converged


def cmd_blowup(cfg: RunConfig) -> tuple[dict, bool]:
    spec = _need_spec(cfg)
    x0 = _vector(cfg.options.get("point"))
    if x0 is None:
        x0 = measures.sample_support(spec, 1, cfg.seed)[0]
    k, s = cfg.options["k"], cfg.options["s"]
    nu = uniformity.blowup(spec, x0, k, s)
    e = np.zeros_like(x0)
    rows, ok = [], True
    for N in _radii(cfg, (0.5, 1.0, 2.0)):
        lhs = ball_measure(nu, e, float(N), cfg.ball_tol, cfg.seed)
        rhs = ball_measure(spec, x0, float(N) / k, cfg.ball_tol, cfg.seed).scaled(k ** s)
        ok &= lhs.converged and rhs.converged
        rows.append({"N": float(N), "nu_k": lhs.value, "nu_k_error": lhs.abs_error,
                     "k^s mu": rhs.value, "k^s mu_error": rhs.abs_error,
                     "gap": abs(lhs.value - rhs.value)})
    return {"x0": x0, "k": k, "s": s, "measure": nu, "identity": rows}, ok


def cmd_equilateral(cfg: RunConfig) -> tuple[dict, bool]:
    o = cfg.options
    action = o["action"]
    if action == "check":
        pts = _vector(o.get("points_json"))
        if pts is None:
            raise ConfigError("equilateral check needs --set")
        pts = np.atleast_2d(pts)
        try:
            ok, side = equilateral.is_equilateral(pts, cfg.tol or equilateral.EQ_TOL)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        return {"points": pts, "equilateral": ok, "side": side,
                "multisets": [equilateral.distance_multiset(pts, p) for p in pts]}, True
    if action == "family":
        theta = o["theta"]
        if o.get("x0") is None:
            A = equilateral.family_ii_triangle(theta)
            return {"family": "ii", "theta": theta, "points": A,
                    "r": equilateral.family_ii_radius(theta), "t": A[2, 2],
                    "equilateral": equilateral.is_equilateral(A)[0]}, True
        sols = equilateral.family_iii_solve(o["x0"], theta)
        return {"family": "iii", "x0": o["x0"], "theta": theta, "solutions": sols,
                "family_i": equilateral.family_i_candidates()}, True
    if action == "fourth":
        A = equilateral.four_point_set()
        ok, side = equilateral.is_equilateral(A)
        return {"points": A, "w3": A[3, 2], "equilateral": ok, "side": side}, True
    if action == "search":
        res = equilateral.search_equilateral(o["k"], tuple(range(cfg.seed, cfg.seed + o["starts"])),
                                             o["iterations"])
        return res.to_json(), True
    raise ConfigError(f"unknown equilateral action {action!r}")


def cmd_cone(cfg: RunConfig) -> tuple[dict, bool]:
    o = cfg.options
    if o["action"] == "equality":
        n, k = o["n"], o["k"]
        x = _vector(o.get("point"))
        if x is None:
            x = cone.embed_cone_point([1.0, 0.0, 0.0, 1.0], n)
        res = cone.embedded_cone_ball_equality(x, o["r"], o["samples"], cfg.seed, k)
        return {"center": x, "r": o["r"], "n": n, "k": k, **res,
                "control": cone.isotropy_control(x)}, True
    if o["action"] == "product":
        base = measures.make_horizontal_line([0.0, 0.0, 0.0], [1.0, 0.0])
        nu = cone.heat_product_measure(base)
        radii = _radii(cfg, np.geomspace(2 ** -4, 2.0, 6))
        vals, ok = [], True
        for r in radii:
            est = ball_measure(nu, np.zeros(3), float(r), cfg.ball_tol, cfg.seed,
                               method=o.get("method"))
            ok &= est.converged
            vals.append(est)
        s, c, resid = uniformity.fit_growth_exponent(radii, [v.value for v in vals])
        return {"base": base, "radii": radii, "estimates": vals, "fitted_exponent": s,
                "fitted_constant": c, "fit_residual": resid,
                "expected_constant": 2 * cone.heat_product_constant(1)}, ok
    raise ConfigError(f"unknown cone action {o['action']!r}")


COMMANDS = {
    "verify-ud": cmd_verify_ud,
    "verify-uniform": cmd_verify_uniform,
    "profile": cmd_profile,
    "density": cmd_density,
    "blowup": cmd_blowup,
    "equilateral": cmd_equilateral,
    "cone": cmd_cone,
}


def run(cfg: RunConfig) -> tuple[int, str]:
    """Execute one command; returns (exit status, rendered report)."""
    result, converged = COMMANDS[cfg.command](cfg)
    report = _jsonable({"command": cfg.command, "config": cfg.to_json(), "versions": versions(),
                        "converged": bool(converged), "result": result})
    if cfg.format == "csv":
        text = emit_plot_table(report)
    else:
        text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    status = EXIT_UNCONVERGED if cfg.strict and not converged else EXIT_OK
    return status, text


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--spec", help="MeasureSpec JSON file")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--tol", type=float, default=None, help="verdict tolerance")
    common.add_argument("--ball-tol", type=float, default=DEFAULT_TOL)
    common.add_argument("--radii", type=_radii_arg, default=None, metavar="MIN:MAX:COUNT")
    common.add_argument("--out", default=None, help="report path (stdout if omitted)")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--strict", action="store_true", help="exit 3 on unconverged estimates")
    common.add_argument("--points", dest="points", type=int, default=8,
                        help="number of sampled support points")
    common.add_argument("--point", default=None, help="explicit point, e.g. 1,0,0")
    common.add_argument("--method", choices=("quadrature", "monte-carlo"), default=None)

    p = argparse.ArgumentParser(prog="heislab", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("verify-ud", parents=[common])
    sub.add_parser("verify-uniform", parents=[common])
    sub.add_parser("profile", parents=[common])
    d = sub.add_parser("density", parents=[common])
    d.add_argument("--s", type=float, required=True)
    b = sub.add_parser("blowup", parents=[common])
    b.add_argument("--k", type=float, required=True)
    b.add_argument("--s", type=float, required=True)

    eq = sub.add_parser("equilateral")
    eqs = eq.add_subparsers(dest="action", required=True)
    c = eqs.add_parser("check", parents=[common])
    c.add_argument("--set", dest="points_json", required=True, help="JSON list of points")
    f = eqs.add_parser("family", parents=[common])
    f.add_argument("--theta", type=float, required=True)
    f.add_argument("--x0", type=float, default=None, help="family (iii) parameter; omit for (ii)")
    eqs.add_parser("fourth", parents=[common])
    s = eqs.add_parser("search", parents=[common])
    s.add_argument("--k", type=int, default=5)
    s.add_argument("--starts", type=int, default=8)
    s.add_argument("--iterations", type=int, default=20000)

    cn = sub.add_parser("cone")
    cns = cn.add_subparsers(dest="action", required=True)
    e = cns.add_parser("equality", parents=[common])
    e.add_argument("--n", type=int, default=4)
    e.add_argument("--k", type=int, default=4)
    e.add_argument("--r", type=float, default=1.0)
    e.add_argument("--samples", type=int, default=10 ** 4)
    cns.add_parser("product", parents=[common])
    return p


_GLOBAL = ("command", "spec", "seed", "tol", "ball_tol", "radii", "out", "format", "strict")


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    raw = vars(ns).copy()
    opts = {k: v for k, v in raw.items() if k not in _GLOBAL}
    return RunConfig(**{k: raw[k] for k in _GLOBAL}, options=opts)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
        cfg = config_from_args(ns)
        status, text = run(cfg)
    except ValueError as exc:
        print(f"heislab: error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    if cfg.out:
        with open(cfg.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return status


if __name__ == "__main__":
    sys.exit(main())
