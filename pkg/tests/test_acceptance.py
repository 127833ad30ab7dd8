"""Acceptance suite: one printed PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py -s`` (or ``python tests/test_acceptance.py``)
to see the lines; under plain ``pytest -v`` they appear in the captured output of
each test as well as in the terminal summary.
"""

from __future__ import annotations

import json
import math
import time

import numpy as np
import pytest
from scipy import integrate

from heislab import core, equilateral as E, measures as M, uniformity as U
from heislab.ball import ball_measure, monte_carlo_ball, vertical_ball_closed_form
from heislab.cone import (embed_cone_point, embedded_cone_ball_equality, euclidean_cone_ball,
                          heat_product_measure, isotropy_control)

LINES: dict[int, str] = {}
MC_RUNS: dict[str, str] = {}


def record(n: int, ok: bool, started: float, detail: str) -> None:
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'} ({time.perf_counter() - started:.2f} s) {detail}"
    LINES[n] = line
    print(line)


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True)


# Monte Carlo runs used by criteria 2 and 7; criterion 9 replays them.

def mc_vertical_subgroups(seed: int = 0) -> str:
    out = {}
    radii = np.geomspace(0.05, 5.0, 5)
    for dim_w in (1, 2, 3):
        spec = M.make_subgroup_haar(np.eye(4)[:dim_w], "vertical", 2)
        x = M.sample_support(spec, 1, seed=seed)[0]
        ests = [monte_carlo_ball(spec, x, r, seed=seed + i) for i, r in enumerate(radii)]
        s, c, resid = U.fit_growth_exponent(radii, [e.value for e in ests])
        out[dim_w] = {"s": s, "c": c, "residual": resid, "estimates": [e.to_json() for e in ests]}
    return _dump(out)


CONE_POINTS = [np.zeros(4), np.array([1.0, 0, 0, 1]), np.array([0, 0.5, 0, -0.5]),
               np.array([0.6, 0.8, 0, 1.0]), np.array([0, 0, -2.0, 2.0]),
               np.array([0.3, -0.4, 1.2, -1.3])]


def mc_cone(seed: int = 0) -> str:
    r = 0.8
    ests = [euclidean_cone_ball(x, r, "monte-carlo", samples=10 ** 6, seed=seed + i)
            for i, x in enumerate(CONE_POINTS)]
    return _dump({"r": r, "estimates": [e.to_json() for e in ests]})


def mc_heat_line(seed: int = 0) -> str:
    nu = heat_product_measure(M.make_horizontal_line([0.0, 0.0, 0.0], [1.0, 0.0]))
    x = np.array([0.4, 0.0, -0.3])
    radii = np.geomspace(0.1, 2.0, 5)
    ests = [monte_carlo_ball(nu, x, r, seed=seed + i) for i, r in enumerate(radii)]
    s, c, resid = U.fit_growth_exponent(radii, [e.value for e in ests])
    return _dump({"s": s, "c": c, "residual": resid, "estimates": [e.to_json() for e in ests]})


MC_FUNCS = {"vertical-subgroups": mc_vertical_subgroups, "cone": mc_cone,
            "heat-line": mc_heat_line}


def mc(name: str) -> dict:
    if name not in MC_RUNS:
        MC_RUNS[name] = MC_FUNCS[name]()
    return json.loads(MC_RUNS[name])


# -- criteria --------------------------------------------------------------------------

def test_criterion_1_exact_atomic():
    t0 = time.perf_counter()
    devs, flips = [], []
    for m in range(3, 9):
        spec = M.make_polygon_counting(m)
        devs.append(U.check_uniformly_distributed(spec).max_rel_deviation)
        pts = spec.array.copy()
        pts[0, 0] += 1e-3
        flips.append(U.check_uniformly_distributed(M.Atomic(tuple(map(tuple, pts)))).verdict)
    elapsed = time.perf_counter() - t0
    ok = all(d == 0.0 for d in devs) and all(v == "neither" for v in flips) and elapsed < 1.0
    record(1, ok, t0, f"m=3..8 deviations {devs}, perturbed verdicts {sorted(set(flips))}")
    assert ok


def test_criterion_2_subgroup_exponents():
    t0 = time.perf_counter()
    parts = []
    axis = U.check_s_uniform(M.make_vertical_axis(1))
    ok = abs(axis.fitted_exponent - 2) < 1e-6
    parts.append(f"vertical axis s={axis.fitted_exponent:.9f}")
    for n in (1, 2, 3):
        for k in range(1, n + 1):
            spec = M.make_subgroup_haar(np.eye(2 * n)[:k], "horizontal", n)
            rep = U.check_s_uniform(spec, num_points=3)
            ok &= abs(rep.fitted_exponent - k) <= 0.01
            parts.append(f"H^{n} horizontal k={k} s={rep.fitted_exponent:.4f}")
    for dim_w, res in mc("vertical-subgroups").items():
        # W x R has topological dimension dim W + 1; its exponent is that plus one
        expected = int(dim_w) + 2
        ok &= abs(res["s"] - expected) <= 0.05
        parts.append(f"vertical dim W={dim_w} s={res['s']:.4f} (expected {expected}, MC)")
    ok &= time.perf_counter() - t0 < 30
    record(2, ok, t0, "; ".join(parts))
    assert ok


def test_criterion_3_circle_and_cylinder():
    t0 = time.perf_counter()
    radii = np.geomspace(2 ** -6, 2 ** -3, 6)
    circ = U.check_uniformly_distributed(M.make_circle_measure())
    cyl = U.check_uniformly_distributed(M.make_cylinder())
    s_circ = np.mean([U.growth_exponent(M.make_circle_measure(), x, radii)[0]
                      for x in M.sample_support(M.make_circle_measure(), 4, seed=1)])
    s_cyl = np.mean([U.growth_exponent(M.make_cylinder(), x, radii)[0]
                     for x in M.sample_support(M.make_cylinder(), 4, seed=1)])
    ok = (circ.verdict == cyl.verdict == "uniformly-distributed"
          and circ.max_rel_deviation < 1e-3 + circ.error_budget
          and cyl.max_rel_deviation < 1e-3 + cyl.error_budget
          and abs(s_circ - 2) <= 0.05 and abs(s_cyl - 3) <= 0.05
          and time.perf_counter() - t0 < 120)
    record(3, ok, t0, f"circle dev={circ.max_rel_deviation:.2e} s={s_circ:.4f}; "
                      f"cylinder dev={cyl.max_rel_deviation:.2e} s={s_cyl:.4f}")
    assert ok


DOUBLING_EXAMPLES = {
    "4-gon": M.make_polygon_counting(4),
    "7-gon": M.make_polygon_counting(7),
    "vertical axis": M.make_vertical_axis(1),
    "horizontal plane H^2": M.make_subgroup_haar(np.eye(4)[:2], "horizontal"),
    "vertical W x R H^2": M.make_subgroup_haar(np.eye(4)[:2], "vertical"),
    "circle": M.make_circle_measure(),
    "cylinder": M.make_cylinder(),
}


def test_criterion_4_doubling():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    worst, ok = {}, True
    for name, spec in DOUBLING_EXAMPLES.items():
        dim = 2 * spec.n + 1
        ratio = 0.0
        for i in range(100):
            y = M.sample_support(spec, 1, seed=int(rng.integers(1 << 30)))[0]
            x = y + rng.normal(size=dim) * rng.uniform(0, 2)
            s = rng.uniform(0.02, 1.0)
            r = s * rng.uniform(1.0 + 1e-3, 30.0)
            b = U.doubling_bound(spec, x, y, s, r)
            ok &= b["lhs"] <= b["rhs"] + 3 * b["error"]
            ratio = max(ratio, b["lhs"] / b["rhs"] if b["rhs"] > 0 else 0.0)
        worst[name] = ratio
    record(4, ok, t0, "max lhs/rhs " + ", ".join(f"{k}={v:.2e}" for k, v in worst.items()))
    assert ok


def test_criterion_5_support_functional():
    t0 = time.perf_counter()
    sq = M.make_polygon_counting(4)
    on = max(abs(U.support_functional(sq, v, sq.array[0], s))
             for v in sq.array for s in (0.5, 1, 2, 4))
    x = np.array([1.0, 0.0, 0.09])
    dist = float(np.min(core.dist_H(x, sq.array)))
    F = {s: U.support_functional(sq, x, sq.array[0], s) for s in (1, 2, 4, 8, 16, 32, 64)}
    Pj = max(abs(U.moment_polynomial(sq, j, v, sq.array[0])) for v in sq.array
             for j in range(1, 6))
    ok = on < 1e-10 and abs(dist - 0.3) < 1e-12 and min(F.values()) < -1e-3 and Pj < 1e-10
    record(5, ok, t0, f"max|F| on support={on:.1e}; off support (d=0.3) "
                      f"min F={min(F.values()):.4f} at s={min(F, key=F.get)}; max|P_j|={Pj:.1e}")
    assert ok


def test_criterion_6_equilateral_families():
    t0 = time.perf_counter()
    rng = np.random.default_rng(6)
    fam2 = [E.is_equilateral(E.family_ii_triangle(th), 1e-9)
            for th in rng.uniform(E.THETA_MIN, E.THETA_MAX, 200)]
    ok2 = all(o and abs(s - 2) <= 2e-9 for o, s in fam2)
    sols = E.family_iii_solve(0.5, 0.0)
    ok3 = (len(sols) == 1 and abs(sols[0].r - 1) < 1e-12 and sols[0].t == 0.0
           and abs(sols[0].residual) < 1e-12)
    ok4 = E.is_equilateral(E.four_point_set(), 1e-9)[0]
    fam1 = E.family_i_candidates()
    ok1 = fam1["3^(1/4)"]["equilateral"] and not fam1["(3/4)^(1/4)"]["equilateral"]
    ok = ok2 and ok3 and ok4 and ok1 and time.perf_counter() - t0 < 10
    record(6, ok, t0, f"family ii 200/200={ok2}; family iii r={sols[0].r if sols else None} "
                      f"residual={sols[0].residual if sols else None}; four-point={ok4}; "
                      f"family i: 3^(1/4) multiset {fam1['3^(1/4)']['multisets'][2]}, "
                      f"(3/4)^(1/4) multiset {fam1['(3/4)^(1/4)']['multisets'][2]}")
    assert ok


def test_criterion_7_light_cone():
    t0 = time.perf_counter()
    cone = mc("cone")
    r = cone["r"]
    ratios = [e["value"] / r ** 3 for e in cone["estimates"]]
    spread = max(ratios) / min(ratios) - 1
    quad = [euclidean_cone_ball(x, r).value / r ** 3 for x in CONE_POINTS]
    x = embed_cone_point([1.0, 0, 0, 1.0], 4)
    eq = embedded_cone_ball_equality(x, 1.0, 10 ** 4, seed=7)
    control = isotropy_control(x)
    heat = mc("heat-line")
    nu = heat_product_measure(M.make_horizontal_line([0.0, 0.0, 0.0], [1.0, 0.0]))
    radii = np.geomspace(0.1, 2.0, 5)
    s_q, c_q, _ = U.growth_exponent(nu, np.array([0.4, 0.0, -0.3]), radii)
    I1 = integrate.quad(lambda tau: (1 - tau * tau) ** 0.25, -1, 1, epsabs=1e-13)[0]
    target = 2.0 * I1
    ok = (spread < 0.02 and eq["agreement"] == 1.0 and eq["samples"] >= 10 ** 4
          and control["in_B_E"] != control["in_B_H"]
          and abs(heat["s"] - 3) <= 0.01 and abs(s_q - 3) <= 0.01
          and abs(heat["c"] / target - 1) < 0.01 and abs(c_q / target - 1) < 0.01
          and time.perf_counter() - t0 < 300)
    record(7, ok, t0, f"cone ratio spread {spread:.2%} (MC), quadrature ratios "
                      f"{min(quad):.6f}..{max(quad):.6f} vs 4pi/3={4 * math.pi / 3:.6f}; "
                      f"embedded agreement {eq['agreement']:.0%} on {eq['samples']} samples; "
                      f"heat product s={heat['s']:.4f} (MC) {s_q:.6f} (quad), "
                      f"c={heat['c']:.5f}/{c_q:.6f} vs c*I_1={target:.6f}")
    assert ok


def test_criterion_8_blowup_identity():
    t0 = time.perf_counter()
    rng = np.random.default_rng(8)
    ok, worst = True, 0.0
    cases = [(M.make_vertical_axis(1), np.array([0.0, 0.0, 0.7]), 2.0),
             (M.make_circle_measure(), np.array([1.0, 0.0, 0.0]), 2.0)]
    for spec, x0, s in cases:
        for _ in range(50):
            k, N = rng.uniform(0.5, 100), rng.uniform(0.05, 5)
            nu = U.blowup(spec, x0, k, s)
            lhs = ball_measure(nu, np.zeros(3), N)
            rhs = ball_measure(spec, x0, N / k).scaled(k ** s)
            gap = abs(lhs.value - rhs.value)
            ok &= gap <= lhs.abs_error + rhs.abs_error + 1e-12 * max(1.0, rhs.value)
            worst = max(worst, gap)
    axis, x0 = M.make_vertical_axis(1), np.array([0.0, 0.0, 0.7])
    N = np.geomspace(0.1, 10, 7)
    profiles = np.array([[ball_measure(U.blowup(axis, x0, k, 2.0), np.zeros(3), n).value
                          for n in N] for k in (1.0, 3.0, 17.0, 250.0)])
    self_sim = float(np.max(np.abs(profiles - profiles[0]) / profiles[0]))
    ok &= self_sim < 1e-9
    record(8, ok, t0, f"max identity gap {worst:.2e} over 100 cases; vertical-axis profile "
                      f"k-spread {self_sim:.1e}")
    assert ok


def test_criterion_9_determinism():
    t0 = time.perf_counter()
    same = {}
    for name, fn in MC_FUNCS.items():
        first = MC_RUNS.get(name) or fn()
        same[name] = first == fn()
    cli_same = _cli_report_bytes() == _cli_report_bytes()
    ok = all(same.values()) and cli_same
    record(9, ok, t0, ", ".join(f"{k} identical={v}" for k, v in same.items())
           + f", CLI Monte Carlo report identical={cli_same}")
    assert ok


def _cli_report_bytes() -> str:
    from heislab import cli

    cfg = cli.RunConfig("profile", spec=None, seed=11, radii=cli.RadiiGrid(0.1, 1.0, 3),
                        options={"points": 2, "point": None, "method": "monte-carlo"})
    spec = M.make_cylinder()
    cli_load = cli.load_spec
    try:
        cli.load_spec = lambda path: spec
        cfg.spec = "<cylinder>"
        return cli.run(cfg)[1]
    finally:
        cli.load_spec = cli_load


@pytest.fixture(scope="module", autouse=True)
def _summary(request):
    yield
    tr = request.config.pluginmanager.getplugin("terminalreporter")
    if tr is not None and LINES:
        tr.write_sep("=", "acceptance criteria")
        for n in sorted(LINES):
            tr.write_line(LINES[n])


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q", "-s"]))
