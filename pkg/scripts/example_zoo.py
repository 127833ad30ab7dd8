"""Profile every example measure and print its verdict and fitted exponent.

    python scripts/example_zoo.py [--out zoo.json] [--seed 0]
"""

from __future__ import annotations

import argparse
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from heislab import measures as M, uniformity as U
from heislab.cone import LightConeSpec


@dataclass
class ZooConfig:
    seed: int = 0
    num_points: int = 6
    radii: list[float] = field(default_factory=lambda: list(U.DEFAULT_RADII))
    small_radii: list[float] = field(default_factory=lambda: list(np.geomspace(2 ** -6, 2 ** -3, 6)))


def zoo() -> dict[str, M.MeasureSpec]:
    return {
        "square": M.make_polygon_counting(4),
        "hexagon": M.make_polygon_counting(6),
        "two triangles": M.make_polygon_counting(3, second=(3, np.pi / 3, 0.0)),
        "circle": M.make_circle_measure(),
        "circle pair": M.make_circle_pair(-0.5, 0.5),
        "vertical lines over square": M.make_vertical_lines_through_polygon(4),
        "cylinder": M.make_cylinder(),
        "vertical axis": M.make_vertical_axis(1),
        "horizontal plane in H^2": M.make_subgroup_haar(np.eye(4)[:2], "horizontal"),
        "vertical W x R in H^2, dim W=2": M.make_subgroup_haar(np.eye(4)[:2], "vertical"),
        "light cone in H^4": LightConeSpec(4).measure(),
    }


def run(cfg: ZooConfig) -> dict:
    out = {"config": asdict(cfg), "measures": {}}
    for name, spec in zoo().items():
        rep = U.check_uniformly_distributed(spec, cfg.num_points, cfg.radii, seed=cfg.seed)
        x = M.sample_support(spec, 1, seed=cfg.seed)[0]
        s_small = U.growth_exponent(spec, x, cfg.small_radii, seed=cfg.seed)[0]
        out["measures"][name] = {"verdict": rep.verdict, "deviation": rep.max_rel_deviation,
                                 "pooled_exponent": rep.fitted_exponent,
                                 "small_r_exponent": s_small}
        print(f"{name:34s} {rep.verdict:22s} dev={rep.max_rel_deviation:9.2e} "
              f"s(small r)={s_small:7.4f}")
    return out


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out")
    args = ap.parse_args()
    res = run(ZooConfig(seed=args.seed))
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(res, fh, indent=2, sort_keys=True)


if __name__ == "__main__":
    main()
