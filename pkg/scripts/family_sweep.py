"""Sweep the two parametrized equilateral triangle families and write CSV tables.

    python scripts/family_sweep.py --out-dir sweeps [--x0 0.5 1.0 2.0] [--count 181]
"""

from __future__ import annotations

import argparse
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from heislab import equilateral as E


@dataclass
class SweepConfig:
    count: int = 181
    x0_values: list[float] = field(default_factory=lambda: [0.25, 0.5, 1.0, 2.0])
    out_dir: Path = Path("sweeps")


def run(cfg: SweepConfig) -> None:
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    thetas = np.linspace(E.THETA_MIN, E.THETA_MAX, cfg.count)
    rows = E.sweep_family_ii(thetas)
    (cfg.out_dir / "family_ii.csv").write_text(E.rows_to_csv(rows))
    print(f"family ii: {len(rows)} rows, max residual {max(r['residual'] for r in rows):.2e}")
    # theta = +-pi/2 is excluded: the relation needs cos(theta) != 0
    thetas = np.linspace(-np.pi / 2, np.pi / 2, cfg.count + 2)[1:-1]
    for x0 in cfg.x0_values:
        rows = E.sweep_family_iii(x0, thetas)
        path = cfg.out_dir / f"family_iii_x0_{x0:g}.csv"
        path.write_text(E.rows_to_csv(rows))
        worst = max((abs(r["residual"]) for r in rows), default=float("nan"))
        print(f"family iii x0={x0:g}: {len(rows)} solutions, max |residual| {worst:.2e}")


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out-dir", type=Path, default=Path("sweeps"))
    ap.add_argument("--x0", type=float, nargs="*", default=None)
    ap.add_argument("--count", type=int, default=181)
    args = ap.parse_args()
    cfg = SweepConfig(count=args.count, out_dir=args.out_dir)
    if args.x0:
        cfg.x0_values = args.x0
    run(cfg)


if __name__ == "__main__":
    main()
