"""Multi-start search for near-equilateral k-point sets in (H^1, d_H).

Reports the smallest normalized variance of pairwise distances found. A small
value for k = 5 would be a candidate worth checking exactly, not a proof.

    python scripts/five_point_search.py [--k 5] [--starts 32] [--out best.json]
"""

from __future__ import annotations

import argparse
import json
from dataclasses import asdict, dataclass

from heislab import equilateral as E


@dataclass
class SearchConfig:
    k: int = 5
    starts: int = 32
    first_seed: int = 0
    iterations: int = 20000


def run(cfg: SearchConfig) -> dict:
    seeds = tuple(range(cfg.first_seed, cfg.first_seed + cfg.starts))
    res = E.search_equilateral(cfg.k, seeds, cfg.iterations)
    D = E.pairwise_distances(res.points)
    print(f"k={cfg.k}: best normalized variance {res.variance:.3e} (seed {res.best_seed})")
    print(f"pairwise distance range {D[D > 0].min():.6f} .. {D.max():.6f}")
    return {"config": asdict(cfg), "result": res.to_json()}


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--k", type=int, default=5)
    ap.add_argument("--starts", type=int, default=32)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--iterations", type=int, default=20000)
    ap.add_argument("--out")
    args = ap.parse_args()
    out = run(SearchConfig(args.k, args.starts, args.seed, args.iterations))
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(out, fh, indent=2, sort_keys=True)


if __name__ == "__main__":
    main()
