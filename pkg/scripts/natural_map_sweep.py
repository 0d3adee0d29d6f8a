"""Jacobian of F_c and d(F_c(p), p) along a c-schedule, written as CSV.

    python scripts/natural_map_sweep.py --n 3 --mc 20000 --out sweep.csv
"""
import argparse
import csv

import numpy as np

from natmaplab import bmeasure, hypcore
from natmaplab.natmap import backends as nb
from natmaplab.natmap import maps


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=3)
    ap.add_argument("--mc", type=int, default=20000)
    ap.add_argument("--res", type=int, default=24)
    ap.add_argument("--points", type=int, default=3)
    ap.add_argument("--deltas", type=float, nargs="*", default=[1.0, 0.5, 0.25, 0.125])
    ap.add_argument("--bump", type=float, default=0.0, help="bump amplitude (n = 2, 3 mesh backend)")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="natural_map_sweep.csv")
    args = ap.parse_args()

    n, h = args.n, args.n - 1
    if args.bump > 0:
        backend = nb.ConformalBallBackend(n, amplitude=args.bump)
        grid = bmeasure.make_grid(n, "circle_uniform", 64) if n == 2 else bmeasure.make_grid(n, "product_gauss", args.res)
    else:
        backend = nb.ExactBackend(n)
        grid = bmeasure.make_grid(n, "product_gauss", args.res) if n > 2 else bmeasure.make_grid(2, "circle_uniform", 128)
    rng = np.random.Generator(np.random.Philox(key=args.seed))
    pts = rng.uniform(-0.25, 0.25, (args.points, n))
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["c"] + [f"p{i}" for i in range(n)] + ["jacobian", "bound", "distance"])
        for d in args.deltas:
            cfg = maps.NaturalMapConfig(c=h + d, mc_count=args.mc, seed=args.seed)
            for p in pts:
                jac = maps.jacobian_Fc(backend, cfg, p, grid, signed=True)
                dist = float(hypcore.hyp_distance(maps.natural_map_Fc(backend, cfg, p, grid), p))
                w.writerow([h + d, *p, jac, ((h + d) / h) ** n, dist])
                print(f"c={h + d:.3f} jac={jac:.4f} bound={((h + d) / h) ** n:.3f} d={dist:.2e}", flush=True)


if __name__ == "__main__":
    main()
