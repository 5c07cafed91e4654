"""Basin-of-attraction map for the kinetic system on a grid of initial data.

    python3 scripts/basin_map.py --a 0.2 --b 0.2 --c 1.1 --k 4 --m 0.15 --size 41

Writes ``x,y,label`` rows (label = equilibrium reached or "undecided").
"""
import argparse
from pathlib import Path

import numpy as np

from allelofear import ModelParams
from allelofear._io import atomic_write_text
from allelofear.ode import basin_classify


def main():
    ap = argparse.ArgumentParser()
    for name, default in (("a", 0.2), ("b", 0.2), ("c", 1.1), ("k", 4.0), ("m", 0.15)):
        ap.add_argument(f"--{name}", type=float, default=default)
    ap.add_argument("--size", type=int, default=41)
    ap.add_argument("--t-end", type=float, default=2000.0)
    ap.add_argument("--tol", type=float, default=1e-2)
    ap.add_argument("--out", default="results/basins.csv")
    args = ap.parse_args()

    p = ModelParams(a=args.a, b=args.b, c=args.c, k=args.k, m=args.m)
    xs = np.linspace(0.0, 2.0, args.size)
    X, Y = np.meshgrid(xs, xs, indexing="ij")
    labels = basin_classify(p, np.stack([X, Y], axis=-1), args.t_end, args.tol)
    lines = ["x,y,label"] + [f"{x:.6g},{y:.6g},{lab}" for x, y, lab in zip(X.ravel(), Y.ravel(), labels.ravel())]
    atomic_write_text(Path(args.out), "\n".join(lines) + "\n")
    uniq, counts = np.unique(labels, return_counts=True)
    print(dict(zip(uniq.tolist(), counts.tolist())))


if __name__ == "__main__":
    main()
