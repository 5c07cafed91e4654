"""Grid-refinement study for the reaction-diffusion runs.

For each heterogeneous-fear configuration, runs the comparison triplet at n = 250,
500 and 1000 and records (i) the largest sandwich violation and (ii) the
change of the terminal state between successive grids.  The sandwich
allowance constant C is calibrated as ten times the largest observed
violation / h^2, rounded up to one significant digit.

    python3 scripts/refinement_study.py [--out results/refinement.json] [--t-end 500]
"""
import argparse
import json
import math
from pathlib import Path

import numpy as np

from allelofear.acceptance import SANDWICH_CASES, run_sandwich_case
from allelofear.pde import SANDWICH_C


def round_up_1sig(x: float) -> float:
    if x <= 0:
        return 0.0
    e = math.floor(math.log10(x))
    return math.ceil(x / 10**e) * 10**e


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="results/refinement.json")
    ap.add_argument("--t-end", type=float, default=500.0)
    ap.add_argument("--grids", default="250,500,1000")
    args = ap.parse_args()
    grids = [int(g) for g in args.grids.split(",")]

    rows = []
    ratio_max = 0.0
    for case in SANDWICH_CASES:
        finals = {}
        for n in grids:
            rep, conv = run_sandwich_case(case, n=n, t_end=args.t_end)
            h = math.pi / n
            viol = max(rep.max_lower_violation, rep.max_upper_violation, 0.0)
            ratio_max = max(ratio_max, viol / h**2)
            finals[n] = np.concatenate([rep.hetero.u[-1][:: n // grids[0]], rep.hetero.v[-1][:: n // grids[0]]])
            rows.append({"case": case[0], "n": n, "h": h, "violation": viol, "verdict": conv.verdict})
            print(f"{case[0]:>18} n={n:5d} violation={viol:.3e} verdict={conv.verdict}")
        for coarse, fine in zip(grids, grids[1:]):
            change = float(np.max(np.abs(finals[fine] - finals[coarse])))
            bound = 4 * (math.pi / coarse) ** 2
            rows.append({"case": case[0], "refine": [coarse, fine], "terminal_change": change, "bound": bound})
            print(f"{case[0]:>18} {coarse}->{fine}: terminal change {change:.3e} (bound {bound:.3e})")

    c_cal = round_up_1sig(10 * ratio_max)
    print(f"max violation/h^2 = {ratio_max:.3e}; calibrated C = {c_cal:g}; frozen C = {SANDWICH_C:g}")
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps({"rows": rows, "max_ratio": ratio_max, "calibrated_C": c_cal,
                               "frozen_C": SANDWICH_C}, indent=2) + "\n")


if __name__ == "__main__":
    main()
