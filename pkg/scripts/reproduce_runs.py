"""Write the data behind the reference runs as CSV/JSON (no plotting).

    python3 scripts/reproduce_runs.py [--out results/runs] [--n 1000]

Produces time courses for the three worked examples, the saddle-node,
transcritical and pitchfork scan diagrams, the reaction-diffusion
snapshots for every heterogeneous-fear configuration, and the separatrices bounding
the strong-competition wedge.
"""
import argparse
from pathlib import Path

from allelofear import ModelParams
from allelofear._io import atomic_write_text, csv_text
from allelofear.acceptance import EXAMPLE_INIT, EXAMPLES, SADDLE_NODE_BASE, SANDWICH_CASES, WEDGE_PARAMS
from allelofear.bifurcation import saddle_node_points, scan
from allelofear.ode import integrate
from allelofear.pde import integrate_pde, make_fear_field, wedge_check


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="results/runs")
    ap.add_argument("--n", type=int, default=1000)
    ap.add_argument("--t-end", type=float, default=500.0)
    args = ap.parse_args()
    out = Path(args.out)

    for name, (base, k_lo, k_hi) in EXAMPLES.items():
        for k in (k_lo, k_hi):
            tr = integrate(ModelParams(k=k, **base), EXAMPLE_INIT, 1000.0, max_step=1.0)
            tr.to_csv(out / f"example_{name}_k{k:g}.csv")
            print(f"example {name} k={k:g}: final {tuple(round(v, 6) for v in tr.final)}")

    _, m_sn = saddle_node_points(SADDLE_NODE_BASE["a"], SADDLE_NODE_BASE["c"], SADDLE_NODE_BASE["k"])[0]
    scans = {
        "scan_m_saddle_node": (ModelParams(m=m_sn, **SADDLE_NODE_BASE), "m", 0.05, 0.25),
        "scan_k_transcritical_E1": (ModelParams(**EXAMPLES["strong-toxin"][0], k=0.2), "k", 0.05, 0.6),
        "scan_c_pitchfork_E2": (ModelParams(a=0.2, b=0.2, c=1.0, k=0.2, m=0.6), "c", 0.8, 1.2),
    }
    for fname, (p, name, lo, hi) in scans.items():
        d = scan(p, name, lo, hi, 81)
        d.to_json(out / f"{fname}.json")
        print(f"{fname}: {[(e.kind, round(e.value, 9)) for e in d.events]}")

    for label, base, (k0, k1), init, expected in SANDWICH_CASES:
        fear = make_fear_field("shifted_sine", {"offset": k0, "amplitude": k1, "frequency": 10.0}, n=args.n)
        times = [0, 1, 5, 10, 20, 50, 100, 200, args.t_end]
        sol = integrate_pde(ModelParams(k=0.0, **base), fear, 1.0, 1.0, init, args.t_end, times=times)
        sol.to_csv(out / f"pde_{label}.csv")
        print(f"{label}: terminal mean u={sol.u[-1].mean():.6f} v={sol.v[-1].mean():.6f} (expected {expected})")

    fear = make_fear_field("shifted_sine", {"offset": 4.0, "amplitude": 1.0, "frequency": 10.0}, n=args.n)
    rep = wedge_check(ModelParams(k=0.0, **WEDGE_PARAMS), fear, args.t_end)
    for tag, sep in zip(("k_hat", "k_tilde"), rep.separatrices):
        atomic_write_text(out / f"separatrix_{tag}.csv", csv_text(("u", "v"), sep.polyline()))
    print(f"wedge: saddles {rep.saddle_hat} {rep.saddle_tilde}; probes {rep.probes}")


if __name__ == "__main__":
    main()
