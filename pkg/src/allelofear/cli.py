"""Command-line entry point: ``allelofear <equilibria|simulate|bifurcation|verify>``.

Exit codes: 0 success, 1 verification failure, 2 configuration error,
3 numerical failure.
"""
from __future__ import annotations

import argparse
import datetime as _dt
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from ._io import atomic_write_text, csv_text, fmt17
from .acceptance import SUITES, run_suite
from .bifurcation import (
    saddle_node_points,
    scan,
    transversality_E1,
    transversality_E2,
    transversality_SN,
)
from .config import ConfigError, RunConfig, load_config, schema_json
from .equilibria import EquilibriumKind, all_equilibria, existence_case
from .errors import AllelofearError, DomainError, IntegrationError, NumericalError, PreconditionError
from .model import thresholds
from .ode import integrate, permanence_bounds, transient_time
from .pde import detect_convergence, homogeneous_candidates, integrate_pde, make_fear_field

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_default) + "\n"


def _default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    raise TypeError(f"not serialisable: {type(obj).__name__}")


def envelope(cfg: RunConfig | None, results: dict, summary: dict) -> dict:
    return {
        "tool": "allelofear",
        "version": __version__,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        "config": cfg.echo() if cfg is not None else None,
        "results": results,
        "summary": summary,
    }


# ----------------------------------------------------------------- commands


def cmd_equilibria(cfg: RunConfig) -> tuple:
    p = cfg.params
    eqs = all_equilibria(p)
    case = existence_case(p)
    th = thresholds(p)
    results = {
        "params": p.as_dict(),
        "thresholds": {"k_star": th.k_star, "m_star": th.m_star, "m_dstar": th.m_dstar,
                       "m1": th.m1, "m2": th.m2},
        "equilibria": [e.to_dict() for e in eqs],
        "existence_case": {
            "row": case.row,
            "description": case.description,
            "labels": list(case.labels),
            "table_agrees": case.table_agrees,
        },
    }
    artifacts = {}
    if "csv" in cfg.formats:
        text = "label,kind,x,y,multiplicity\n" + "".join(
            f"{e.label},{e.kind.value},{fmt17(e.x)},{fmt17(e.y)},{e.multiplicity}\n" for e in eqs)
        artifacts["equilibria.csv"] = text
    return results, {"count": len(eqs)}, artifacts


def _ode_outcome(p, end, tol: float) -> str:
    stable = [e for e in all_equilibria(p) if e.kind in (
        EquilibriumKind.INTERIOR_STABLE_NODE, EquilibriumKind.INTERIOR_SADDLE_NODE)]
    if any(math.hypot(end.x - e.x, end.y - e.y) < tol for e in stable):
        return "coexistence"
    if end.y < tol and end.x > tol:
        return "y-extinction"
    if end.x < tol and end.y > tol:
        return "x-extinction"
    return "undetermined"


def _fear_from_options(opts: dict):
    spec = dict(opts.get("fear_field") or {"kind": "constant", "value": 0.0})
    kind = spec.pop("kind")
    if kind == "tabulated" and "file" in spec:
        data = np.loadtxt(spec.pop("file"), delimiter=",", skiprows=1, ndmin=2)
        spec["values"] = data[:, -1].tolist()
    return make_fear_field(kind, spec, L=opts.get("length", math.pi), n=int(opts.get("n", 1000)))


def cmd_simulate(cfg: RunConfig) -> tuple:
    p, opts = cfg.params, cfg.options
    mode = opts.get("mode", "ode")
    init = tuple(opts.get("init", (0.5, 0.5)))
    t_end = opts.get("t_end", 1000.0)
    tol = opts.get("tol", 1e-3)
    artifacts = {}
    if mode == "ode":
        tr = integrate(p, init, t_end, opts.get("rel_tol", 1e-8), opts.get("abs_tol", 1e-10))
        end = tr.final
        outcome = _ode_outcome(p, end, tol)
        pb = permanence_bounds(p)
        results = {
            "mode": "ode",
            "final_state": list(end),
            "accepted_steps": tr.stats.accepted,
            "rejected_steps": tr.stats.rejected,
            "transient_time": transient_time(tr),
            "permanence": {"upper": pb.upper, "lower": pb.lower, "certified": pb.certified},
            "outcome": outcome,
        }
        if "csv" in cfg.formats:
            rows = np.column_stack([tr.times, tr.states])
            artifacts["trajectory.csv"] = csv_text(("t", "x", "y"), rows)
        return results, {"outcome": outcome}, artifacts
    fear = _fear_from_options(opts)
    snaps = opts.get("snapshots") or list(np.linspace(0.0, t_end, 11))
    sol = integrate_pde(p, fear, opts.get("d1", 1.0), opts.get("d2", 1.0), init, t_end, times=snaps,
                        rel_tol=opts.get("rel_tol", 1e-8), abs_tol=opts.get("abs_tol", 1e-10))
    cands, box = homogeneous_candidates(p, fear)
    conv = detect_convergence(sol, cands, tol, box)
    outcome = f"{conv.verdict} uniform" if conv.verdict != "none" else "undetermined"
    results = {
        "mode": "pde",
        "k_hat": fear.k_hat,
        "k_tilde": fear.k_tilde,
        "n": fear.n,
        "final_mean": list(conv.attained),
        "final_oscillation": list(conv.oscillation),
        "distances": conv.distances,
        "verdict": conv.verdict,
        "outcome": outcome,
    }
    if "csv" in cfg.formats:
        rows = [np.column_stack([np.full_like(sol.grid, t), sol.grid, u, v])
                for t, u, v in zip(sol.times, sol.u, sol.v)]
        artifacts["snapshots.csv"] = csv_text(("t", "x", "u", "v"), np.vstack(rows))
        artifacts["fear_field.csv"] = csv_text(("x", "k"), np.column_stack([fear.grid, fear.samples]))
    return results, {"outcome": outcome}, artifacts


def _event_transversality(p, name: str, ev) -> dict | None:
    try:
        if ev.at == "E1" and name == "k":
            return transversality_E1(p.with_(k=thresholds(p).k_star)).to_dict()
        if ev.at == "E2" and name == "c":
            return transversality_E2(p.with_(c=1.0)).to_dict()
        if ev.kind == "saddle-node" and name == "m":
            pts = saddle_node_points(p.a, p.c, p.k)
            if pts:
                E, m_sn = min(pts, key=lambda t: abs(t[1] - ev.value))
                return transversality_SN(p.with_(m=m_sn), E).to_dict()
    except (PreconditionError, DomainError) as exc:
        return {"unavailable": str(exc)}
    return None


def cmd_bifurcation(cfg: RunConfig) -> tuple:
    p, opts = cfg.params, cfg.options
    name = opts.get("parameter")
    if name is None or "lo" not in opts or "hi" not in opts:
        raise ConfigError("config.options: bifurcation needs 'parameter', 'lo' and 'hi'")
    try:
        diagram = scan(p, name, opts["lo"], opts["hi"], int(opts.get("n", 21)))
    except DomainError as exc:
        raise ConfigError(f"config.options: {exc}") from exc
    doc = diagram.to_dict()
    for ev, ev_doc in zip(diagram.events, doc["events"]):
        rep = _event_transversality(p, name, ev)
        if rep is not None:
            ev_doc["transversality"] = rep
    artifacts = {}
    if "csv" in cfg.formats:
        artifacts["events.csv"] = "value,lo,hi,kind\n" + "".join(
            f"{fmt17(ev.value)},{fmt17(ev.bracket[0])},{fmt17(ev.bracket[1])},{ev.kind}\n" for ev in diagram.events)
    summary = {"events": [f"{e.kind}@{e.value:.10g}" for e in diagram.events]}
    return doc, summary, artifacts


COMMANDS = {"equilibria": cmd_equilibria, "simulate": cmd_simulate, "bifurcation": cmd_bifurcation}


# -------------------------------------------------------------------- main


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="allelofear", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name, help=f"run the {name} analysis")
        sp.add_argument("--config", required=True, help="JSON run configuration")
        sp.add_argument("--out", help="output directory (default: config output.dir, else stdout only)")
        sp.add_argument("--format", choices=("json", "csv"), help="restrict outputs to one format")
    vp = sub.add_parser("verify", help="run acceptance checks")
    vp.add_argument("suite", nargs="?", default="all",
                    help=f"one of {', '.join(sorted(SUITES))} or a criterion number")
    vp.add_argument("--out", help="directory for the verification report")
    sub.add_parser("schema", help="print the configuration JSON schema")
    return ap


def _write_outputs(out_dir, name: str, report: dict, artifacts: dict, formats) -> None:
    out = Path(out_dir)
    if "json" in formats:
        atomic_write_text(out / f"{name}.json", _json(report))
    for fname, text in artifacts.items():
        atomic_write_text(out / fname, text)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "schema":
        sys.stdout.write(schema_json() + "\n")
        return EXIT_OK
    if args.command == "verify":
        try:
            results = run_suite(args.suite)
        except KeyError as exc:
            print(f"error: {exc.args[0]}", file=sys.stderr)
            return EXIT_CONFIG
        n_fail = sum(not r.passed for r in results)
        print(f"{len(results) - n_fail}/{len(results)} criteria passed")
        if args.out:
            rep = envelope(None, {"criteria": [r.to_dict() for r in results]},
                           {"passed": n_fail == 0, "failed": n_fail})
            atomic_write_text(Path(args.out) / "verify.json", _json(rep))
        return EXIT_OK if n_fail == 0 else EXIT_VERIFY
    try:
        cfg = load_config(args.config)
        if cfg.analysis != args.command:
            raise ConfigError(f"config.analysis: is {cfg.analysis!r} but the command is {args.command!r}")
        if args.format:
            cfg.formats = (args.format,)
        results, summary, artifacts = COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (IntegrationError, NumericalError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except AllelofearError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    report = envelope(cfg, results, summary)
    out_dir = args.out or cfg.out_dir
    if out_dir:
        _write_outputs(out_dir, args.command, report, artifacts if "csv" in cfg.formats else {}, cfg.formats)
        print(_json(summary), end="")
    else:
        print(_json(report), end="")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
