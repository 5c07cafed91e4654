"""Acceptance criteria as callable checks, shared by the test-suite and ``allelofear verify``.

Each check returns a :class:`CriterionResult` holding what was measured,
what was expected, the tolerance and the wall time against its budget.
A criterion passes only if both the numerical check and the time budget
are met.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .bifurcation import (
    saddle_node_points,
    scan,
    transversality_E1,
    transversality_E2,
)
from .equilibria import EquilibriumKind, equilibria_near, interior_equilibria, interior_roots
from .model import ModelParams, cubic, jacobian, kinetics, thresholds
from .ode import dulac_audit, integrate, limit_cycle_probe
from .pde import (
    comparison_triplet,
    detect_convergence,
    homogeneous_candidates,
    integrate_pde,
    kinetic_reference,
    make_fear_field,
    wedge_check,
)

SEED = 20240917


@dataclass
class CriterionResult:
    number: int
    name: str
    measured: str
    expected: str
    tolerance: str
    ok: bool
    runtime: float
    budget: float
    details: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.ok and self.runtime < self.budget

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return (f"[{tag}] {self.number:2d} {self.name}: measured {self.measured}; "
                f"expected {self.expected}; tol {self.tolerance}; "
                f"{self.runtime:.2f}s/{self.budget:.0f}s")

    def to_dict(self) -> dict:
        return {
            "number": self.number, "name": self.name, "measured": self.measured,
            "expected": self.expected, "tolerance": self.tolerance, "passed": self.passed,
            "runtime": self.runtime, "budget": self.budget, "details": self.details,
        }


def _timed(number: int, name: str, budget: float):
    def deco(fn):
        def run() -> CriterionResult:
            t0 = time.perf_counter()
            measured, expected, tol, ok, details = fn()
            return CriterionResult(number, name, measured, expected, tol, bool(ok),
                                   time.perf_counter() - t0, budget, details)
        run.__name__ = fn.__name__
        run.__doc__ = fn.__doc__
        run.number = number
        return run
    return deco


# ---------------------------------------------------------------- 1


SADDLE_NODE_BASE = dict(a=0.3, b=0.2, c=1.1, k=1.1)
M_SN_REFERENCE = 0.1262554731


@_timed(1, "saddle-node threshold", 5.0)
def saddle_node_threshold_reproduction():
    E, m_sn = saddle_node_points(SADDLE_NODE_BASE["a"], SADDLE_NODE_BASE["c"], SADDLE_NODE_BASE["k"])[0]
    p = ModelParams(m=m_sn, **SADDLE_NODE_BASE)
    delta = 1e-3
    counts = [len(interior_equilibria(p.with_(m=m))) for m in (m_sn + delta, m_sn, m_sn - delta)]
    diagram = scan(p, "m", 0.1, 0.2, 11)
    sn = [e for e in diagram.events if e.kind == "saddle-node"]
    loc_err = min((abs(e.value - m_sn) for e in sn), default=math.inf)
    ok = abs(m_sn - M_SN_REFERENCE) < 1e-7 and counts == [2, 1, 0] and len(sn) == 1 and loc_err < 1e-6
    return (f"m_SN={m_sn:.10f}, counts={counts}, event offset={loc_err:.1e}",
            f"m_SN={M_SN_REFERENCE}, counts=[2, 1, 0]", "1e-7 (m_SN), 1e-6 (event)", ok,
            [f"E={E:.12f}"])


# ---------------------------------------------------------------- 2


def _draw_e1(rng):
    while True:
        a, b, c, m = rng.uniform(0.15, 0.85), rng.uniform(0.1, 1.0), rng.uniform(0.5, 1.5), rng.uniform(0.05, 1.0)
        p = ModelParams(a=a, b=b, c=c, k=1 / a - 1, m=m)
        if abs(m - thresholds(p).m_star) > 0.05:
            return p


def _draw_e2(rng):
    while True:
        a, b, k, m = rng.uniform(0.1, 0.9), rng.uniform(0.1, 1.0), rng.uniform(0.1, 2.0), rng.uniform(0.05, 1.5)
        p = ModelParams(a=a, b=b, c=1.0, k=k, m=m)
        cu = cubic(p)
        E = cu.local_min_abscissa()
        if E is None or not cu.u(E) < 0:
            continue
        if abs(m - thresholds(p).m_dstar) > 0.05:
            return p


@_timed(2, "transcritical thresholds", 30.0)
def transcritical_thresholds():
    rng = np.random.default_rng(SEED)
    worst_loc, worst_scalar, details = 0.0, 0.0, []
    for _ in range(10):
        p = _draw_e1(rng)
        k_star = thresholds(p).k_star
        d = scan(p, "k", max(k_star - 0.1, 0.0), k_star + 0.1, 7)
        ev = [e for e in d.events if e.at == "E1" and e.kind == "transcritical"]
        loc = min((abs(e.value - k_star) for e in ev), default=math.inf)
        rep = transversality_E1(p)
        worst_loc, worst_scalar = max(worst_loc, loc), max(worst_scalar, rep.max_discrepancy)
        details.append(f"E1 a={p.a:.4f} c={p.c:.4f} m={p.m:.4f}: event {loc:.1e}, scalars {rep.max_discrepancy:.1e}")
    for _ in range(10):
        p = _draw_e2(rng)
        d = scan(p, "c", 0.9, 1.1, 7)
        ev = [e for e in d.events if e.at == "E2" and e.kind == "transcritical"]
        loc = min((abs(e.value - 1.0) for e in ev), default=math.inf)
        rep = transversality_E2(p)
        worst_loc, worst_scalar = max(worst_loc, loc), max(worst_scalar, rep.max_discrepancy)
        details.append(f"E2 a={p.a:.4f} k={p.k:.4f} m={p.m:.4f}: event {loc:.1e}, scalars {rep.max_discrepancy:.1e}")
    ok = worst_loc < 1e-6 and worst_scalar < 1e-8
    return (f"max event offset {worst_loc:.1e}, max scalar error {worst_scalar:.1e}",
            "events at k* and c=1; scalars equal closed forms", "1e-6 (events), 1e-8 (scalars)", ok, details)


# ---------------------------------------------------------------- 3


PITCHFORK = dict(a=0.2, b=0.2, k=0.2, m=0.6)
PITCHFORK_C = (0.9, 1.0, 1.1)
PITCHFORK_RADIUS = 0.8


def pitchfork_counts() -> list:
    """Number of real equilibria of the full plane within 0.8 of (0, 1) at c = 0.9, 1.0, 1.1."""
    return [len(equilibria_near(ModelParams(c=c, **PITCHFORK), (0.0, 1.0), PITCHFORK_RADIUS))
            for c in PITCHFORK_C]


@_timed(3, "pitchfork count signature", 5.0)
def pitchfork_count_signature():
    counts = pitchfork_counts()
    expected = [1, 1, 3]
    return (f"counts {counts} at c={list(PITCHFORK_C)}", f"{expected}", "exact", counts == expected,
            ["for c < 1 the cubic has two real roots beside x = 0 that merge into it at c = 1 "
             "and turn complex for c > 1, so the local count falls from 3 to 1 as c increases"])


# ---------------------------------------------------------------- 4


EXAMPLES = {
    "strong-toxin": (dict(a=0.8, b=0.5, c=0.5, m=0.5), 0.2, 0.4),
    "strong-competition": (dict(a=0.3, b=0.5, c=1.1, m=0.15), 1.1, 4.0),
    "weak-fear": (dict(a=0.8, b=0.5, c=0.5, m=0.1), 0.2, 0.3),
}
EXAMPLE_INIT = (0.5, 0.5)


@_timed(4, "example outcomes", 30.0)
def example_outcomes():
    ok, details, worst = True, [], 0.0
    for name, (base, k_lo, k_hi) in EXAMPLES.items():
        p = ModelParams(k=k_lo, **base)
        stable = [e for e in interior_equilibria(p) if e.kind == EquilibriumKind.INTERIOR_STABLE_NODE]
        end = integrate(p, EXAMPLE_INIT, 1000.0).final
        dist = min((math.hypot(end.x - e.x, end.y - e.y) for e in stable), default=math.inf)
        end_hi = integrate(p.with_(k=k_hi), EXAMPLE_INIT, 1000.0).final
        ok &= dist < 1e-3 and end_hi.y < 1e-3
        worst = max(worst, dist, end_hi.y)
        details.append(f"{name}: k={k_lo} distance to E2* {dist:.1e}; k={k_hi} y(1000)={end_hi.y:.1e}")
    return (f"worst distance/extinct y {worst:.1e}", "coexistence below, y-extinction above the fear threshold",
            "1e-3", ok, details)


# ---------------------------------------------------------------- 5


def _draw_weak(rng):
    while True:
        a = rng.uniform(0.1, 0.9)
        k_star = 1 / a - 1
        p = ModelParams(a=a, b=rng.uniform(0.2, 1.0), c=rng.uniform(0.1, 0.9),
                        k=rng.uniform(0.05, 0.9) * k_star, m=rng.uniform(0.0, 2.0))
        if len(interior_equilibria(p)) == 1:
            return p


@_timed(5, "global stability", 60.0)
def global_stability():
    rng = np.random.default_rng(SEED + 5)
    worst, details = 0.0, []
    for _ in range(10):
        p = _draw_weak(rng)
        eq = interior_equilibria(p)[0]
        inits = rng.uniform(0.01, 2.0, size=(20, 2))
        dists = [math.hypot(*(np.array(integrate(p, s, 3000.0).final) - np.array(eq.location))) for s in inits]
        worst = max(worst, max(dists))
        details.append(f"a={p.a:.3f} b={p.b:.3f} c={p.c:.3f} k={p.k:.3f} m={p.m:.3f}: max distance {max(dists):.1e}")
    return (f"max terminal distance {worst:.1e}", "all 200 orbits reach the unique interior equilibrium",
            "1e-3", worst < 1e-3, details)


# ---------------------------------------------------------------- 6


@_timed(6, "no limit cycles", 30.0)
def no_limit_cycles():
    rng = np.random.default_rng(SEED + 6)
    worst = -math.inf
    for _ in range(100):
        p = ModelParams(a=rng.uniform(0.01, 2), b=rng.uniform(0.01, 2), c=rng.uniform(0.01, 3),
                        k=rng.uniform(0, 5), m=rng.uniform(0, 5))
        rep = dulac_audit(p, (0.01, 1.0), (0.01, 1.0), 100)
        worst = max(worst, rep.max_value)
    cycles = 0
    for base, k_lo, k_hi in EXAMPLES.values():
        for k in (k_lo, k_hi):
            rep = limit_cycle_probe(ModelParams(k=k, **base), EXAMPLE_INIT, 1000.0)
            cycles += rep.cycle_detected
    ok = worst < 0 and cycles == 0
    return (f"max Dulac divergence {worst:.3f}, cycles detected {cycles}", "divergence < 0, no cycles",
            "strict", ok, [])


# ---------------------------------------------------------------- 7


FLAT_CASES = (
    (dict(a=0.3, b=0.2, c=1.1, m=0.15), 3.0, (2.0, 0.4)),
    (dict(a=0.8, b=0.5, c=0.5, m=0.5), 0.2, (0.5, 0.5)),
)
FLAT_TIMES = (1.0, 10.0, 100.0)


def flat_data_discrepancy(base: dict, k: float, init, n: int = 1000) -> float:
    p = ModelParams(k=k, **base)
    fear = make_fear_field("constant", {"value": k}, n=n)
    sol = integrate_pde(p, fear, 1.0, 1.0, init, FLAT_TIMES[-1], times=FLAT_TIMES)
    ref = kinetic_reference(p, k, init, FLAT_TIMES[-1], FLAT_TIMES)
    worst = 0.0
    for j, t in enumerate(FLAT_TIMES):
        i = int(np.searchsorted(sol.times, t))
        worst = max(worst, float(np.max(np.abs(sol.u[i] - ref[j, 0]))), float(np.max(np.abs(sol.v[i] - ref[j, 1]))))
    return worst


@_timed(7, "flat-data PDE/ODE equivalence", 60.0)
def flat_data_equivalence():
    worst = max(flat_data_discrepancy(base, k, init) for base, k, init in FLAT_CASES)
    return (f"max sup-norm discrepancy {worst:.1e}", "PDE equals kinetic ODE", "1e-5", worst < 1e-5, [])


# ---------------------------------------------------------------- 8


# (label, params, (offset, amplitude) of k = offset + amplitude sin^2(10 x), init, expected state)
SANDWICH_CASES = (
    ("toxic-wins-a", dict(a=0.3, b=0.2, c=1.1, m=0.15), (3.0, 1.0), (2.0, 0.4), "(1,0)"),
    ("toxic-wins-b", dict(a=0.3, b=0.2, c=1.1, m=0.15), (4.0, 1.0), (1.2, 0.4), "(1,0)"),
    ("fearful-wins-a", dict(a=0.4, b=0.2, c=2.1, m=0.4), (1.5, 1.0), (0.4, 2.0), "(0,1)"),
    ("fearful-wins-b", dict(a=0.4, b=0.2, c=2.1, m=0.4), (2.0, 1.0), (0.4, 1.2), "(0,1)"),
    ("bistable-to-v", dict(a=0.2, b=0.2, c=1.1, m=0.15), (4.0, 1.0), (0.01, 1.5), "(0,1)"),
    ("bistable-to-u", dict(a=0.2, b=0.2, c=1.1, m=0.15), (4.0, 1.0), (1.5, 0.5), "(1,0)"),
    ("weak-comp-high", dict(a=0.2, b=0.2, c=0.9, m=1.6), (0.0, 0.1), (4.0, 4.0), "interior"),
    ("weak-comp-low", dict(a=0.2, b=0.2, c=0.9, m=1.6), (0.0, 0.1), (0.1, 0.1), "interior"),
    ("mixed-to-v", dict(a=0.3, b=0.2, c=1.1, m=0.5), (1.5, 0.1), (0.05, 2.0), "(0,1)"),
    ("mixed-to-interior", dict(a=0.3, b=0.2, c=1.1, m=0.5), (1.5, 0.1), (2.0, 2.0), "interior"),
)


def run_sandwich_case(case, n: int = 1000, t_end: float = 500.0, tol: float = 1e-3):
    label, base, (k0, k1), init, expected = case
    p = ModelParams(k=0.0, **base)
    fear = make_fear_field("shifted_sine", {"offset": k0, "amplitude": k1, "frequency": 10.0}, n=n)
    rep = comparison_triplet(p, fear, 1.0, 1.0, init, t_end)
    cands, box = homogeneous_candidates(p, fear)
    conv = detect_convergence(rep.hetero, cands, tol, box)
    return rep, conv


@_timed(8, "sandwich and terminal states", 600.0)
def sandwich_certification():
    ok, details, worst = True, [], -math.inf
    for case in SANDWICH_CASES:
        rep, conv = run_sandwich_case(case)
        good = rep.holds and conv.verdict == case[4]
        ok &= good
        worst = max(worst, rep.max_lower_violation, rep.max_upper_violation)
        details.append(f"{case[0]}: violations ({rep.max_lower_violation:.1e}, {rep.max_upper_violation:.1e}) "
                       f"<= {rep.tol:.2e}; terminal {conv.verdict} (expected {case[4]})")
    return (f"max violation {worst:.1e}; terminal states as listed", "sandwich holds, expected outcomes",
            "1e-6 + C h^2; 1e-3 (terminal)", ok, details)


# ---------------------------------------------------------------- 9


WEDGE_PARAMS = dict(a=0.2, b=0.2, c=1.1, m=0.15)
E1_STAR_REF = (0.029, 0.882)
E1_DSTAR_REF = (0.022, 0.888)


@_timed(9, "strong-competition wedge", 60.0)
def wedge_structure():
    p = ModelParams(k=0.0, **WEDGE_PARAMS)
    fear = make_fear_field("shifted_sine", {"offset": 4.0, "amplitude": 1.0, "frequency": 10.0})
    rep = wedge_check(p, fear, 500.0)
    d1 = max(abs(rep.saddle_hat[i] - E1_STAR_REF[i]) for i in range(2))
    d2 = max(abs(rep.saddle_tilde[i] - E1_DSTAR_REF[i]) for i in range(2))
    ok = d1 < 5e-3 and d2 < 5e-3 and rep.passed
    return (f"E1*=({rep.saddle_hat[0]:.4f}, {rep.saddle_hat[1]:.4f}), "
            f"E1**=({rep.saddle_tilde[0]:.4f}, {rep.saddle_tilde[1]:.4f}), probes {[v for _, _, v in rep.probes]}",
            f"E1*~{E1_STAR_REF}, E1**~{E1_DSTAR_REF}, probes ['(0,1)', '(1,0)']", "5e-3", ok,
            [f"separatrix gap min {rep.graph_gap:.2e}", f"v ordering {rep.v_ordering}"])


# ---------------------------------------------------------------- 10


def dense_scan_roots(p: ModelParams, n: int = 100_000) -> list:
    """Roots of the interior cubic in (0, 1) by sign changes on a dense grid plus bisection."""
    A1, A2, A3, A4 = cubic(p).coefficients

    def u(x):
        return A1 * x**3 + A2 * x**2 + A3 * x + A4

    xs = np.linspace(0.0, 1.0, n + 1)[1:-1]
    vals = u(xs)
    roots = []
    for i in np.nonzero(vals == 0.0)[0]:
        roots.append(float(xs[i]))
    for i in np.nonzero(vals[:-1] * vals[1:] < 0)[0]:
        lo, hi = float(xs[i]), float(xs[i + 1])
        flo = u(lo)
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if mid in (lo, hi):
                break
            fm = u(mid)
            if (fm < 0) == (flo < 0):
                lo, flo = mid, fm
            else:
                hi = mid
        roots.append(0.5 * (lo + hi))
    return sorted(roots)


def jacobian_fd_error(p: ModelParams, s, h: float = 1e-6) -> float:
    J = jacobian(p, s).as_array()
    fd = np.zeros((2, 2))
    for j in range(2):
        e = np.zeros(2)
        e[j] = h
        fd[:, j] = (np.array(kinetics(p, s + e)) - np.array(kinetics(p, s - e))) / (2 * h)
    return float(np.max(np.abs(J - fd)))


@_timed(10, "oracle equivalence", 30.0)
def oracle_equivalence():
    rng = np.random.default_rng(SEED + 10)
    worst_root, mismatched = 0.0, 0
    for _ in range(1000):
        p = ModelParams(a=rng.uniform(0.01, 2), b=rng.uniform(0.01, 2), c=rng.uniform(0.01, 3),
                        k=rng.uniform(0, 5), m=rng.uniform(0, 5))
        got, ref = interior_roots(p), dense_scan_roots(p)
        if len(got) != len(ref):
            mismatched += 1
            continue
        if got:
            worst_root = max(worst_root, float(np.max(np.abs(np.array(got) - np.array(ref)))))
    worst_jac = 0.0
    for _ in range(100):
        p = ModelParams(a=rng.uniform(0.01, 2), b=rng.uniform(0.01, 2), c=rng.uniform(0.01, 3),
                        k=rng.uniform(0, 5), m=rng.uniform(0, 5))
        worst_jac = max(worst_jac, jacobian_fd_error(p, rng.uniform(0, 2, size=2)))
    ok = mismatched == 0 and worst_root < 1e-9 and worst_jac < 1e-6
    return (f"root count mismatches {mismatched}, max root diff {worst_root:.1e}, max Jacobian diff {worst_jac:.1e}",
            "identical roots and Jacobian", "1e-9 (roots), 1e-6 (Jacobian)", ok, [])


CRITERIA = (
    saddle_node_threshold_reproduction,
    transcritical_thresholds,
    pitchfork_count_signature,
    example_outcomes,
    global_stability,
    no_limit_cycles,
    flat_data_equivalence,
    sandwich_certification,
    wedge_structure,
    oracle_equivalence,
)

SUITES = {
    "saddle-node": (1,),
    "thresholds": (1, 2),
    "pitchfork": (3,),
    "examples": (4,),
    "global-stability": (5,),
    "no-cycles": (6,),
    "flat-data": (7,),
    "sandwich": (8,),
    "wedge": (9,),
    "oracles": (10,),
    "ode": (4, 5, 6),
    "pde": (7, 8, 9),
    "all": tuple(range(1, 11)),
}


def select(suite: str) -> list:
    """Criteria for a suite name, a single criterion number, or ``all``."""
    if suite in SUITES:
        nums = SUITES[suite]
    elif suite.isdigit() and 1 <= int(suite) <= len(CRITERIA):
        nums = (int(suite),)
    else:
        raise KeyError(f"unknown suite {suite!r}; choose from {sorted(SUITES)} or 1-{len(CRITERIA)}")
    return [c for c in CRITERIA if c.number in nums]


def run_suite(suite: str = "all", echo=print) -> list:
    results = []
    for crit in select(suite):
        res = crit()
        if echo:
            echo(res.line())
        results.append(res)
    return results
