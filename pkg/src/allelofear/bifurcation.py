"""Bifurcation thresholds, Sotomayor transversality scalars and parameter scans.

Three codimension-one events organise the parameter space:

* a transcritical bifurcation at ``E1 = (1, 0)`` when ``k`` crosses
  ``k* = 1/a - 1``;
* a transcritical bifurcation at ``E2 = (0, 1)`` when ``c`` crosses 1,
  degenerating to a pitchfork when ``m = 1 - a - k``;
* a saddle-node of interior equilibria when ``m`` crosses ``m_SN``.

Sotomayor scalars are evaluated twice: by central differences of the
vector field along numerically computed null vectors, and by closed forms.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from ._io import atomic_write_text
from ._parallel import parallel_map
from .equilibria import all_equilibria, equilibria_near
from .errors import DomainError, PreconditionError
from .model import ModelParams, jacobian, kinetics, thresholds

FD_STEP = 1e-5
EPS_SCALAR = 1e-9
THRESHOLD_TOL = 1e-12
SN_TOL = 1e-10
EVENT_WIDTH = 1e-8
LOCAL_RADIUS = 1e-3
PARAM_NAMES = ("a", "b", "c", "k", "m")

SATISFIED = "satisfied"
PITCHFORK = "degenerate-to-pitchfork"
FAILED = "failed"


@dataclass
class TransversalityReport:
    kind: str
    parameter: str
    threshold: float
    point: tuple
    V: np.ndarray
    W: np.ndarray
    scalars: tuple  # numeric (W.Q_mu, W.[DQ_mu V], W.[D2Q(V,V)])
    closed_form: tuple  # same quantities from the closed forms (None where not available)
    verdict: str

    @property
    def max_discrepancy(self) -> float:
        diffs = [abs(s - c) for s, c in zip(self.scalars, self.closed_form) if c is not None]
        return max(diffs) if diffs else 0.0

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "parameter": self.parameter,
            "threshold": self.threshold,
            "point": list(self.point),
            "V": self.V.tolist(),
            "W": self.W.tolist(),
            "scalars": list(self.scalars),
            "closed_form": list(self.closed_form),
            "verdict": self.verdict,
        }


# ------------------------------------------------------------- numeric core


def _normalize(vec: np.ndarray) -> np.ndarray:
    """Scale so the last component is 1, or the first if the last vanishes."""
    vec = np.asarray(vec, dtype=float)
    if abs(vec[1]) > 1e-12 * np.linalg.norm(vec):
        return vec / vec[1]
    return vec / vec[0]


def null_vectors(J: np.ndarray) -> tuple:
    """Right and left null vectors of a singular 2x2 matrix."""
    _, _, vt = np.linalg.svd(J)
    V = vt[-1]
    _, _, vt_t = np.linalg.svd(J.T)
    W = vt_t[-1]
    return _normalize(V), _normalize(W)


def _field(p: ModelParams, s) -> np.ndarray:
    return np.array(kinetics(p, (s[0], s[1])), dtype=float)


def sotomayor_scalars(p: ModelParams, point, param: str, V, W, h: float = FD_STEP) -> tuple:
    """(W.Q_mu, W.[DQ_mu V], W.[D2Q(V,V)]) by central differences with step ``h``."""
    x0 = np.asarray(point, dtype=float)
    mu = getattr(p, param)
    p_plus, p_minus = p.with_(**{param: mu + h}), p.with_(**{param: mu - h})
    q_mu = (_field(p_plus, x0) - _field(p_minus, x0)) / (2 * h)
    dq_mu_v = (jacobian(p_plus, x0).as_array() - jacobian(p_minus, x0).as_array()) @ V / (2 * h)
    d2q_vv = (jacobian(p, x0 + h * V).as_array() - jacobian(p, x0 - h * V).as_array()) @ V / (2 * h)
    return float(W @ q_mu), float(W @ dq_mu_v), float(W @ d2q_vv)


def _transcritical_verdict(s: tuple) -> str:
    if abs(s[0]) >= EPS_SCALAR or abs(s[1]) <= EPS_SCALAR:
        return FAILED
    if abs(s[2]) <= EPS_SCALAR:
        return PITCHFORK
    return SATISFIED


# ------------------------------------------------------------ transcritical


def transversality_E1(p: ModelParams) -> TransversalityReport:
    """Sotomayor test for the exchange of stability at (1, 0) as ``k`` crosses ``1/a - 1``."""
    th = thresholds(p)
    if abs(p.k - th.k_star) >= THRESHOLD_TOL:
        raise PreconditionError(f"k={p.k!r} is not at k*={th.k_star!r}")
    point = (1.0, 0.0)
    V, W = null_vectors(jacobian(p, point).as_array())
    s = sotomayor_scalars(p, point, "k", V, W)
    a, c, m = p.a, p.c, p.m
    closed = (0.0, -a * a, (-2 * a * a + 4 * a) * c - 2 * m - 2)
    return TransversalityReport("transcritical-E1", "k", th.k_star, point, V, W, s, closed,
                                _transcritical_verdict(s))


def transversality_E2(p: ModelParams) -> TransversalityReport:
    """Sotomayor test for the exchange of stability at (0, 1) as ``c`` crosses 1."""
    if abs(p.c - 1) >= THRESHOLD_TOL:
        raise PreconditionError(f"c={p.c!r} is not at the threshold c=1")
    point = (0.0, 1.0)
    V, W = null_vectors(jacobian(p, point).as_array())
    s = sotomayor_scalars(p, point, "c", V, W)
    a, b, k, m = p.a, p.b, p.k, p.m
    r = a + k + m
    closed = (0.0, b / r, 2 * b * (-1 + r) / r**2)
    return TransversalityReport("transcritical-E2", "c", 1.0, point, V, W, s, closed,
                                _transcritical_verdict(s))


# --------------------------------------------------------------- saddle-node


def saddle_node_threshold(k: float, c: float, E: float) -> tuple:
    """Return ``(m_SN, a1)`` making ``E`` a double root of u.

    Parameters
    ----------
    k, c : fear and competition coefficients (both > 0).
    E : abscissa of the merging interior equilibria, in (0, 1).
    """
    if not 0 < E < 1:
        raise DomainError(f"E must lie in (0, 1), got {E!r}")
    if not (k > 0 and c > 0):
        raise DomainError("k and c must be > 0")
    q = E * E * k * k + 2 * E * k + 1
    m_sn = (-E * E * k * k + 2 * E * c * k - 2 * E * k + c - 1) / (E * E * q)
    num = (E**4 * k * k - 2 * E**3 * k * k + 2 * E**3 * k + 3 * E * E * c * k + E * E * k * k
           - 4 * E * E * k - 2 * E * c * k + E * E + 2 * E * c + 2 * E * k - 2 * E - c + 1)
    a1 = num / (c * E * E * q)
    return m_sn, a1


def saddle_node_points(a: float, c: float, k: float, n: int = 2000) -> list:
    """All ``(E, m_SN)`` with ``a1(E) = a`` and ``m_SN >= 0``, ascending in E."""
    grid = np.linspace(1e-6, 1 - 1e-6, n + 1)
    g = np.array([saddle_node_threshold(k, c, e)[1] - a for e in grid])
    out = []
    for i in range(n):
        if g[i] == 0.0:
            roots = [grid[i]]
        elif g[i] * g[i + 1] < 0:
            roots = [brentq(lambda e: saddle_node_threshold(k, c, e)[1] - a,
                            grid[i], grid[i + 1], xtol=1e-15, rtol=4 * np.finfo(float).eps)]
        else:
            roots = []
        for E in roots:
            m_sn = saddle_node_threshold(k, c, E)[0]
            if m_sn >= 0:
                out.append((float(E), float(m_sn)))
    return out


def sn_excluded_c(k: float, E: float) -> float:
    """The competition rate at which the saddle-node's quadratic coefficient vanishes."""
    return (E**3 * k**3 + 3 * E * E * k * k + 3 * E * k + 1) / (3 * E * E * k * k + 3 * E * k + 1)


def transversality_SN(p: ModelParams, E: float) -> TransversalityReport:
    """Sotomayor test for the merger of two interior equilibria at abscissa ``E`` as ``m`` varies."""
    m_sn, a1 = saddle_node_threshold(p.k, p.c, E)
    if abs(p.m - m_sn) > SN_TOL or abs(p.a - a1) > SN_TOL:
        raise PreconditionError(
            f"(m, a)=({p.m!r}, {p.a!r}) is not at the saddle-node pair ({m_sn!r}, {a1!r})"
        )
    c, k = p.c, p.k
    point = (E, (1 - E) / c)
    V, W = null_vectors(jacobian(p, point).as_array())
    s = sotomayor_scalars(p, point, "m", V, W)
    first = -E * (1 - E) ** 2 / c**2
    third = (2 * (E - 1) * (E**3 * k**3 - 3 * k * k * (c - 1) * E * E - 3 * k * (c - 1) * E - c + 1)
             / ((E * k + 1) ** 3 * E * E))
    closed = (first, None, third)
    excluded = abs(c - sn_excluded_c(k, E)) <= EPS_SCALAR
    ok = abs(s[0]) > EPS_SCALAR and abs(s[2]) > EPS_SCALAR and not excluded
    return TransversalityReport("saddle-node-E3*", "m", m_sn, point, V, W, s, closed,
                                SATISFIED if ok else FAILED)


# ---------------------------------------------------------------------- scan


@dataclass(frozen=True)
class InventoryItem:
    label: str
    x: float
    y: float
    kind: str
    multiplicity: int

    def to_dict(self) -> dict:
        return {"label": self.label, "x": self.x, "y": self.y, "kind": self.kind,
                "multiplicity": self.multiplicity}


@dataclass(frozen=True)
class Event:
    value: float
    bracket: tuple
    kind: str
    at: Optional[str] = None  # boundary equilibrium label for boundary events

    def to_dict(self) -> dict:
        d = {"value": self.value, "bracket": list(self.bracket), "kind": self.kind}
        if self.at:
            d["at"] = self.at
        return d


@dataclass
class BifurcationDiagram:
    parameter: str
    values: np.ndarray
    inventories: list
    events: list = field(default_factory=list)

    def interior_counts(self) -> list:
        return [sum(1 for it in inv if it.label.endswith("*")) for inv in self.inventories]

    def to_dict(self) -> dict:
        return {
            "parameter": self.parameter,
            "samples": [
                {"value": float(v), "equilibria": [it.to_dict() for it in inv]}
                for v, inv in zip(self.values, self.inventories)
            ],
            "events": [e.to_dict() for e in self.events],
        }

    def to_json(self, path) -> None:
        atomic_write_text(path, json.dumps(self.to_dict(), indent=2) + "\n")


def inventory(p: ModelParams) -> list:
    return [
        InventoryItem(e.label, float(e.x), float(e.y), e.kind.value, e.multiplicity)
        for e in all_equilibria(p)
    ]


def _signature(inv: list) -> tuple:
    return tuple((it.label, it.kind) for it in inv)


def _n_interior(inv: list) -> int:
    return sum(it.multiplicity for it in inv if it.label.endswith("*"))


def _classify(p: ModelParams, name: str, lo: float, hi: float, inv_lo, inv_hi) -> Event:
    mid = 0.5 * (lo + hi)
    kinds_lo = {it.label: it.kind for it in inv_lo if not it.label.endswith("*")}
    kinds_hi = {it.label: it.kind for it in inv_hi if not it.label.endswith("*")}
    changed = [lab for lab in ("E1", "E2") if kinds_lo.get(lab) != kinds_hi.get(lab)]
    if changed:
        lab = changed[0]
        point = (1.0, 0.0) if lab == "E1" else (0.0, 1.0)
        n_lo = len(equilibria_near(p.with_(**{name: lo}), point, LOCAL_RADIUS))
        n_hi = len(equilibria_near(p.with_(**{name: hi}), point, LOCAL_RADIUS))
        kind = "pitchfork" if abs(n_lo - n_hi) == 2 else "transcritical"
        return Event(mid, (lo, hi), kind, lab)
    if abs(_n_interior(inv_lo) - _n_interior(inv_hi)) == 2:
        return Event(mid, (lo, hi), "saddle-node")
    return Event(mid, (lo, hi), "other")


def _locate(p: ModelParams, name: str, lo: float, hi: float, inv_lo, inv_hi,
            width: float) -> Event:
    sig_lo = _signature(inv_lo)
    while hi - lo > width:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        inv_mid = inventory(p.with_(**{name: mid}))
        if _signature(inv_mid) != sig_lo:
            hi, inv_hi = mid, inv_mid
        else:
            lo, inv_lo = mid, inv_mid
    return _classify(p, name, lo, hi, inv_lo, inv_hi)


def scan(p: ModelParams, name: str, lo: float, hi: float, n: int,
         width: float = EVENT_WIDTH, workers: Optional[int] = None) -> BifurcationDiagram:
    """Sample equilibrium inventories over ``name`` in ``[lo, hi]`` and locate events.

    Each pair of neighbouring samples with different inventories brackets
    an event, which is refined by bisection to ``width`` and labelled as a
    transcritical, pitchfork or saddle-node bifurcation.
    """
    if name not in PARAM_NAMES:
        raise DomainError(f"unknown parameter {name!r}; expected one of {PARAM_NAMES}")
    if not lo < hi:
        raise DomainError(f"need lo < hi, got {lo!r}, {hi!r}")
    if n < 3:
        raise DomainError(f"n must be >= 3, got {n}")
    values = np.linspace(lo, hi, n)
    invs = parallel_map(lambda v: inventory(p.with_(**{name: float(v)})), values, workers)
    events = []
    for i in range(n - 1):
        if _signature(invs[i]) != _signature(invs[i + 1]):
            ev = _locate(p, name, float(values[i]), float(values[i + 1]),
                         invs[i], invs[i + 1], width)
            # a sample landing exactly on a threshold splits one event into two touching ones
            if events and ev.bracket[0] - events[-1].bracket[1] <= width:
                lo, hi = events[-1].bracket[0], ev.bracket[1]
                ev = _classify(p, name, lo, hi, inventory(p.with_(**{name: lo})),
                               inventory(p.with_(**{name: hi})))
                events[-1] = ev
            else:
                events.append(ev)
    return BifurcationDiagram(name, values, invs, events)


def kstar_eigenvalue(p: ModelParams) -> float:
    """Eigenvalue of the Jacobian at (1, 0) transverse to the x-axis."""
    return 1 / (1 + p.k) - p.a
