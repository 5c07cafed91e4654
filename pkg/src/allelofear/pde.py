"""Reaction-diffusion system with a spatially varying fear coefficient.

On ``Omega = [0, L]`` with no-flux boundaries::

    u_t = d1 u_xx + b u (1 - u - c v)
    v_t = d2 v_xx + v (1/(1 + k(x) u) - v - a u - m u v)

Space is discretised on ``n + 1`` equally spaced nodes with the standard
three-point Laplacian; the Neumann condition uses mirror ghost nodes, and
the trapezoid rule then conserves the discrete mass of pure diffusion.
The semi-discrete system is stiff (eigenvalues of order ``4 d / h^2``), so
it is advanced with scipy's BDF method using an analytic sparse Jacobian.

Because the system is competitive, replacing ``k(x)`` by its minimum
``k_hat`` or maximum ``k_tilde`` brackets the non-toxic species::

    v_tilde <= v <= v_hat
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.integrate import solve_ivp

from ._io import atomic_write_text, csv_text
from ._parallel import parallel_map
from .equilibria import EquilibriumKind, interior_equilibria
from .errors import AssumptionViolation, DivergenceError, DomainError, IntegrationError, PreconditionError
from .model import EPS_CMP, ModelParams, cubic, thresholds
from .ode import integrate, trace_separatrix

MIN_NODES = 16
ZERO_SAMPLE = 1e-12
ZERO_RUN_CELLS = 3  # tolerated length (in cells) of the sampled zero set
BLOWUP = 10.0
SANDWICH_BASE_TOL = 1e-6
# Constant C in the sandwich allowance 1e-6 + C h^2, frozen from scripts/refinement_study.py
SANDWICH_C = 2e-4
DEFAULT_N = 1000


# ---------------------------------------------------------------- fear field


@dataclass(frozen=True)
class FearField:
    kind: str
    params: dict
    L: float
    grid: np.ndarray
    samples: np.ndarray
    k_hat: float
    k_tilde: float
    zero_measure: float

    @property
    def n(self) -> int:
        """Number of sub-intervals."""
        return len(self.grid) - 1

    @property
    def h(self) -> float:
        return self.L / self.n

    @property
    def is_constant(self) -> bool:
        return self.k_hat == self.k_tilde

    def to_csv(self, path) -> None:
        atomic_write_text(path, csv_text(("x", "k"), np.column_stack([self.grid, self.samples])))


def _zero_measure(samples: np.ndarray, h: float) -> float:
    """Length covered by runs of adjacent (numerically) zero samples; isolated zeros count nothing."""
    zero = np.abs(samples) <= ZERO_SAMPLE
    total, run = 0, 0
    for z in zero:
        if z:
            run += 1
        else:
            total += max(run - 1, 0)
            run = 0
    total += max(run - 1, 0)
    return total * h


def _sine_extrema(k0: float, k1: float, omega: float, L: float) -> tuple:
    """Exact min and max of k0 + k1 sin^2(omega x) over [0, L]."""
    if omega == 0:
        return k0, k0
    s_max = 1.0 if abs(omega) * L >= math.pi / 2 else math.sin(omega * L) ** 2
    lo, hi = k0, k0 + k1 * s_max
    return min(lo, hi), max(lo, hi)


def make_fear_field(kind: str, params: dict, L: float = math.pi, n: int = DEFAULT_N) -> FearField:
    """Build a fear coefficient field on ``n + 1`` nodes of ``[0, L]``.

    Parameters
    ----------
    kind : ``"constant"`` (``value``), ``"shifted_sine"``
        (``offset + amplitude * sin^2(frequency * x)``) or ``"tabulated"``
        (``values`` on the nodes; ``n`` is then taken from their count).

    Raises
    ------
    AssumptionViolation
        If a sample is negative or the field vanishes on more than a
        few grid cells.
    """
    params = dict(params)
    if kind == "tabulated":
        samples = np.asarray(params.get("values"), dtype=float)
        n = samples.size - 1
    if n < MIN_NODES:
        raise DomainError(f"need n >= {MIN_NODES} sub-intervals, got {n}")
    if not L > 0:
        raise DomainError(f"domain length must be > 0, got {L!r}")
    grid = np.linspace(0.0, L, n + 1)
    if kind == "constant":
        val = float(params["value"])
        samples = np.full(n + 1, val)
        k_hat = k_tilde = val
    elif kind == "shifted_sine":
        k0 = float(params.get("offset", 0.0))
        k1 = float(params["amplitude"])
        om = float(params["frequency"])
        samples = k0 + k1 * np.sin(om * grid) ** 2
        k_hat, k_tilde = _sine_extrema(k0, k1, om, L)
    elif kind == "tabulated":
        if not np.all(np.isfinite(samples)):
            raise DomainError("tabulated fear values must be finite")
        k_hat, k_tilde = float(samples.min()), float(samples.max())
    else:
        raise DomainError(f"unknown fear field kind {kind!r}")
    if samples.min() < 0 or k_hat < 0:
        raise AssumptionViolation(f"fear field must be nonnegative; minimum {min(samples.min(), k_hat):.6g}")
    h = L / n
    zm = _zero_measure(samples, h)
    if zm > ZERO_RUN_CELLS * h:
        raise AssumptionViolation(
            f"fear field vanishes on a set of length ~{zm:.3g}; zeros must be isolated"
        )
    return FearField(kind, params, float(L), grid, samples, float(k_hat), float(k_tilde), zm)


# ----------------------------------------------------------- discretisation


def laplacian(n: int, L: float = math.pi) -> sp.csr_matrix:
    """Three-point Laplacian on n + 1 nodes with mirror-ghost Neumann rows."""
    h = L / n
    main = np.full(n + 1, -2.0)
    upper = np.ones(n)
    lower = np.ones(n)
    upper[0] = 2.0
    lower[-1] = 2.0
    return sp.diags([lower, main, upper], [-1, 0, 1], format="csr") / (h * h)


def trapezoid_weights(n: int, L: float = math.pi) -> np.ndarray:
    w = np.full(n + 1, L / n)
    w[0] = w[-1] = 0.5 * L / n
    return w


@dataclass
class PDESolution:
    times: np.ndarray
    grid: np.ndarray
    u: np.ndarray  # (n_times, n_nodes)
    v: np.ndarray
    nfev: int = 0
    njev: int = 0

    def at(self, i: int) -> tuple:
        return self.times[i], self.u[i], self.v[i]

    def oscillation(self, i: int = -1) -> tuple:
        return float(np.ptp(self.u[i])), float(np.ptp(self.v[i])),

    def to_csv(self, path) -> None:
        rows = []
        for t, u, v in zip(self.times, self.u, self.v):
            rows.append(np.column_stack([np.full_like(self.grid, t), self.grid, u, v]))
        atomic_write_text(path, csv_text(("t", "x", "u", "v"), np.vstack(rows)))


def _initial(init, n: int, name: str) -> np.ndarray:
    arr = np.asarray(init, dtype=float)
    if arr.ndim == 0:
        arr = np.full(n + 1, float(arr))
    if arr.shape != (n + 1,):
        raise DomainError(f"initial {name} must be a scalar or have {n + 1} values")
    if np.any(arr < 0):
        raise DomainError(f"initial {name} must be nonnegative")
    return arr


def integrate_pde(
    p: ModelParams,
    fear: FearField,
    d1: float,
    d2: float,
    init,
    t_end: float,
    times: Optional[Sequence[float]] = None,
    rel_tol: float = 1e-8,
    abs_tol: float = 1e-10,
) -> PDESolution:
    """Method-of-lines solution with snapshots at ``times`` (default: 0 and ``t_end``).

    ``p.k`` is ignored; the fear coefficient comes from ``fear``.
    ``init`` is a pair ``(u0, v0)`` of scalars (flat data) or node arrays.
    """
    if not (d1 > 0 and d2 > 0):
        raise DomainError("diffusion coefficients must be > 0")
    if not t_end > 0:
        raise DomainError(f"t_end must be > 0, got {t_end!r}")
    n = fear.n
    u0 = _initial(init[0], n, "u")
    v0 = _initial(init[1], n, "v")
    N = n + 1
    lap = laplacian(n, fear.L)
    A = sp.block_diag([d1 * lap, d2 * lap], format="csr")
    k = fear.samples
    a, b, c, m = p.a, p.b, p.c, p.m

    def rhs(_t, y):
        u, v = y[:N], y[N:]
        out = A @ y
        out[:N] += b * u * (1 - u - c * v)
        out[N:] += v * (1 / (1 + k * u) - v - a * u - m * u * v)
        return out

    def jac(_t, y):
        u, v = y[:N], y[N:]
        q = 1 + k * u
        fu_u = b * (1 - 2 * u - c * v)
        fu_v = -b * c * u
        fv_u = v * (-k / q**2 - a - m * v)
        fv_v = 1 / q - 2 * v - a * u - 2 * m * u * v
        R = sp.bmat([[sp.diags(fu_u), sp.diags(fu_v)], [sp.diags(fv_u), sp.diags(fv_v)]])
        return (A + R).tocsc()

    def blowup(_t, y):
        return BLOWUP - float(np.max(y))

    blowup.terminal = True

    t_eval = np.array(sorted(set([0.0, float(t_end)] + [float(t) for t in (() if times is None else times)])))
    if t_eval[0] < 0 or t_eval[-1] > t_end:
        raise DomainError("snapshot times must lie in [0, t_end]")
    y0 = np.concatenate([u0, v0])
    if y0.max() > BLOWUP:
        raise DomainError(f"initial data exceed the blow-up guard {BLOWUP}")
    sol = solve_ivp(rhs, (0.0, float(t_end)), y0, method="BDF", t_eval=t_eval, jac=jac,
                    rtol=rel_tol, atol=abs_tol, events=blowup)
    if sol.status == 1:
        raise DivergenceError(f"a component exceeded {BLOWUP} at t={sol.t_events[0][0]:.6g}")
    if sol.status != 0:
        raise IntegrationError(f"PDE integration failed: {sol.message}")
    Y = sol.y.T
    floor = -10 * abs_tol
    if Y.min() < floor:
        raise IntegrationError(f"component undershoot {Y.min():.3e} below -10*abs_tol")
    Y = np.maximum(Y, 0.0)
    return PDESolution(sol.t, fear.grid, Y[:, :N], Y[:, N:], sol.nfev, sol.njev)


# ----------------------------------------------------------------- sandwich


def sandwich_tolerance(h: float) -> float:
    return SANDWICH_BASE_TOL + SANDWICH_C * h * h


@dataclass
class ComparisonReport:
    times: np.ndarray
    max_lower_violation: float  # max over space-time of v_tilde - v
    max_upper_violation: float  # max over space-time of v - v_hat
    tol: float
    verdict: str
    hetero: PDESolution = field(repr=False)
    hat: PDESolution = field(repr=False)
    tilde: PDESolution = field(repr=False)

    @property
    def holds(self) -> bool:
        return self.verdict == "holds"


def constant_field_like(fear: FearField, value: float) -> FearField:
    return make_fear_field("constant", {"value": value}, fear.L, fear.n) if value > 0 else FearField(
        "constant", {"value": value}, fear.L, fear.grid, np.zeros_like(fear.samples), 0.0, 0.0, 0.0
    )


def comparison_triplet(
    p: ModelParams,
    fear: FearField,
    d1: float,
    d2: float,
    init,
    t_end: float,
    times: Optional[Sequence[float]] = None,
    workers: Optional[int] = None,
) -> ComparisonReport:
    """Run the heterogeneous system with its two constant-coefficient bounds and check their ordering.

    Flat initial data are required, so that all three runs start equal.
    The constant field at ``k_hat = 0`` is allowed here even though a
    zero field fails the assumption checks for the heterogeneous system.
    """
    for comp in init:
        if np.ndim(comp) != 0:
            raise PreconditionError("comparison runs need flat (scalar) initial data")
    if times is None:
        times = np.linspace(0.0, t_end, 51)
    fields_ = [fear, constant_field_like(fear, fear.k_hat), constant_field_like(fear, fear.k_tilde)]
    runs = parallel_map(lambda f: integrate_pde(p, f, d1, d2, init, t_end, times), fields_, workers)
    het, hat, til = runs
    lower = float(np.max(til.v - het.v))
    upper = float(np.max(het.v - hat.v))
    tol = sandwich_tolerance(fear.h)
    verdict = "holds" if lower <= tol and upper <= tol else "violated"
    return ComparisonReport(het.times, lower, upper, tol, verdict, het, hat, til)


# -------------------------------------------------------------- convergence


@dataclass(frozen=True)
class ConvergenceReport:
    oscillation: tuple  # terminal (max - min) of u and v
    distances: dict  # candidate name -> terminal sup-distance
    attained: tuple  # spatial mean of (u, v) at the final time
    verdict: str


def stable_interior(p: ModelParams, k: float) -> list:
    return [e.location for e in interior_equilibria(p.with_(k=k))
            if e.kind == EquilibriumKind.INTERIOR_STABLE_NODE]


def homogeneous_candidates(p: ModelParams, fear: FearField) -> tuple:
    """Candidate terminal states and the componentwise box spanned by the kinetic interiors at k_hat and k_tilde."""
    cands = [("(1,0)", (1.0, 0.0)), ("(0,1)", (0.0, 1.0))]
    pts = stable_interior(p, fear.k_hat) + stable_interior(p, fear.k_tilde)
    for pt in pts:
        cands.append(("interior", (pt[0], pt[1])))
    box = None
    if fear.k_hat != fear.k_tilde:
        lo_pts, hi_pts = stable_interior(p, fear.k_hat), stable_interior(p, fear.k_tilde)
        if lo_pts and hi_pts:
            arr = np.array(lo_pts[:1] + hi_pts[:1])
            box = (arr.min(axis=0), arr.max(axis=0))
    return cands, box


def detect_convergence(sol: PDESolution, candidates, tol: float, interior_box=None) -> ConvergenceReport:
    """Name the homogeneous state the final snapshot sits at, or ``"none"``."""
    if len(sol.times) == 0:
        raise DomainError("empty solution series")
    if not tol > 0:
        raise DomainError(f"tol must be > 0, got {tol!r}")
    u, v = sol.u[-1], sol.v[-1]
    osc = (float(np.ptp(u)), float(np.ptp(v)))
    mean = (float(np.mean(u)), float(np.mean(v)))
    dist = {}
    for name, (cu, cv) in candidates:
        d = float(max(np.max(np.abs(u - cu)), np.max(np.abs(v - cv))))
        dist[name] = min(d, dist.get(name, math.inf))
    flat = max(osc) < tol
    hits = sorted(name for name, d in dist.items() if d < tol)
    if flat and len(hits) == 1:
        verdict = hits[0]
    elif flat and not hits and interior_box is not None:
        lo, hi = interior_box
        inside = all(lo[i] - tol <= mean[i] <= hi[i] + tol for i in range(2)) and min(mean) > tol
        verdict = "interior" if inside else "none"
    else:
        verdict = "none"
    return ConvergenceReport(osc, dist, mean, verdict)


# ------------------------------------------------------------------- wedge


def strong_competition_restrictions(p: ModelParams, k: float) -> dict:
    """Each restriction of the strong-competition regime, evaluated at fear level ``k``.

    Both variants of the ``m`` lower bound are reported: with ``-k + 1`` in
    the numerator (as the regime is usually stated) and with ``-k - 1``
    (the threshold ``m2`` of the interior-root analysis).
    """
    q = p.with_(k=k)
    th = thresholds(q)
    a, c, m = p.a, p.c, p.m
    E = cubic(q).local_min_abscissa()
    uE = float(cubic(q).u(E)) if E is not None else math.nan
    m_plus = (2 * a * c * k + a * c - k + 1) / (1 + k)
    return {
        "m > 1 - a c - k": m > th.m1,
        "c > 1": c > 1,
        "u(E) < 0": bool(uE < 0),
        "m > (2 a c k + a c - k + 1)/(1 + k)": m > m_plus,
        "k >= 1/a - 1": k >= th.k_star - EPS_CMP,
        "m > m2 = (2 a c k + a c - k - 1)/(1 + k)": m > th.m2,
    }


PRIMARY_RESTRICTIONS = (
    "m > 1 - a c - k",
    "c > 1",
    "u(E) < 0",
    "m > (2 a c k + a c - k + 1)/(1 + k)",
    "k >= 1/a - 1",
)


@dataclass
class WedgeReport:
    saddle_hat: tuple
    saddle_tilde: tuple
    v_ordering: bool  # v at the k_tilde saddle exceeds v at the k_hat saddle
    graph_gap: float  # min over sampled v of (hat separatrix u - tilde separatrix u)
    sampled_v: tuple
    ordering_holds: bool
    probes: list  # (init, expected, verdict)
    restrictions: dict
    separatrices: tuple = field(repr=False)

    @property
    def passed(self) -> bool:
        return self.v_ordering and self.ordering_holds and all(
            verdict == expected for _, expected, verdict in self.probes
        )


def separatrix_graph(sep) -> np.ndarray:
    """Both stable branches as one curve ``u = psi(v)``, sorted by v (quadrant part only)."""
    pts = sep.polyline()
    pts = pts[np.all(pts >= -1e-9, axis=1)]
    order = np.argsort(pts[:, 1], kind="stable")
    return pts[order]


def _side(curve: np.ndarray, pt) -> str:
    """``"left"`` if ``pt`` lies left of the curve ``u = psi(v)``, else ``"right"``."""
    uc = np.interp(pt[1], curve[:, 1], curve[:, 0])
    return "left" if pt[0] < uc else "right"


def wedge_check(
    p: ModelParams,
    fear: FearField,
    t_end: float,
    probes: Sequence = ((0.01, 1.5), (1.5, 0.5)),
    span: float = 200.0,
    d1: float = 1.0,
    d2: float = 1.0,
    tol: float = 1e-3,
) -> WedgeReport:
    """Check the separatrix wedge of the bistable (strong-competition) regime.

    Traces the stable manifolds of the interior saddles of the kinetic
    systems at ``k_hat`` and ``k_tilde``.  Both are increasing curves
    through the origin, written ``u = psi(v)``.  The ``k_tilde`` manifold
    must lie to the left of the ``k_hat`` one above the ``k_hat`` saddle,
    so the two bound a wedge emanating from it.  The PDE is then run from
    flat probe data: data right of both manifolds must go to (1,0), data
    left of both to (0,1).
    """
    restr = {}
    for label, k in (("k_hat", fear.k_hat), ("k_tilde", fear.k_tilde)):
        r = strong_competition_restrictions(p, k)
        restr[label] = r
        for name in PRIMARY_RESTRICTIONS:
            if not r[name]:
                raise PreconditionError(f"strong-competition restriction '{name}' fails at {label}={k:.6g}")
    saddles = []
    seps = []
    for k in (fear.k_hat, fear.k_tilde):
        q = p.with_(k=k)
        sad = [e for e in interior_equilibria(q) if e.kind == EquilibriumKind.INTERIOR_SADDLE]
        if len(sad) != 1:
            raise PreconditionError(f"expected one interior saddle at k={k:.6g}, found {len(sad)}")
        saddles.append(sad[0])
        seps.append(trace_separatrix(q, sad[0], span))
    hat_curve, til_curve = separatrix_graph(seps[0]), separatrix_graph(seps[1])
    v_lo = saddles[0].y
    v_hi = min(hat_curve[-1, 1], til_curve[-1, 1])
    vs = np.linspace(v_lo, v_hi, 400)
    gap = np.interp(vs, hat_curve[:, 1], hat_curve[:, 0]) - np.interp(vs, til_curve[:, 1], til_curve[:, 0])
    graph_gap = float(gap.min())
    results = []
    cands, _ = homogeneous_candidates(p, fear)
    for pt in probes:
        s_hat, s_til = _side(hat_curve, pt), _side(til_curve, pt)
        if s_hat == s_til == "right":
            expected = "(1,0)"
        elif s_hat == s_til == "left":
            expected = "(0,1)"
        else:
            expected = "inside wedge"
        sol = integrate_pde(p, fear, d1, d2, pt, t_end)
        results.append((tuple(pt), expected, detect_convergence(sol, cands, tol).verdict))
    return WedgeReport(
        saddle_hat=tuple(saddles[0].location),
        saddle_tilde=tuple(saddles[1].location),
        v_ordering=saddles[1].y > saddles[0].y,
        graph_gap=graph_gap,
        sampled_v=(float(v_lo), float(v_hi)),
        ordering_holds=graph_gap >= 0,
        probes=results,
        restrictions=restr,
        separatrices=tuple(seps),
    )


def kinetic_reference(p: ModelParams, k: float, init, t_end: float, times) -> np.ndarray:
    """Kinetic trajectory sampled at ``times`` (for flat-data comparisons)."""
    tr = integrate(p.with_(k=k), init, t_end, 1e-11, 1e-13, stops=times)
    idx = np.searchsorted(tr.times, times)
    return tr.states[idx]
