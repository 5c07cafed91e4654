"""Time integration of the kinetic system and qualitative audits of its flow.

The integrator is the Dormand-Prince pair from :mod:`allelofear.rk`.
Around it sit the permanence bounds, a Dulac-function audit ruling out
closed orbits, stable-manifold tracing for interior saddles, basin
labelling and a recurrence probe for periodic orbits.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ._io import atomic_write_text, csv_text
from ._parallel import parallel_map
from .equilibria import Equilibrium, all_equilibria
from .errors import DomainError, IntegrationError, KindError, NumericalError
from .model import ModelParams, State2, jacobian, kinetics
from .rk import StepStats, dopri5

MAX_TOL = 1e-2
UNDERSHOOT_FACTOR = 10.0
SEPARATRIX_DELTA = 1e-6
BASIN_WINDOW = 0.05
UNDECIDED = "undecided"


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # shape (n, 2)
    stats: StepStats = field(default_factory=StepStats)
    left_box: bool = False

    @property
    def x(self) -> np.ndarray:
        return self.states[:, 0]

    @property
    def y(self) -> np.ndarray:
        return self.states[:, 1]

    @property
    def final(self) -> State2:
        return State2(float(self.states[-1, 0]), float(self.states[-1, 1]))

    def __len__(self) -> int:
        return len(self.times)

    def to_csv(self, path) -> None:
        rows = np.column_stack([self.times, self.states])
        atomic_write_text(path, csv_text(("t", "x", "y"), rows))


def _check_tol(rel_tol: float, abs_tol: float):
    for name, val in (("rel_tol", rel_tol), ("abs_tol", abs_tol)):
        if not 0 < val <= MAX_TOL:
            raise DomainError(f"{name} must lie in (0, {MAX_TOL}], got {val!r}")


def integrate(
    p: ModelParams,
    init,
    t_end: float,
    rel_tol: float = 1e-8,
    abs_tol: float = 1e-10,
    *,
    stops: Sequence[float] = (),
    max_step: float = math.inf,
    reverse: bool = False,
    box: Optional[float] = None,
    allow_negative: bool = False,
) -> Trajectory:
    """Integrate the kinetic system from ``init`` over ``[0, t_end]``.

    Parameters
    ----------
    stops : times the integrator must land on exactly.
    reverse : integrate the negated field (reversed time); ``times`` then
        count reversed time.
    box : stop early once either component leaves ``[-box, box]``.
    allow_negative : skip the first-quadrant undershoot policy (used for
        reversed-time separatrix branches, which may leave the quadrant).

    Undershoots in ``(-10 abs_tol, 0)`` are clamped to zero; anything
    further below zero raises :class:`IntegrationError`.
    """
    x0, y0 = float(init[0]), float(init[1])
    if not allow_negative and (x0 < 0 or y0 < 0):
        raise DomainError(f"initial state must be nonnegative, got {(x0, y0)!r}")
    if not t_end > 0:
        raise DomainError(f"t_end must be > 0, got {t_end!r}")
    _check_tol(rel_tol, abs_tol)
    sign = -1.0 if reverse else 1.0

    def rhs(_t, s):
        dx, dy = kinetics(p, (s[0], s[1]))
        return np.array([sign * dx, sign * dy])

    floor = -UNDERSHOOT_FACTOR * abs_tol

    def post(t, s):
        if box is not None and (abs(s[0]) > box or abs(s[1]) > box):
            return "stop"
        if allow_negative:
            return None
        if s[0] < 0 or s[1] < 0:
            if s[0] < floor or s[1] < floor:
                raise IntegrationError(
                    f"component undershoot {min(s):.3e} below -10*abs_tol at t={t:.6g}"
                )
            return np.maximum(s, 0.0)
        return None

    times, states, stats, stopped = dopri5(
        rhs, 0.0, [x0, y0], float(t_end), rel_tol, abs_tol,
        stops=stops, max_step=max_step, post_step=post,
    )
    return Trajectory(times, states, stats, left_box=stopped)


def transient_time(traj: Trajectory, tol: float = 1e-6, steps: int = 50) -> Optional[float]:
    """First time after which the sup-norm change between consecutive accepted
    steps stays below ``tol`` for ``steps`` consecutive steps, or None."""
    diffs = np.max(np.abs(np.diff(traj.states, axis=0)), axis=1)
    small = diffs < tol
    run = 0
    for i, ok in enumerate(small):
        run = run + 1 if ok else 0
        if run >= steps:
            return float(traj.times[i + 1 - steps])
    return None


# ---------------------------------------------------------------- permanence


@dataclass(frozen=True)
class PermanenceBounds:
    upper: float
    lower: float
    certified: bool


def permanence_bounds(p: ModelParams) -> PermanenceBounds:
    """Ultimate bounds ``lower <= liminf``, ``limsup <= upper`` for both species.

    ``lower = min(1 - c, (1/(1+k) - a)/(1+m))``; the bound is certified only
    when 0 < k < 1/a - 1 and 0 < c < 1.
    """
    lower = min(1 - p.c, (1 / (1 + p.k) - p.a) / (1 + p.m))
    k_star = 1 / p.a - 1
    certified = 0 < p.k < k_star and 0 < p.c < 1
    return PermanenceBounds(upper=1.0, lower=lower, certified=bool(certified and lower > 0))


# --------------------------------------------------------------------- Dulac


@dataclass(frozen=True)
class DulacReport:
    max_value: float
    argmax: tuple
    n: int

    @property
    def negative(self) -> bool:
        return self.max_value < 0


def dulac_divergence(p: ModelParams, x, y):
    """Divergence of ``H f`` with Dulac function ``H = 1/(x y)``."""
    return -p.b / y + (-p.m * x - 1) / x


def dulac_audit(p: ModelParams, x_range=(0.01, 1.0), y_range=(0.01, 1.0), n: int = 100) -> DulacReport:
    """Evaluate the Dulac divergence on an n-by-n grid and check it is negative.

    Raises
    ------
    NumericalError
        If the grid maximum is not strictly negative.
    """
    if n < 2:
        raise DomainError(f"n must be >= 2, got {n}")
    for lo, hi in (x_range, y_range):
        if not 0 < lo < hi < math.inf:
            raise DomainError(f"grid range must lie in (0, inf), got {(lo, hi)!r}")
    xs = np.linspace(*x_range, n)
    ys = np.linspace(*y_range, n)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    D = dulac_divergence(p, X, Y)
    idx = np.unravel_index(np.argmax(D), D.shape)
    report = DulacReport(float(D[idx]), (float(X[idx]), float(Y[idx])), n)
    if not report.negative:
        raise NumericalError(f"Dulac divergence reached {report.max_value:.3e} at {report.argmax}")
    return report


# ---------------------------------------------------------------- separatrix


@dataclass
class Separatrix:
    saddle: Equilibrium
    eigenvector: np.ndarray
    branches: list  # two arrays of shape (n, 2)
    arclength: list  # cumulative arc length per branch

    def polyline(self) -> np.ndarray:
        """Both branches joined through the saddle into one polyline."""
        return np.vstack([self.branches[0][::-1], self.branches[1]])


def stable_eigenvector(p: ModelParams, point) -> np.ndarray:
    J = jacobian(p, point).as_array()
    vals, vecs = np.linalg.eig(J)
    if abs(vals[0] - vals[1]) < 1e-12 or abs(np.linalg.det(vecs)) < 1e-10:
        raise NumericalError("Jacobian is defective at the saddle")
    idx = int(np.argmin(vals.real))
    if not vals[idx].real < 0:
        raise NumericalError("no stable direction at the supplied point")
    vec = vecs[:, idx].real
    return vec / np.linalg.norm(vec)


def trace_separatrix(
    p: ModelParams,
    saddle: Equilibrium,
    span: float,
    delta: float = SEPARATRIX_DELTA,
    rel_tol: float = 1e-10,
    abs_tol: float = 1e-12,
    box: float = 3.0,
) -> Separatrix:
    """Trace both branches of the stable manifold of ``saddle`` backwards in time."""
    if not saddle.kind.is_saddle:
        raise KindError(f"{saddle.label} is a {saddle.kind.value}, not a saddle")
    if not span > 0:
        raise DomainError(f"span must be > 0, got {span!r}")
    vec = stable_eigenvector(p, saddle.location)
    base = np.array(saddle.location, dtype=float)
    branches, arcs = [], []
    for sgn in (1.0, -1.0):
        start = base + sgn * delta * vec
        tr = integrate(p, start, span, rel_tol, abs_tol, reverse=True, box=box, allow_negative=True)
        pts = np.vstack([base, tr.states])
        seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
        branches.append(pts)
        arcs.append(np.concatenate([[0.0], np.cumsum(seg)]))
    return Separatrix(saddle, vec, branches, arcs)


# -------------------------------------------------------------------- basins


def attractor_label(eq: Equilibrium) -> str:
    return f"({eq.x:.6g},{eq.y:.6g})"


def _classify_one(p, candidates, init, t_end, tol, rel_tol, abs_tol):
    init = np.asarray(init, dtype=float)
    for eq in candidates:
        if np.linalg.norm(init - eq.location) == 0.0:
            return eq.label
    t_win = (1 - BASIN_WINDOW) * t_end
    tr = integrate(p, init, t_end, rel_tol, abs_tol, stops=(t_win,))
    tail = tr.states[tr.times >= t_win]
    for eq in candidates:
        d = np.linalg.norm(tail - np.asarray(eq.location), axis=1)
        if np.all(d < tol):
            return eq.label
    return UNDECIDED


def basin_classify(
    p: ModelParams,
    inits,
    t_end: float,
    tol: float,
    rel_tol: float = 1e-8,
    abs_tol: float = 1e-10,
    workers: Optional[int] = None,
) -> np.ndarray:
    """Label each initial state by the equilibrium its forward orbit settles at.

    An orbit counts as settled when it stays within ``tol`` of an
    equilibrium over the final 5% of ``[0, t_end]``; otherwise the cell is
    ``"undecided"``.  ``inits`` has shape ``(..., 2)``; the result has the
    leading shape and holds equilibrium labels (``"E0"``, ``"E2*"``...).
    """
    arr = np.asarray(inits, dtype=float)
    if arr.shape[-1] != 2:
        raise DomainError("inits must have trailing dimension 2")
    if np.any(arr < 0) or np.any(arr > 2):
        raise DomainError("initial states must lie in [0, 2]^2")
    if not tol > 0:
        raise DomainError(f"tol must be > 0, got {tol!r}")
    candidates = all_equilibria(p)
    flat = arr.reshape(-1, 2)
    labels = parallel_map(
        lambda s: _classify_one(p, candidates, s, t_end, tol, rel_tol, abs_tol), flat, workers
    )
    return np.array(labels, dtype=object).reshape(arr.shape[:-1])


# ------------------------------------------------------------------ recurrence


@dataclass(frozen=True)
class CycleReport:
    cycle_detected: bool
    n_states: int
    closest_return: float
    detail: str = ""


def _point_segment_dist(pt, a, b):
    ab = b - a
    denom = np.einsum("ij,ij->i", ab, ab)
    t = np.where(denom > 0, np.einsum("ij,ij->i", pt - a, ab) / np.where(denom > 0, denom, 1), 0.0)
    t = np.clip(t, 0.0, 1.0)
    proj = a + t[:, None] * ab
    return np.linalg.norm(pt - proj, axis=1)


def recurrence_scan(p: ModelParams, states: np.ndarray, tol: float = 1e-6,
                    excursion: float = 1e-4, min_speed: float = 1e-8) -> CycleReport:
    """Look for a later state that returns within ``tol`` of an earlier path segment.

    A return counts only if the orbit moved at least ``excursion`` away in
    between, the state is not (numerically) an equilibrium and the
    headings at both visits agree.
    """
    n = len(states)
    best = math.inf
    fx, fy = kinetics(p, (states[:, 0], states[:, 1]))
    field_ = np.column_stack([fx, fy])
    speed = np.linalg.norm(field_, axis=1)
    for j in range(2, n):
        if speed[j] < min_speed:
            continue
        a, b = states[: j - 1], states[1:j]
        d = _point_segment_dist(states[j], a, b)
        best = min(best, float(d.min()))
        for i in np.nonzero(d < tol)[0]:
            far = np.max(np.linalg.norm(states[i:j] - states[j], axis=1))
            if far < excursion:
                continue
            if float(np.dot(field_[i], field_[j])) > 0:
                return CycleReport(True, n, float(d[i]), f"state {j} returns to segment {i}")
    return CycleReport(False, n, best, "no cycle detected")


def limit_cycle_probe(p: ModelParams, init, t_end: float, tol: float = 1e-6,
                      rel_tol: float = 1e-9, abs_tol: float = 1e-12) -> CycleReport:
    """Integrate from a positive ``init`` and scan the orbit for recurrence."""
    if not (init[0] > 0 and init[1] > 0):
        raise DomainError(f"init must be strictly positive, got {tuple(init)!r}")
    tr = integrate(p, init, t_end, rel_tol, abs_tol)
    return recurrence_scan(p, tr.states, tol=tol)
