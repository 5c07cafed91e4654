"""Equilibrium inventory and classification.

Boundary equilibria E0=(0,0), E1=(1,0), E2=(0,1) are classified from their
eigenvalues, falling back to the sign conditions on m at the degenerate
thresholds k = k* and c = 1.  Interior equilibria are the roots of the
cubic u in (0, 1); the sign of v = u' at a root equals the sign of the
Jacobian determinant there, so v < 0 marks a saddle and v > 0 a node.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import NumericalError
from .model import (
    EPS_ROOT,
    Cubic,
    ModelParams,
    State2,
    cubic,
    jacobian,
    kinetics,
    thresholds,
)

EPS_DEG = 1e-9
ROOT_GRID_CELLS = 10_000
BISECT_TOL = 1e-12


class EquilibriumKind(str, enum.Enum):
    SOURCE = "Source"
    HYPERBOLIC_STABLE_NODE = "HyperbolicStableNode"
    HYPERBOLIC_SADDLE = "HyperbolicSaddle"
    SADDLE_NODE_UPPER = "AttractingSaddleNodeParabolicUpper"
    SADDLE_NODE_LOWER = "AttractingSaddleNodeParabolicLower"
    SADDLE_NODE_RIGHT = "AttractingSaddleNodeParabolicRight"
    SADDLE_NODE_LEFT = "AttractingSaddleNodeParabolicLeft"
    NONHYPERBOLIC_SADDLE = "NonhyperbolicSaddle"
    DEGENERATE_STABLE_NODE = "DegenerateStableNode"
    INTERIOR_SADDLE = "InteriorSaddle"
    INTERIOR_STABLE_NODE = "InteriorStableNode"
    INTERIOR_SADDLE_NODE = "InteriorSaddleNode"

    @property
    def is_saddle(self) -> bool:
        return self in (
            EquilibriumKind.HYPERBOLIC_SADDLE,
            EquilibriumKind.NONHYPERBOLIC_SADDLE,
            EquilibriumKind.INTERIOR_SADDLE,
        )


@dataclass(frozen=True)
class Equilibrium:
    label: str
    location: State2
    kind: EquilibriumKind
    eigenvalues: tuple
    residual: float
    multiplicity: int = 1
    note: Optional[str] = None

    @property
    def x(self) -> float:
        return self.location.x

    @property
    def y(self) -> float:
        return self.location.y

    def to_dict(self) -> dict:
        d = {
            "label": self.label,
            "x": self.x,
            "y": self.y,
            "kind": self.kind.value,
            "eigenvalues": [[ev.real, ev.imag] for ev in self.eigenvalues],
            "residual": self.residual,
            "multiplicity": self.multiplicity,
        }
        if self.note:
            d["note"] = self.note
        return d


def _residual(p: ModelParams, x: float, y: float) -> float:
    fx, fy = kinetics(p, (x, y))
    return float(max(abs(fx), abs(fy)))


def _eigs(p: ModelParams, x: float, y: float) -> tuple:
    ev = np.linalg.eigvals(jacobian(p, (x, y)).as_array())
    return tuple(sorted((complex(e) for e in ev), key=lambda z: (z.real, z.imag)))


def _make(p, label, x, y, kind, eigenvalues=None, multiplicity=1, note=None) -> Equilibrium:
    if eigenvalues is None:
        eigenvalues = _eigs(p, x, y)
    return Equilibrium(
        label=label,
        location=State2(x, y),
        kind=kind,
        eigenvalues=eigenvalues,
        residual=_residual(p, x, y),
        multiplicity=multiplicity,
        note=note,
    )


def boundary_equilibria(p: ModelParams) -> list:
    th = thresholds(p)
    out = [_make(p, "E0", 0.0, 0.0, EquilibriumKind.SOURCE, (complex(1.0), complex(p.b)))]

    lam = 1 / (1 + p.k) - p.a
    note = None
    if lam < -EPS_DEG:
        kind = EquilibriumKind.HYPERBOLIC_STABLE_NODE
    elif lam > EPS_DEG:
        kind = EquilibriumKind.HYPERBOLIC_SADDLE
    elif p.m > th.m_star + EPS_DEG:
        kind = EquilibriumKind.SADDLE_NODE_UPPER
    elif p.m < th.m_star - EPS_DEG:
        kind = EquilibriumKind.SADDLE_NODE_LOWER
    else:
        kind = EquilibriumKind.NONHYPERBOLIC_SADDLE
        if th.m_star <= 0:
            note = "outside proved regime (m* <= 0)"
    eig1 = tuple(sorted((complex(-p.b), complex(lam)), key=lambda z: z.real))
    out.append(_make(p, "E1", 1.0, 0.0, kind, eig1, note=note))

    lam = p.b * (1 - p.c)
    if lam < -EPS_DEG:
        kind = EquilibriumKind.HYPERBOLIC_STABLE_NODE
    elif lam > EPS_DEG:
        kind = EquilibriumKind.HYPERBOLIC_SADDLE
    elif p.m < th.m_dstar - EPS_DEG:
        kind = EquilibriumKind.SADDLE_NODE_RIGHT
    elif p.m > th.m_dstar + EPS_DEG:
        kind = EquilibriumKind.SADDLE_NODE_LEFT
    else:
        kind = EquilibriumKind.DEGENERATE_STABLE_NODE
    eig2 = tuple(sorted((complex(lam), complex(-1.0)), key=lambda z: z.real))
    out.append(_make(p, "E2", 0.0, 1.0, kind, eig2))
    return out


def _snap(val: float) -> float:
    return 0.0 if abs(val) <= EPS_ROOT else val


def _monotone_pieces(cu: Cubic):
    """Breakpoints 0 < critical points < 1 with (snapped) u values."""
    cps = [xc for xc in cu.critical_points() if 0 < xc < 1]
    pts = [0.0] + cps + [1.0]
    vals = [_snap(float(cu.u(x))) for x in pts]
    return pts, vals, set(range(1, len(pts) - 1))


def _bisect(cu: Cubic, lo: float, hi: float) -> float:
    flo = cu.u(lo)
    while hi - lo > BISECT_TOL:
        mid = 0.5 * (lo + hi)
        fm = cu.u(mid)
        if fm == 0:
            return mid
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    x = 0.5 * (lo + hi)
    # one Newton polish, kept only if it stays in the bracket and helps
    dv = cu.v(x)
    if dv != 0:
        xn = x - cu.u(x) / dv
        if lo <= xn <= hi and abs(cu.u(xn)) <= abs(cu.u(x)):
            x = xn
    return x


def _root_in_piece(cu: Cubic, lo: float, hi: float) -> float:
    # narrow with the uniform grid first, then bisect the bracketing cell
    grid = np.linspace(0.0, 1.0, ROOT_GRID_CELLS + 1)
    inner = grid[(grid > lo) & (grid < hi)]
    xs = np.concatenate(([lo], inner, [hi]))
    us = cu.u(xs)
    s = np.sign(us)
    zero = np.nonzero(s[1:-1] == 0)[0]
    if zero.size:
        return float(xs[1 + zero[0]])
    idx = np.nonzero(s[:-1] * s[1:] < 0)[0]
    i = int(idx[0])
    return _bisect(cu, float(xs[i]), float(xs[i + 1]))


def interior_roots(p: ModelParams, with_multiplicity: bool = False) -> list:
    """Roots of u in the open interval (0, 1), ascending.

    A critical point of u with |u| <= EPS_ROOT is reported once as a double
    root.  With ``with_multiplicity`` the result is a list of
    ``(x, multiplicity)`` pairs.
    """
    cu = cubic(p)
    pts, vals, interior_cps = _monotone_pieces(cu)
    roots = []
    for i, (x0, x1) in enumerate(zip(pts[:-1], pts[1:])):
        if i in interior_cps and vals[i] == 0.0:
            roots.append((x0, 2))
        u0, u1 = vals[i], vals[i + 1]
        if u0 * u1 < 0:
            roots.append((_root_in_piece(cu, x0, x1), 1))
    roots = [(x, mult) for x, mult in roots if 0 < x < 1]
    roots.sort()
    if with_multiplicity:
        return roots
    return [x for x, _ in roots]


def interior_equilibria(p: ModelParams) -> list:
    cu = cubic(p)
    out = []
    for x, mult in interior_roots(p, with_multiplicity=True):
        y = (1 - x) / p.c
        if y <= 0:
            continue
        jac = jacobian(p, (x, y))
        vx = float(cu.v(x))
        if mult == 2 or abs(vx) <= EPS_DEG:
            out.append(_make(p, "E3*", x, y, EquilibriumKind.INTERIOR_SADDLE_NODE, multiplicity=2))
        elif vx < 0:
            if not jac.det < 0:
                raise NumericalError(f"v<0 but det J={jac.det:.3e} >= 0 at x={x!r}")
            out.append(_make(p, "E1*", x, y, EquilibriumKind.INTERIOR_SADDLE))
        else:
            if not (jac.det > 0 and jac.trace < 0):
                raise NumericalError(
                    f"v>0 but (det, trace)=({jac.det:.3e}, {jac.trace:.3e}) at x={x!r}"
                )
            out.append(_make(p, "E2*", x, y, EquilibriumKind.INTERIOR_STABLE_NODE))
    return out


def all_equilibria(p: ModelParams) -> list:
    return boundary_equilibria(p) + interior_equilibria(p)


# --- Table-of-positive-equilibria decision tree -------------------------------

TABLE_ROWS = {
    1: ("m=m1, 0<c<1, 0<k<k*", ("E2*",)),
    2: ("m>m1, c>1, u(E)=0, m>m2", ("E3*",)),
    3: ("m>m1, c>1, u(E)<0, m>m2, k>=k*", ("E1*",)),
    4: ("m>m1, c>1, u(E)<0, m>m2, 0<k<k*", ("E1*", "E2*")),
    5: ("m>m1, c>1, u(E)<0, m=m2", ("E1*",)),
    6: ("m>m1, c>1, u(E)<0, 0<m<m2, k>k*", ("E1*",)),
    7: ("m>m1, 0<c<=1, 0<k<k*", ("E2*",)),
    8: ("0<m<m1, 0<c<1, 0<k<k*", ("E2*",)),
}


@dataclass(frozen=True)
class ExistenceCase:
    m_vs_m1: str
    c_vs_1: str
    u_at_E: Optional[str]
    m_vs_m2: str
    k_vs_kstar: str
    E: Optional[float]
    row: Optional[int]
    labels: tuple
    table_agrees: bool = True
    description: str = field(default="")


def _cmp(val: float, ref: float, tol: float) -> str:
    if val > ref + tol:
        return ">"
    if val < ref - tol:
        return "<"
    return "="


def _sign_str(val: float) -> str:
    return "=" if val == 0 else ("<" if val < 0 else ">")


def _analytic_labels(cu: Cubic) -> tuple:
    pts, vals, interior_cps = _monotone_pieces(cu)
    labels = []
    for i in range(len(pts) - 1):
        if i in interior_cps and vals[i] == 0.0:
            labels.append("E3*")
        if vals[i] * vals[i + 1] < 0:
            labels.append("E2*" if vals[i + 1] > vals[i] else "E1*")
    return tuple(labels)


def _table_row(m1: str, c1: str, uE: Optional[str], m2: str, kk: str) -> Optional[int]:
    if m1 == "=" and c1 == "<" and kk == "<":
        return 1
    if m1 == ">":
        if c1 == ">":
            if uE == "=" and m2 == ">":
                return 2
            if uE == "<":
                if m2 == ">":
                    return 3 if kk in (">", "=") else 4
                if m2 == "=":
                    return 5
                if kk == ">":
                    return 6
            return None
        if kk == "<":
            return 7
        return None
    if m1 == "<" and c1 == "<" and kk == "<":
        return 8
    return None


def existence_case(p: ModelParams) -> ExistenceCase:
    """Locate ``p`` in the table of positive equilibria.

    Comparisons with k* and with c = 1 are read off u(1) = c (1 - a (1 + k))
    and u(0) = c - 1 using the root tolerance, so equality cases agree with
    :func:`interior_roots`.  Parameter sets outside every table row fall back
    to an exact sign count of u on its monotone pieces.
    """
    th = thresholds(p)
    cu = cubic(p)
    m1 = _cmp(p.m, th.m1, 1e-12)
    c1 = _sign_str(_snap(cu.A4))
    kk = _sign_str(-_snap(float(cu.u(1.0))))
    # v(1) = (1 + k)(m - m2)
    m2 = _sign_str(_snap(float(cu.v(1.0))))
    E = cu.local_min_abscissa() if cu.A1 > 0 else None
    uE = None if E is None else _sign_str(_snap(float(cu.u(E))))

    analytic = _analytic_labels(cu)
    row = _table_row(m1, c1, uE, m2, kk) if cu.A1 > 0 else None
    if row is None:
        return ExistenceCase(m1, c1, uE, m2, kk, E, None, analytic, True, "outside table rows")
    desc, labels = TABLE_ROWS[row]
    return ExistenceCase(m1, c1, uE, m2, kk, E, row, labels, labels == analytic, desc)


def equilibria_near(p: ModelParams, point, radius: float, merge_tol: float = 1e-6) -> list:
    """All real equilibria of the full plane within ``radius`` of ``point``.

    Includes non-physical ones (negative coordinates): a pitchfork at a
    boundary equilibrium trades one equilibrium for three, one of which
    lies outside the quadrant.  Points closer than ``merge_tol`` count once.
    """
    cands = [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)]
    coeffs = np.trim_zeros(np.array(cubic(p).coefficients, dtype=float), "f")
    if coeffs.size > 1:
        for r in np.roots(coeffs):
            if abs(r.imag) <= 1e-9 * max(1.0, abs(r.real)):
                x = float(r.real)
                if abs(1 + p.k * x) > 1e-12:
                    cands.append((x, (1 - x) / p.c))
    px, py = point
    near = []
    for x, y in cands:
        if math.hypot(x - px, y - py) <= radius:
            if all(math.hypot(x - qx, y - qy) > merge_tol for qx, qy in near):
                near.append((x, y))
    return sorted(near)
