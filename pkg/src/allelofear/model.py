"""Allelopathic competition model with a fear effect on the non-toxic species.

Nondimensional system::

    dx/dt = b x (1 - x - c y)
    dy/dt = y (1/(1 + k x) - y - a x - m x y)

``x`` is the toxin-producing species, ``y`` the non-toxic one that is
afraid of ``x``.  Interior equilibria lie on ``y = (1 - x)/c`` at the
roots of the cubic ``u(x) = A1 x^3 + A2 x^2 + A3 x + A4``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace
from typing import NamedTuple

import numpy as np

from .errors import DomainError, PreconditionError

# "is a root" and "identity holds" tolerances
EPS_ROOT = 1e-10
EPS_CMP = 1e-8


@dataclass(frozen=True)
class ModelParams:
    a: float
    b: float
    c: float
    k: float
    m: float

    def __post_init__(self):
        for name in ("a", "b", "c", "k", "m"):
            val = getattr(self, name)
            if not math.isfinite(val):
                raise DomainError(f"parameter {name} must be finite, got {val!r}")
        for name in ("a", "b", "c"):
            if getattr(self, name) <= 0:
                raise DomainError(f"parameter {name} must be > 0, got {getattr(self, name)!r}")
        for name in ("k", "m"):
            if getattr(self, name) < 0:
                raise DomainError(f"parameter {name} must be >= 0, got {getattr(self, name)!r}")

    def with_(self, **changes) -> "ModelParams":
        return replace(self, **changes)

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def require_positive_fear_and_toxin(self):
        """Raise unless k > 0 and m > 0 (needed by results that assume both)."""
        if self.k <= 0:
            raise DomainError(f"parameter k must be > 0 here, got {self.k!r}")
        if self.m <= 0:
            raise DomainError(f"parameter m must be > 0 here, got {self.m!r}")


@dataclass(frozen=True)
class RawParams:
    """Dimensional rates; k1 = r1/alpha1 and k2 = r2/alpha2 are carrying capacities."""

    r1: float
    r2: float
    alpha1: float
    alpha2: float
    beta1: float
    beta2: float
    eta: float
    xi: float

    @property
    def k1(self) -> float:
        return self.r1 / self.alpha1

    @property
    def k2(self) -> float:
        return self.r2 / self.alpha2


class State2(NamedTuple):
    x: float
    y: float


@dataclass(frozen=True)
class Jacobian2:
    B1: float
    B2: float
    B3: float
    B4: float

    @property
    def trace(self) -> float:
        return self.B1 + self.B4

    @property
    def det(self) -> float:
        return self.B1 * self.B4 - self.B2 * self.B3

    def as_array(self) -> np.ndarray:
        return np.array([[self.B1, self.B2], [self.B3, self.B4]])


@dataclass(frozen=True)
class Cubic:
    """u(x) whose roots in (0, 1) are the interior equilibrium abscissae."""

    A1: float
    A2: float
    A3: float
    A4: float

    @property
    def coefficients(self) -> tuple:
        return (self.A1, self.A2, self.A3, self.A4)

    @property
    def derivative_coefficients(self) -> tuple:
        return (3 * self.A1, 2 * self.A2, self.A3)

    @property
    def discriminant(self) -> float:
        """Discriminant 4 A2^2 - 12 A1 A3 of v = u'."""
        return 4 * self.A2**2 - 12 * self.A1 * self.A3

    def u(self, x):
        return ((self.A1 * x + self.A2) * x + self.A3) * x + self.A4

    def v(self, x):
        return (3 * self.A1 * x + 2 * self.A2) * x + self.A3

    def critical_points(self) -> list:
        """Real roots of v, ascending (empty if none)."""
        return _real_quadratic_roots(3 * self.A1, 2 * self.A2, self.A3)

    def local_min_abscissa(self):
        """Critical point where u has a local minimum (u'' > 0), or None.

        For A1 > 0 this is the larger root of v.  Note that it equals
        (-A2 + sqrt(Delta)/2) / (3 A1): the half on sqrt(Delta) is needed
        because Delta is defined as 4 A2^2 - 12 A1 A3.
        """
        for xc in self.critical_points():
            if 6 * self.A1 * xc + 2 * self.A2 > 0:
                return xc
        return None


def _real_quadratic_roots(qa: float, qb: float, qc: float) -> list:
    if qa == 0:
        if qb == 0:
            return []
        return [-qc / qb]
    disc = qb * qb - 4 * qa * qc
    if disc < 0:
        return []
    sq = math.sqrt(disc)
    # cancellation-free form
    q = -0.5 * (qb + math.copysign(sq, qb))
    r1 = q / qa
    r2 = qc / q if q != 0 else r1
    return sorted([r1, r2])


@dataclass(frozen=True)
class Thresholds:
    k_star: float
    m_star: float
    m_dstar: float
    m1: float
    m2: float


def nondimensionalize(raw: RawParams) -> ModelParams:
    for f in fields(raw):
        val = getattr(raw, f.name)
        if not val > 0:
            raise DomainError(f"raw parameter {f.name} must be > 0, got {val!r}")
    k1, k2 = raw.k1, raw.k2
    return ModelParams(
        a=raw.beta2 * k1 / raw.r2,
        b=raw.r1 / raw.r2,
        c=raw.beta1 * k2 / raw.r1,
        k=raw.eta * k1,
        m=raw.xi * k1 * k2 / raw.r2,
    )


def kinetics(p: ModelParams, s):
    """Vector field (dx/dt, dy/dt); ``s`` may hold numpy arrays."""
    x, y = s
    return (
        p.b * x * (1 - x - p.c * y),
        y * (1 / (1 + p.k * x) - y - p.a * x - p.m * x * y),
    )


def jacobian(p: ModelParams, s) -> Jacobian2:
    x, y = s
    q = 1 + p.k * x
    return Jacobian2(
        B1=-p.b * (2 * x + p.c * y - 1),
        B2=-p.b * p.c * x,
        B3=-y * (p.k / q**2 + p.a + p.m * y),
        B4=1 / q - (2 * p.m * y + p.a) * x - 2 * y,
    )


def cubic(p: ModelParams) -> Cubic:
    a, c, k, m = p.a, p.c, p.k, p.m
    return Cubic(
        A1=k * m,
        A2=(-a * c - m + 1) * k + m,
        A3=-a * c - k - m + 1,
        A4=c - 1,
    )


def thresholds(p: ModelParams) -> Thresholds:
    a, c, k = p.a, p.c, p.k
    if not a > 0:
        raise DomainError(f"parameter a must be > 0, got {a!r}")
    return Thresholds(
        k_star=1 / a - 1,
        m_star=-1 + (-a * a + 2 * a) * c,
        m_dstar=1 - a - k,
        m1=1 - a * c - k,
        m2=(2 * a * c * k + a * c - k - 1) / (1 + k),
    )


def m_of_x(p: ModelParams, x: float) -> float:
    """Toxin rate m that makes ``x`` a root of u (other parameters fixed)."""
    if not 0 < x < 1:
        raise DomainError(f"m_of_x is singular outside the open interval (0, 1), got x={x!r}")
    a, c, k = p.a, p.c, p.k
    if k * x + 1 <= 0:
        raise DomainError("k x + 1 must be positive")
    num = a * c * k * x**2 + a * c * x - k * x**2 + k * x - c - x + 1
    return num / ((x - 1) * (k * x + 1) * x)


def det_via_v(p: ModelParams, x: float) -> float:
    """Jacobian determinant at the interior equilibrium with abscissa ``x``.

    Uses the factorisation det = x (1 - x) b / ((k x + 1) c) * v(x), whose
    prefactor is positive on (0, 1).
    """
    if not 0 < x < 1:
        raise DomainError(f"x must lie in (0, 1), got {x!r}")
    cu = cubic(p)
    ux = cu.u(x)
    if abs(ux) > EPS_ROOT:
        raise PreconditionError(f"x={x!r} is not a root of u (|u(x)|={abs(ux):.3e})")
    return -x * (x - 1) * p.b / ((p.k * x + 1) * p.c) * cu.v(x)
