"""Dormand-Prince 5(4) embedded Runge-Kutta integrator with step-size control."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import StiffnessError

MIN_STEP = 1e-14

_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [np.array(row) for row in [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B_HAT = np.array(
    [5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40]
)
_E = _B - _B_HAT


@dataclass
class StepStats:
    accepted: int = 0
    rejected: int = 0
    nfev: int = 0


def _initial_step(f, t0, y0, f0, rtol, atol, order=5):
    scale = atol + np.abs(y0) * rtol
    d0 = np.sqrt(np.mean((y0 / scale) ** 2))
    d1 = np.sqrt(np.mean((f0 / scale) ** 2))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    y1 = y0 + h0 * f0
    f1 = f(t0 + h0, y1)
    d2 = np.sqrt(np.mean(((f1 - f0) / scale) ** 2)) / h0
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / (order + 1))
    return min(100 * h0, h1)


def dopri5(
    f: Callable,
    t0: float,
    y0,
    t_end: float,
    rtol: float,
    atol: float,
    stops=(),
    max_step: float = math.inf,
    post_step: Optional[Callable] = None,
):
    """Integrate ``y' = f(t, y)`` from ``t0`` to ``t_end``.

    Every accepted step is recorded.  Times listed in ``stops`` are hit
    exactly.  ``post_step(t, y)`` may return a replacement state, or the
    string ``"stop"`` to end the integration early.

    Returns ``(times, states, stats, stopped_early)``.
    """
    y = np.array(y0, dtype=float)
    t = float(t0)
    stops = sorted(s for s in stops if t0 < s < t_end) + [t_end]
    stats = StepStats()
    fy = f(t, y)
    stats.nfev += 1
    h = min(_initial_step(f, t, y, fy, rtol, atol), max_step, t_end - t0)
    stats.nfev += 1
    times = [t]
    states = [y.copy()]
    k = np.empty((7,) + y.shape)
    stop_idx = 0
    fac_max = 5.0
    while t < t_end:
        target = stops[stop_idx]
        if h < MIN_STEP:
            raise StiffnessError(f"step size underflow (h={h:.3e}) at t={t:.6g}")
        hit = t + h >= target
        if hit:
            h = target - t
        k[0] = fy
        for i in range(1, 7):
            yi = y + h * np.dot(_A[i], k[:i])
            k[i] = f(t + _C[i] * h, yi)
        stats.nfev += 6
        y_new = yi  # last stage is evaluated at the 5th-order solution (FSAL)
        err_vec = h * np.dot(_E, k)
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err = math.sqrt(float(np.mean((err_vec / scale) ** 2)))
        if err <= 1.0:
            t = target if hit else t + h
            if hit:
                stop_idx += 1
            y = y_new
            fy = k[6]
            stats.accepted += 1
            stopped = False
            if post_step is not None:
                res = post_step(t, y)
                if isinstance(res, str) and res == "stop":
                    stopped = True
                elif res is not None:
                    y = np.asarray(res, dtype=float)
                    fy = f(t, y)
                    stats.nfev += 1
            times.append(t)
            states.append(y.copy())
            if stopped:
                return np.array(times), np.array(states), stats, True
            factor = 0.9 * err ** (-0.2) if err > 0 else fac_max
            h = min(h * min(fac_max, max(0.2, factor)), max_step)
            fac_max = 5.0
        else:
            stats.rejected += 1
            h = h * max(0.2, 0.9 * err ** (-0.2))
            fac_max = 1.0
    return np.array(times), np.array(states), stats, False
