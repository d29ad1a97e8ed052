"""Small adaptive Runge-Kutta integrator for the non-hot ODE paths.

The compiled kernels carry their own stepper; this pure-Python twin (same
Dormand-Prince 5(4) pair, same step-control rule) serves the analysis
entry points that take arbitrary Python rate callables: frozen-n relaxation,
the deterministic large-population limit, and grid-sampled comparisons.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = ["solve_path", "solve_at", "OdeError"]

_MAX_STEPS = 10_000_000


class OdeError(RuntimeError):
    """Integration failed (non-finite state or step size collapse)."""


def _dp_step(f, t, y, h):
    """One Dormand-Prince 5(4) step; returns (y5, err_vector)."""
    k1 = f(t, y)
    k2 = f(t + 0.2 * h, y + h * (0.2 * k1))
    k3 = f(t + 0.3 * h, y + h * (3.0 / 40.0 * k1 + 9.0 / 40.0 * k2))
    k4 = f(t + 0.8 * h, y + h * (44.0 / 45.0 * k1 - 56.0 / 15.0 * k2 + 32.0 / 9.0 * k3))
    k5 = f(t + 8.0 / 9.0 * h,
           y + h * (19372.0 / 6561.0 * k1 - 25360.0 / 2187.0 * k2
                    + 64448.0 / 6561.0 * k3 - 212.0 / 729.0 * k4))
    k6 = f(t + h,
           y + h * (9017.0 / 3168.0 * k1 - 355.0 / 33.0 * k2 + 46732.0 / 5247.0 * k3
                    + 49.0 / 176.0 * k4 - 5103.0 / 18656.0 * k5))
    y5 = y + h * (35.0 / 384.0 * k1 + 500.0 / 1113.0 * k3 + 125.0 / 192.0 * k4
                  - 2187.0 / 6784.0 * k5 + 11.0 / 84.0 * k6)
    k7 = f(t + h, y5)
    err = h * (71.0 / 57600.0 * k1 - 71.0 / 16695.0 * k3 + 71.0 / 1920.0 * k4
               - 17253.0 / 339200.0 * k5 + 22.0 / 525.0 * k6 - 1.0 / 40.0 * k7)
    return y5, err


def _rk4_step(f, t, y, h):
    k1 = f(t, y)
    k2 = f(t + 0.5 * h, y + 0.5 * h * k1)
    k3 = f(t + 0.5 * h, y + 0.5 * h * k2)
    k4 = f(t + h, y + h * k3)
    return y + h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0


def _err_norm(err, y, y1, rtol, atol):
    sc = atol + rtol * np.maximum(np.abs(y), np.abs(y1))
    return math.sqrt(float(np.mean((err / sc) ** 2)))


def _advance(f, t, y, t_target, rtol, atol, hmax, adaptive, sink=None):
    """Integrate from t to t_target; optionally append accepted (t, y) toate sink."""
    h = hmax
    steps = 0
    while t < t_target:
        steps += 1
        if steps > _MAX_STEPS:
            raise OdeError(f"step budget exhausted near t={t}")
        last = False
        hstep = h
        if hstep >= t_target - t:
            hstep = t_target - t
            last = True
        if not adaptive:
            y1 = _rk4_step(f, t, y, hstep)
            if not np.all(np.isfinite(y1)):
                raise OdeError(f"non-finite state near t={t}")
        else:
            y1, err = _dp_step(f, t, y, hstep)
            if not np.all(np.isfinite(y1)):
                h = hstep * 0.2
                if h < 1e-14 * max(1.0, abs(t)):
                    raise OdeError(f"non-finite state near t={t}")
                continue
            en = _err_norm(err, y, y1, rtol, atol)
            if en > 1.0:
                h = hstep * max(0.2, 0.9 * en ** -0.2)
                if h < 1e-14 * max(1.0, abs(t)):
                    raise OdeError(f"step size collapsed near t={t}")
                continue
            fac = 5.0 if en < 1e-300 else min(5.0, max(0.2, 0.9 * en ** -0.2))
            h = min(hmax, hstep * fac)
        t = t_target if last else t + hstep
        y = y1
        if sink is not None:
            sink.append((t, y))
    return y


def solve_path(f, y0, t_end, *, rtol=1e-8, atol=1e-10, hmax=0.1, adaptive=True):
    """Integrate y' = f(t, y) on [0, t_end]; returns (t, y) at accepted steps."""
    y = np.atleast_1d(np.asarray(y0, dtype=float)).copy()
    sink: list[tuple[float, np.ndarray]] = [(0.0, y)]
    _advance(f, 0.0, y, float(t_end), rtol, atol, hmax, adaptive, sink)
    ts = np.array([p[0] for p in sink])
    ys = np.vstack([p[1] for p in sink])
    return ts, ys


def solve_at(f, y0, t_pts, *, rtol=1e-8, atol=1e-10, hmax=0.1, adaptive=True):
    """Integrate y' = f(t, y) and return y exactly at the requested times."""
    t_pts = np.asarray(t_pts, dtype=float)
    if t_pts.ndim != 1 or t_pts.size == 0 or np.any(np.diff(t_pts) < 0) or t_pts[0] < 0:
        raise ValueError("t_pts must be nondecreasing, nonnegative and non-empty")
    y = np.atleast_1d(np.asarray(y0, dtype=float)).copy()
    out = np.empty((t_pts.size, y.size))
    t = 0.0
    for i, tq in enumerate(t_pts):
        if tq > t:
            y = _advance(f, t, y, float(tq), rtol, atol, hmax, adaptive)
            t = float(tq)
        out[i] = y
    return out
