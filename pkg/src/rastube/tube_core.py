"""Fixed-step integration kernel for corridor synthesis.

Compiled with numba when available; the same code runs uncompiled
otherwise (much slower, identical results).  Plans are packed into a
float array so the kernel stays object-free:

    column 0  prep time        column 4  dimension index
    column 1  enter time       column 5  detour level
    column 2  exit time        column 6  margin value at prep
    column 3  release time     column 7  margin value at release

Steps that straddle a plan's release time are split there, so the
derivative switch never lands inside a Runge-Kutta step.
"""

from __future__ import annotations

import math

import numpy as np

try:
    from numba import njit

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    NUMBA_AVAILABLE = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def wrap(func):
            return func

        return wrap


@njit(cache=True)
def _sech_sq(z):
    z = abs(z)
    if z > 300.0:
        return 0.0
    c = math.cosh(z)
    return 1.0 / (c * c)


@njit(cache=True)
def _derivative(t, y, out, t_c, span, plans, edge, blend, floor):
    n = y.shape[0]
    if t >= t_c * (1.0 - 1e-9):
        for i in range(n):
            out[i] = 0.0
    else:
        tt = t if t > 0.0 else 0.0
        w = t_c - tt
        coef = t_c / (w * w) * _sech_sq(tt / w)
        for i in range(n):
            out[i] = span[i] * coef

    for p in range(plans.shape[0]):
        if plans[p, 3] > t:
            prep = plans[p, 0]
            enter = plans[p, 1]
            exit_ = plans[p, 2]
            release = plans[p, 3]
            k = int(plans[p, 4])
            level = plans[p, 5]
            anchor_in = plans[p, 6]
            anchor_out = plans[p, 7]

            s_origin = 0.5 * math.tanh(t / blend)
            s_prep = 0.5 * math.tanh((t - prep + edge) / blend)
            s_enter = 0.5 * math.tanh((t - enter - edge) / blend)
            s_exit = 0.5 * math.tanh((t - exit_ + edge) / blend)
            s_release = 0.5 * math.tanh((t - release - edge) / blend)

            w_track = s_origin - s_prep + s_release + 0.5
            w_approach = s_prep - s_enter
            w_restore = s_exit - s_release

            if t >= enter:
                target_in = level
            else:
                target_in = anchor_in + (level - anchor_in) * math.tanh((t - prep) / (enter - t))
            den_in = enter - t
            if den_in < floor:
                den_in = floor
            pull_in = (target_in - y[k]) / den_in

            if t >= release:
                target_out = anchor_out
            else:
                target_out = level + (anchor_out - level) * math.tanh((t - exit_) / (release - t))
            den_out = release - t
            if den_out < floor:
                den_out = floor
            pull_out = (target_out - y[k]) / den_out

            out[k] = w_track * out[k] + w_approach * pull_in + w_restore * pull_out
            break


@njit(cache=True)
def _rk4_span(ta, tb, y, k1, k2, k3, k4, tmp, t_c, span, plans, edge, blend, floor):
    h = tb - ta
    n = y.shape[0]
    _derivative(ta, y, k1, t_c, span, plans, edge, blend, floor)
    for i in range(n):
        tmp[i] = y[i] + 0.5 * h * k1[i]
    _derivative(ta + 0.5 * h, tmp, k2, t_c, span, plans, edge, blend, floor)
    for i in range(n):
        tmp[i] = y[i] + 0.5 * h * k2[i]
    _derivative(ta + 0.5 * h, tmp, k3, t_c, span, plans, edge, blend, floor)
    for i in range(n):
        tmp[i] = y[i] + h * k3[i]
    _derivative(tb, tmp, k4, t_c, span, plans, edge, blend, floor)
    for i in range(n):
        y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])


@njit(cache=True)
def integrate_lower(y0, n_steps, t_end, t_c, span, plans, switches, edge, blend, floor):
    """RK4 grid of the corridor lower bound on [0, t_end].

    Returns the (n_steps + 1, n) grid and the first row index holding a
    non-finite value (-1 when the whole grid is finite).
    """
    n = y0.shape[0]
    grid = np.empty((n_steps + 1, n))
    y = y0.copy()
    k1 = np.empty(n)
    k2 = np.empty(n)
    k3 = np.empty(n)
    k4 = np.empty(n)
    tmp = np.empty(n)
    for i in range(n):
        grid[0, i] = y[i]
    bad = -1
    for step in range(n_steps):
        t0 = t_end * step / n_steps
        t1 = t_end * (step + 1) / n_steps
        ta = t0
        for s in range(switches.shape[0]):
            sw = switches[s]
            if ta < sw < t1:
                _rk4_span(ta, sw, y, k1, k2, k3, k4, tmp, t_c, span, plans, edge, blend, floor)
                ta = sw
        _rk4_span(ta, t1, y, k1, k2, k3, k4, tmp, t_c, span, plans, edge, blend, floor)
        finite = True
        for i in range(n):
            grid[step + 1, i] = y[i]
            if not math.isfinite(y[i]):
                finite = False
        if not finite and bad < 0:
            bad = step + 1
            break
    return grid, bad
