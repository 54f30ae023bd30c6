"""Compiled closed-loop stepping kernel.

Specialised for the built-in plant models (0 = omnidirectional robot,
1 = integrator).  The disturbance sequence is pregenerated by the caller,
one row per macro step, and held constant within the step.  Feedback is
re-evaluated at every Runge-Kutta stage against the corridor interpolated
at the stage time.  Returns early on a corridor violation or a non-finite
state.
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

MODEL_OMNI = 0
MODEL_INTEGRATOR = 1


@njit(cache=True)
def _bounds_at(t, grid_lower, t_end, width, task_dims, extra_dims, extra_lo, extra_hi,
               lo_out, hi_out):
    rows = grid_lower.shape[0]
    if t <= 0.0:
        idx = 0
        frac = 0.0
    elif t >= t_end:
        idx = rows - 2
        frac = 1.0
    else:
        pos = t / t_end * (rows - 1)
        idx = int(pos)
        if idx > rows - 2:
            idx = rows - 2
        frac = pos - idx
    for c in range(task_dims.shape[0]):
        d = task_dims[c]
        v = (1.0 - frac) * grid_lower[idx, c] + frac * grid_lower[idx + 1, c]
        lo_out[d] = v
        hi_out[d] = v + width[c]
    for c in range(extra_dims.shape[0]):
        d = extra_dims[c]
        lo_out[d] = extra_lo[c]
        hi_out[d] = extra_hi[c]


@njit(cache=True)
def _control(x, lo, hi, gain, gain_sign, limit, u_out):
    # returns the index of the first out-of-corridor dimension, or -1
    n = x.shape[0]
    for i in range(n):
        width = hi[i] - lo[i]
        e = (2.0 * x[i] - (hi[i] + lo[i])) / width
        if e <= -1.0 or e >= 1.0:
            return i
        eps = math.log((1.0 + e) / (1.0 - e))
        xi = 4.0 / (width * (1.0 - e * e))
        u = -gain_sign * gain * xi * eps
        if u > limit:
            u = limit
        elif u < -limit:
            u = -limit
        u_out[i] = u
    return -1


@njit(cache=True)
def _plant(model, x, u, w, dx_out):
    if model == MODEL_OMNI:
        c = math.cos(x[2])
        s = math.sin(x[2])
        dx_out[0] = u[0] * c - u[1] * s + w[0]
        dx_out[1] = u[0] * s + u[1] * c + w[1]
        dx_out[2] = u[2] + w[2]
    else:
        for i in range(x.shape[0]):
            dx_out[i] = u[i] + w[i]


@njit(cache=True)
def run_closed_loop(model, x0, n_steps, t_end, grid_lower, grid_t_end, width,
                    task_dims, extra_dims, extra_lo, extra_hi,
                    gain, gain_sign, limit, disturbances,
                    states, lowers, uppers, inputs):
    """Fills the preallocated row arrays; returns (rows, fail_dim, min_floor).

    fail_dim is -1 on success, otherwise the state dimension that left the
    corridor (or -2 for a non-finite state); rows counts the filled rows.
    """
    n = x0.shape[0]
    x = x0.copy()
    u = np.empty(n)
    us = np.empty(n)
    lo = np.empty(n)
    hi = np.empty(n)
    k1 = np.empty(n)
    k2 = np.empty(n)
    k3 = np.empty(n)
    k4 = np.empty(n)
    xs = np.empty(n)
    min_floor = 1.0e30
    for step in range(n_steps + 1):
        t = t_end * step / n_steps
        _bounds_at(t, grid_lower, grid_t_end, width, task_dims, extra_dims,
                   extra_lo, extra_hi, lo, hi)
        bad = _control(x, lo, hi, gain, gain_sign, limit, u)
        if bad >= 0:
            return step, bad, min_floor
        for i in range(n):
            states[step, i] = x[i]
            lowers[step, i] = lo[i]
            uppers[step, i] = hi[i]
            inputs[step, i] = u[i]
        if model == MODEL_OMNI:
            f = math.cos(x[2])
            if f > 1.0:
                f = 1.0
        else:
            f = 1.0
        if f < min_floor:
            min_floor = f
        if step == n_steps:
            break

        h = t_end * (step + 1) / n_steps - t
        w = disturbances[step]

        _plant(model, x, u, w, k1)
        for i in range(n):
            xs[i] = x[i] + 0.5 * h * k1[i]
        _bounds_at(t + 0.5 * h, grid_lower, grid_t_end, width, task_dims, extra_dims,
                   extra_lo, extra_hi, lo, hi)
        bad = _control(xs, lo, hi, gain, gain_sign, limit, us)
        if bad >= 0:
            return step + 1, bad, min_floor
        _plant(model, xs, us, w, k2)
        for i in range(n):
            xs[i] = x[i] + 0.5 * h * k2[i]
        bad = _control(xs, lo, hi, gain, gain_sign, limit, us)
        if bad >= 0:
            return step + 1, bad, min_floor
        _plant(model, xs, us, w, k3)
        for i in range(n):
            xs[i] = x[i] + h * k3[i]
        _bounds_at(t + h, grid_lower, grid_t_end, width, task_dims, extra_dims,
                   extra_lo, extra_hi, lo, hi)
        bad = _control(xs, lo, hi, gain, gain_sign, limit, us)
        if bad >= 0:
            return step + 1, bad, min_floor
        _plant(model, xs, us, w, k4)
        finite = True
        for i in range(n):
            x[i] = x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
            if not math.isfinite(x[i]):
                finite = False
        if not finite:
            return step + 1, -2, min_floor
    return n_steps + 1, -1, min_floor
