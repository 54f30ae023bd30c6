"""Nominal reach margin: the corridor's lower boundary from start box to target box.

The margin runs from the start-box corner to the target-box corner over the
deadline and is constant afterwards.  The closed form is the exact solution
of the defining rate equation, so the rate accessor below is its derivative;
tests cross-check both against an independent integration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

# Relative distance to the deadline below which evaluation switches to the
# constant branch; avoids overflowing tanh/sech arguments.
_DEADLINE_GUARD = 1e-9


def _sech_sq(z: float) -> float:
    z = abs(z)
    if z > 300.0:
        return 0.0
    c = math.cosh(z)
    return 1.0 / (c * c)


@dataclass(frozen=True)
class ReachMargin:
    """Per-dimension lower corridor boundary with prescribed arrival time.

    start[i] is the value at t = 0, end[i] the value held for all
    t >= deadline.  Either corner pair may be used (lower or upper box
    corners); avoidance planning evaluates both.
    """

    start: np.ndarray
    end: np.ndarray
    deadline: float
    _span: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        start = np.asarray(self.start, dtype=float)
        end = np.asarray(self.end, dtype=float)
        if start.shape != end.shape or start.ndim != 1:
            raise ValueError("start and end must be 1-d arrays of equal length")
        if not self.deadline > 0:
            raise ValueError("deadline must be positive")
        object.__setattr__(self, "start", start)
        object.__setattr__(self, "end", end)
        object.__setattr__(self, "_span", end - start)

    @property
    def n(self) -> int:
        return self.start.shape[0]

    def _blend(self, t: float) -> float:
        tc = self.deadline
        if t <= 0.0:
            return 0.0
        if t >= tc * (1.0 - _DEADLINE_GUARD):
            return 1.0
        return math.tanh(t / (tc - t))

    def value(self, dim: int, t: float) -> float:
        """Boundary value in one dimension at time t."""
        return float(self.start[dim] + self._span[dim] * self._blend(t))

    def rate(self, dim: int, t: float) -> float:
        """Time derivative of value(); zero at and beyond the deadline."""
        tc = self.deadline
        if t >= tc * (1.0 - _DEADLINE_GUARD):
            return 0.0
        t = max(t, 0.0)
        w = tc - t
        return float(tc * self._span[dim] / (w * w) * _sech_sq(t / w))

    def value_vec(self, t: float) -> np.ndarray:
        return self.start + self._span * self._blend(t)

    def rate_vec(self, t: float) -> np.ndarray:
        tc = self.deadline
        if t >= tc * (1.0 - _DEADLINE_GUARD):
            return np.zeros_like(self.start)
        t = max(t, 0.0)
        w = tc - t
        return self._span * (tc / (w * w) * _sech_sq(t / w))

    def value_grid(self, ts: np.ndarray) -> np.ndarray:
        """Vectorised value() over a time grid; shape (len(ts), n)."""
        ts = np.asarray(ts, dtype=float)
        tc = self.deadline
        blend = np.ones_like(ts)
        inside = ts < tc * (1.0 - _DEADLINE_GUARD)
        blend[inside] = np.tanh(np.maximum(ts[inside], 0.0) / (tc - ts[inside]))
        blend[ts <= 0.0] = 0.0
        return self.start[None, :] + blend[:, None] * self._span[None, :]

    def crossing_time(self, dim: int, level: float) -> float:
        """Exact time at which value(dim, .) reaches ``level``.

        Clamped to [0, deadline]: levels at or behind the start map to 0,
        levels at or beyond the end map to the deadline.  Constant
        dimensions map to 0 or the deadline by the side the level lies on.
        """
        span = self._span[dim]
        num = level - self.start[dim]
        if span == 0.0:
            return 0.0 if num <= 0.0 else self.deadline
        ratio = num / span
        if ratio <= 0.0:
            return 0.0
        if ratio >= 1.0:
            return self.deadline
        a = math.atanh(ratio)
        return self.deadline * a / (1.0 + a)
