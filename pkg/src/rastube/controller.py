"""Model-free corridor-keeping feedback.

The law reads only the current state and the corridor bounds: the state is
mapped to a normalized coordinate in (-1, 1) per dimension, stretched
through a logarithmic barrier, and scaled by a gain that diverges at the
corridor boundary.  No plant model enters anywhere.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigurationError, TubeViolationError


@dataclass(frozen=True)
class ControllerConfig:
    gain: float = 2.0
    gain_sign: int = 1          # -1 for plants whose symmetric input map is negative definite
    input_limit: Optional[float] = None   # optional actuator clamp, off by default

    def __post_init__(self):
        if not self.gain > 0:
            raise ConfigurationError([("controller.gain", "must be positive")])
        if self.gain_sign not in (1, -1):
            raise ConfigurationError([("controller.gain_sign", "must be +1 or -1")])
        if self.input_limit is not None and not self.input_limit > 0:
            raise ConfigurationError([("controller.input_limit", "must be positive when set")])


@dataclass(frozen=True)
class TubeFrame:
    """Corridor bounds at one instant."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.asarray(self.lower, dtype=float)
        upper = np.asarray(self.upper, dtype=float)
        if lower.shape != upper.shape or lower.ndim != 1:
            raise ConfigurationError([("frame", "bounds must be 1-d arrays of equal length")])
        if np.any(upper - lower <= 0):
            raise ConfigurationError([("frame", "upper bound must exceed lower bound")])
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def sum_bounds(self) -> np.ndarray:
        return self.upper + self.lower

    @property
    def widths(self) -> np.ndarray:
        return self.upper - self.lower


def normalized_error(x: np.ndarray, frame: TubeFrame) -> np.ndarray:
    """Map the state to corridor coordinates; inside the corridor iff in (-1, 1)."""
    x = np.asarray(x, dtype=float)
    return (2.0 * x - frame.sum_bounds) / frame.widths


def _check_inside(e: np.ndarray, frame: TubeFrame, t: Optional[float]):
    bad = np.nonzero(np.abs(e) >= 1.0)[0]
    if bad.size:
        d = int(bad[0])
        x_val = 0.5 * (e[d] * frame.widths[d] + frame.sum_bounds[d])
        raise TubeViolationError(dim=d, value=float(x_val),
                                 lower=float(frame.lower[d]),
                                 upper=float(frame.upper[d]), time=t)


def transformed_error(e: np.ndarray, frame: Optional[TubeFrame] = None,
                      t: Optional[float] = None) -> np.ndarray:
    """Barrier coordinate ln((1+e)/(1-e)); diverges at the corridor boundary.

    Raises TubeViolationError when any |e| >= 1; pass ``frame``/``t`` to
    enrich the error with state-space values.
    """
    e = np.asarray(e, dtype=float)
    bad = np.nonzero(np.abs(e) >= 1.0)[0]
    if bad.size:
        if frame is not None:
            _check_inside(e, frame, t)
        d = int(bad[0])
        raise TubeViolationError(dim=d, value=float(e[d]), lower=-1.0, upper=1.0, time=t)
    return np.log1p(e) - np.log1p(-e)


def gain_diagonal(e: np.ndarray, frame: TubeFrame, t: Optional[float] = None) -> np.ndarray:
    """Diagonal of the barrier gain matrix, 4 / (width * (1 - e^2))."""
    e = np.asarray(e, dtype=float)
    _check_inside(e, frame, t)
    return 4.0 / (frame.widths * (1.0 - e * e))


def control_input(x: np.ndarray, frame: TubeFrame, cfg: ControllerConfig,
                  t: Optional[float] = None) -> np.ndarray:
    """Feedback input for one instant; pushes each component toward the
    corridor center with a gain diverging at the boundary."""
    e = normalized_error(x, frame)
    eps = transformed_error(e, frame, t)
    xi = gain_diagonal(e, frame, t)
    u = -cfg.gain_sign * cfg.gain * xi * eps
    if cfg.input_limit is not None:
        u = np.clip(u, -cfg.input_limit, cfg.input_limit)
    return u
