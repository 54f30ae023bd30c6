"""Adaptive corridor synthesis and verification.

The corridor lower bound follows the nominal reach margin and, inside each
detour window, blends toward the plan's level and back through three
smoothly weighted phases.  The upper bound is the lower bound shifted by
the corridor width.  Synthesis integrates the blended derivative with
fixed-step RK4; verification and smoothness checks run on the stored grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import tube_core
from .avoidance import ObstaclePlan, active_plan
from .errors import InfeasibleScenarioError, SynthesisError
from .geometry import Box
from .reach import ReachMargin
from .scenario import RasTask, TubeParams


def smoothstep(t: float, scale: float) -> float:
    """Odd sigmoid 0.5*tanh(t/scale with range (-0.5, 0.5)."""
    return 0.5 * math.tanh(t / scale)


def activation_weights(plan: ObstaclePlan, params: TubeParams, t: float) -> Tuple[float, float, float]:
    """Phase weights (track, approach, restore) for one plan at time t.

    Away from the detour the first weight saturates at one and the others
    vanish; during the approach and restore phases the matching weight
    takes over.  The edge buffer shifts each transition so it completes
    inside its own phase.
    """
    v = params.blend_scale
    edge = params.edge_buffer
    s_origin = smoothstep(t, v)
    s_prep = smoothstep(t - plan.prep_time + edge, v)
    s_enter = smoothstep(t - plan.enter_time - edge, v)
    s_exit = smoothstep(t - plan.exit_time + edge, v)
    s_release = smoothstep(t - plan.release_time - edge, v)
    w_track = s_origin - s_prep + s_release + 0.5
    w_approach = s_prep - s_enter
    w_restore = s_exit - s_release
    return (w_track, w_approach, w_restore)


def approach_target(plan: ObstaclePlan, margin: ReachMargin, t: float) -> float:
    """Blend value pulled toward during the approach phase; the plan level
    once the crossing window has started."""
    if t >= plan.enter_time:
        return plan.level
    anchor = margin.value(plan.dim, plan.prep_time)
    return anchor + (plan.level - anchor) * math.tanh(
        (t - plan.prep_time) / (plan.enter_time - t))


def return_target(plan: ObstaclePlan, margin: ReachMargin, t: float) -> float:
    """Blend value pulled toward during the restore phase; the margin value
    at the release time once the plan has released."""
    anchor = margin.value(plan.dim, plan.release_time)
    if t >= plan.release_time:
        return anchor
    return plan.level + (anchor - plan.level) * math.tanh(
        (t - plan.exit_time) / (plan.release_time - t))


def approach_shaper(plan: ObstaclePlan, params: TubeParams, t: float,
                    value_now: float, margin: ReachMargin) -> float:
    """Feedback rate steering the bound onto the approach target.

    The denominator vanishes at the window entry, which is what forces
    exact arrival; past that instant it is floored and the numerator is
    already near zero, leaving a benign proportional pin.
    """
    den = max(plan.enter_time - t, params.time_floor)
    return (approach_target(plan, margin, t) - value_now) / den


def return_shaper(plan: ObstaclePlan, params: TubeParams, t: float,
                  value_now: float, margin: ReachMargin) -> float:
    """Feedback rate steering the bound back toward the nominal margin."""
    den = max(plan.release_time - t, params.time_floor)
    return (return_target(plan, margin, t) - value_now) / den


def tube_derivative(task: RasTask, plans: Sequence[ObstaclePlan], params: TubeParams,
                    values: np.ndarray, t: float,
                    margin: Optional[ReachMargin] = None) -> np.ndarray:
    """Corridor lower-bound derivative at time t.

    Every dimension follows the margin rate; the active plan's dimension
    blends that rate with the approach and restore shapers.  Raises when
    two plans claim the same instant, which the scheduler's separation
    check is supposed to preclude.
    """
    if margin is None:
        margin = task.lower_margin()
    out = margin.rate_vec(t)
    live = [p for p in plans if p.prep_time <= t <= p.release_time]
    if len(live) > 1:
        raise InfeasibleScenarioError(
            f"plans for obstacles {[p.index for p in live]} are simultaneously active at t={t:.6g}")
    plan = active_plan(plans, t)
    if plan is not None:
        k = plan.dim
        w_track, w_approach, w_restore = activation_weights(plan, params, t)
        out[k] = (w_track * out[k]
                  + w_approach * approach_shaper(plan, params, t, values[k], margin)
                  + w_restore * return_shaper(plan, params, t, values[k], margin))
    return out


def _pack_plans(plans: Sequence[ObstaclePlan], margin: ReachMargin) -> np.ndarray:
    arr = np.zeros((len(plans), 8))
    for row, p in enumerate(sorted(plans, key=lambda q: q.enter_time)):
        arr[row] = (p.prep_time, p.enter_time, p.exit_time, p.release_time,
                    float(p.dim), p.level,
                    margin.value(p.dim, p.prep_time),
                    margin.value(p.dim, p.release_time))
    return arr


@dataclass
class Tube:
    """Sampled corridor: uniform time grid, lower bounds, constant width."""

    ts: np.ndarray        # (N+1,)
    lower: np.ndarray     # (N+1, n)
    width: np.ndarray     # (n,)

    def __post_init__(self):
        self.ts = np.asarray(self.ts, dtype=float)
        self.lower = np.asarray(self.lower, dtype=float)
        self.width = np.asarray(self.width, dtype=float)
        if self.lower.shape != (self.ts.shape[0], self.width.shape[0]):
            raise ValueError("inconsistent tube grid shapes")

    @property
    def n(self) -> int:
        return self.width.shape[0]

    @property
    def upper(self) -> np.ndarray:
        return self.lower + self.width[None, :]

    @property
    def t_end(self) -> float:
        return float(self.ts[-1])

    def bounds(self, t: float) -> Tuple[np.ndarray, np.ndarray]:
        """Linearly interpolated (lower, upper) at time t.

        Clamped to the first/last grid row outside the synthesis horizon;
        the corridor is constant past the deadline.
        """
        ts = self.ts
        if t <= ts[0]:
            lo = self.lower[0]
        elif t >= ts[-1]:
            lo = self.lower[-1]
        else:
            step = (ts[-1] - ts[0]) / (ts.shape[0] - 1)
            pos = (t - ts[0]) / step
            i = min(int(pos), ts.shape[0] - 2)
            frac = pos - i
            lo = (1.0 - frac) * self.lower[i] + frac * self.lower[i + 1]
        return lo, lo + self.width

    def rates(self) -> np.ndarray:
        """Finite-difference derivative on the grid, shape (N, n)."""
        dt = np.diff(self.ts)[:, None]
        return np.diff(self.lower, axis=0) / dt

    def to_csv(self, path) -> None:
        header = ["t"]
        for i in range(self.n):
            header += [f"g{i + 1}L", f"g{i + 1}U"]
        upper = self.upper
        with open(path, "w", newline="") as fh:
            fh.write(",".join(header) + "\n")
            for r in range(self.ts.shape[0]):
                cells = [f"{self.ts[r]:.17g}"]
                for i in range(self.n):
                    cells.append(f"{self.lower[r, i]:.17g}")
                    cells.append(f"{upper[r, i]:.17g}")
                fh.write(",".join(cells) + "\n")

    @classmethod
    def from_csv(cls, path) -> "Tube":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        if data.shape[1] < 3 or (data.shape[1] - 1) % 2:
            raise ValueError("tube CSV needs columns t,g1L,g1U,...")
        n = (data.shape[1] - 1) // 2
        ts = data[:, 0]
        lower = data[:, 1::2]
        upper = data[:, 2::2]
        width = upper[0] - lower[0]
        tube = cls(ts=ts, lower=lower, width=width)
        # keep any row-wise width variation the file carries so that
        # verification sees exactly what was loaded
        tube._upper_override = upper
        return tube

    _upper_override: Optional[np.ndarray] = field(default=None, repr=False)

    def upper_grid(self) -> np.ndarray:
        if self._upper_override is not None:
            return self._upper_override
        return self.upper


class MarginFrames:
    """Closed-form corridor for tasks without detours; exact, no grid."""

    def __init__(self, margin: ReachMargin, width: np.ndarray):
        self.margin = margin
        self.width = np.asarray(width, dtype=float)

    def bounds(self, t: float) -> Tuple[np.ndarray, np.ndarray]:
        lo = self.margin.value_vec(min(t, self.margin.deadline))
        return lo, lo + self.width


def evolve_tube(task: RasTask, plans: Sequence[ObstaclePlan], params: TubeParams) -> Tube:
    """Integrate the corridor lower bound over [0, deadline].

    Uses the compiled kernel when numba is importable.  Raises
    SynthesisError when the integration produces non-finite values.
    """
    spans = [(p.prep_time, p.release_time, p.index) for p in plans]
    spans.sort()
    for (a_lo, a_hi, ja), (b_lo, b_hi, jb) in zip(spans, spans[1:]):
        if b_lo < a_hi:
            raise InfeasibleScenarioError(
                f"plans for obstacles {ja} and {jb} overlap in time")

    margin = task.lower_margin()
    t_c = task.deadline
    n_steps = max(8, int(round(t_c / params.step)))
    packed = _pack_plans(plans, margin)
    switches = np.array(sorted(p.release_time for p in plans
                               if 0.0 < p.release_time < t_c), dtype=float)
    grid, bad = tube_core.integrate_lower(
        margin.start.copy(), n_steps, t_c, t_c, margin._span.copy(),
        packed, switches, params.edge_buffer, params.blend_scale, params.time_floor)
    if bad >= 0:
        t_bad = t_c * bad / n_steps
        raise SynthesisError(f"corridor integration diverged at t={t_bad:.6g}", time=t_bad)
    ts = np.linspace(0.0, t_c, n_steps + 1)
    return Tube(ts=ts, lower=grid, width=2.0 * task.band_halfwidth)


@dataclass(frozen=True)
class ConditionResult:
    name: str
    passed: bool
    margin: float
    detail: str
    witness_times: tuple = ()


@dataclass(frozen=True)
class VerificationReport:
    conditions: tuple

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.conditions)

    def by_name(self, name: str) -> ConditionResult:
        for c in self.conditions:
            if c.name == name:
                return c
        raise KeyError(name)

    def as_dict(self) -> dict:
        return {
            "passed": self.passed,
            "conditions": [
                {"name": c.name, "passed": c.passed, "margin": c.margin,
                 "detail": c.detail, "witness_times": list(c.witness_times)}
                for c in self.conditions
            ],
        }


def _containment_slack(lower_row, upper_row, box: Box) -> float:
    slack = np.minimum(lower_row - box.lower, box.upper - upper_row)
    return float(np.min(slack))


def verify_tube(tube: Tube, task: RasTask, boundary_tol: float = 1e-6,
                max_witnesses: int = 5) -> VerificationReport:
    """Grid check of the four corridor guarantees.

    start / arrival containment allow a tolerance of ``boundary_tol`` on
    the slack; unsafe-set clearance and bound ordering are strict, so a
    tangent corridor fails.
    """
    lower = tube.lower
    upper = tube.upper_grid()
    conditions = []

    s0 = _containment_slack(lower[0], upper[0], task.initial_set)
    conditions.append(ConditionResult(
        name="starts_inside", passed=s0 >= -boundary_tol, margin=s0,
        detail="corridor at t=0 inside the initial set"))

    s1 = _containment_slack(lower[-1], upper[-1], task.target_set)
    conditions.append(ConditionResult(
        name="arrives_inside", passed=s1 >= -boundary_tol, margin=s1,
        detail="corridor at the deadline inside the target set"))

    worst = math.inf
    witnesses: List[float] = []
    for u in task.unsafe_sets:
        gaps = np.maximum(u.lower[None, :] - upper, lower - u.upper[None, :])
        clearance = gaps.max(axis=1)
        worst = min(worst, float(clearance.min()))
        bad = np.nonzero(clearance <= 0.0)[0]
        witnesses.extend(tube.ts[bad[:max_witnesses]].tolist())
    if not task.unsafe_sets:
        worst = math.inf
    conditions.append(ConditionResult(
        name="avoids_unsafe", passed=not witnesses,
        margin=worst if math.isfinite(worst) else float("inf"),
        detail="strictly positive clearance from every unsafe set",
        witness_times=tuple(sorted(witnesses)[:max_witnesses])))

    gap = upper - lower
    min_gap = float(gap.min())
    bad_rows = np.nonzero(gap.min(axis=1) <= 0.0)[0]
    conditions.append(ConditionResult(
        name="ordered_bounds", passed=min_gap > 0.0, margin=min_gap,
        detail="lower bound strictly below upper bound",
        witness_times=tuple(tube.ts[bad_rows[:max_witnesses]].tolist())))

    return VerificationReport(conditions=tuple(conditions))


@dataclass(frozen=True)
class SmoothnessReport:
    max_rate: float
    max_jump: float
    threshold: float
    flagged: tuple   # (time, dim) pairs

    @property
    def passed(self) -> bool:
        return not self.flagged

    def as_dict(self) -> dict:
        return {"max_rate": self.max_rate, "max_jump": self.max_jump,
                "threshold": self.threshold, "passed": self.passed,
                "flagged": [list(f) for f in self.flagged]}


def smoothness_check(tube: Tube, factor: float = 10.0, percentile: float = 99.0) -> SmoothnessReport:
    """Flag grid steps whose rate spikes far above the tube's own typical rate.

    The threshold is ``factor`` times the given percentile of the
    finite-difference rate magnitudes; a smooth corridor never reaches it,
    a step-like one does at every ramp.
    """
    rates = tube.rates()
    mags = np.abs(rates)
    max_rate = float(mags.max()) if mags.size else 0.0
    dt = float(np.diff(tube.ts).max()) if tube.ts.shape[0] > 1 else 0.0
    max_jump = float(np.abs(np.diff(tube.lower, axis=0)).max()) if tube.ts.shape[0] > 1 else 0.0
    threshold = factor * float(np.percentile(mags, percentile)) if mags.size else 0.0
    rows, dims = np.nonzero(mags > threshold)
    flagged = tuple((float(tube.ts[r + 1]), int(d)) for r, d in zip(rows, dims))
    return SmoothnessReport(max_rate=max_rate, max_jump=max_jump,
                            threshold=threshold, flagged=flagged)
