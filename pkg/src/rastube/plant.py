"""Plant models, disturbance generation, and the closed-loop simulator.

The simulator holds the disturbance constant over each RK4 macro step,
re-evaluates the feedback at every stage, and records state, corridor
bounds, input, and the active detour per step.  Flags summarise the run:
reached (target hit by the deadline), safe (never inside an unsafe set),
contained (always strictly inside the corridor), stayed (inside the target
through the stay horizon).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Protocol, Sequence, Tuple

import numpy as np

from . import sim_core
from .avoidance import ObstaclePlan, active_plan
from .controller import ControllerConfig, TubeFrame, control_input
from .errors import ConfigurationError, TubeViolationError
from .geometry import Box
from .scenario import RasTask
from .tube import Tube


class Dynamics(Protocol):
    n_states: int

    def derivative(self, x: np.ndarray, u: np.ndarray, w: np.ndarray) -> np.ndarray: ...

    def input_matrix(self, x: np.ndarray) -> np.ndarray: ...


class OmniRobot:
    """Planar omnidirectional robot: position pair plus heading.

    The input map is the heading rotation embedded in 3x3; its symmetric
    part stays positive definite while |heading| < pi/2, which the heading
    corridor enforces.
    """

    n_states = 3

    def derivative(self, x, u, w):
        c = math.cos(x[2])
        s = math.sin(x[2])
        return np.array([
            u[0] * c - u[1] * s + w[0],
            u[0] * s + u[1] * c + w[1],
            u[2] + w[2],
        ])

    def input_matrix(self, x):
        c = math.cos(x[2])
        s = math.sin(x[2])
        return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])

    def symmetric_input_floor(self, x):
        # closed form: eigenvalues of the symmetric part are {cos h, cos h, 1}
        return min(math.cos(x[2]), 1.0)


class IntegratorPlant:
    """Velocity-controlled point: xdot = u + w."""

    def __init__(self, n_states: int):
        self.n_states = n_states

    def derivative(self, x, u, w):
        return u + w

    def input_matrix(self, x):
        return np.eye(self.n_states)

    def symmetric_input_floor(self, x):
        return 1.0


class LinearPlant:
    """xdot = A x + B u + w, for oracle-friendly tests."""

    def __init__(self, a: np.ndarray, b: np.ndarray):
        self.a = np.asarray(a, dtype=float)
        self.b = np.asarray(b, dtype=float)
        self.n_states = self.a.shape[0]

    def derivative(self, x, u, w):
        return self.a @ x + self.b @ u + w

    def input_matrix(self, x):
        return self.b

    def symmetric_input_floor(self, x):
        sym = 0.5 * (self.b + self.b.T)
        return float(np.linalg.eigvalsh(sym).min())


PLANT_MODELS = {
    "omni_robot": lambda n_task: OmniRobot(),
    "integrator": lambda n_task: IntegratorPlant(n_task),
}


@dataclass
class DisturbanceModel:
    """Bounded disturbance source; every sample satisfies the inf-norm cap."""

    kind: str = "none"            # none | uniform | sinusoidal
    bound: float = 0.0
    seed: int = 0
    frequency: float = 0.1        # Hz, sinusoidal only
    phases: Optional[Sequence[float]] = None

    def __post_init__(self):
        if self.kind not in ("none", "uniform", "sinusoidal"):
            raise ConfigurationError([("plant.disturbance.kind",
                                       f"unknown kind {self.kind!r}")])
        if self.bound < 0:
            raise ConfigurationError([("plant.disturbance.bound", "must be >= 0")])

    def sampler(self, n: int) -> Callable[[float], np.ndarray]:
        """Deterministic per-step sampler; reseeded on every call."""
        if self.kind == "none" or self.bound == 0.0:
            zero = np.zeros(n)
            return lambda t: zero
        if self.kind == "uniform":
            rng = np.random.default_rng(self.seed)
            bound = self.bound
            return lambda t: rng.uniform(-bound, bound, size=n)
        phases = self._phases(n)
        omega = 2.0 * math.pi * self.frequency
        bound = self.bound
        return lambda t: bound * np.sin(omega * t + phases)

    def _phases(self, n: int) -> np.ndarray:
        phases = np.asarray(self.phases, dtype=float) if self.phases is not None \
            else np.linspace(0.0, math.pi, n, endpoint=False)
        if phases.shape != (n,):
            raise ConfigurationError([("plant.disturbance.phase",
                                       f"expected {n} entries")])
        return phases

    def sequence(self, n: int, ts: np.ndarray) -> np.ndarray:
        """All samples for a run at once; identical stream to sampler()."""
        if self.kind == "none" or self.bound == 0.0:
            return np.zeros((ts.shape[0], n))
        if self.kind == "uniform":
            rng = np.random.default_rng(self.seed)
            return rng.uniform(-self.bound, self.bound, size=(ts.shape[0], n))
        omega = 2.0 * math.pi * self.frequency
        return self.bound * np.sin(omega * ts[:, None] + self._phases(n)[None, :])


class FrameProvider:
    """Assembles full-state corridor frames from the task corridor.

    Task dimensions read the synthesized corridor; remaining state
    dimensions (for example the robot heading) get fixed wide bounds.
    """

    def __init__(self, source, state_dim: int, task_dims: Sequence[int],
                 extra_bounds: Sequence[Tuple[float, float]]):
        self.source = source
        self.state_dim = state_dim
        self.task_dims = list(task_dims)
        extras = [i for i in range(state_dim) if i not in self.task_dims]
        if len(extras) != len(extra_bounds):
            raise ConfigurationError(
                [("plant", f"{len(extras)} unconstrained dimensions but "
                           f"{len(extra_bounds)} extra bounds")])
        self.extra_dims = extras
        self.extra_lower = np.array([b[0] for b in extra_bounds])
        self.extra_upper = np.array([b[1] for b in extra_bounds])

    def frame(self, t: float) -> TubeFrame:
        lo_task, hi_task = self.source.bounds(t)
        lo = np.empty(self.state_dim)
        hi = np.empty(self.state_dim)
        lo[self.task_dims] = lo_task
        hi[self.task_dims] = hi_task
        if self.extra_dims:
            lo[self.extra_dims] = self.extra_lower
            hi[self.extra_dims] = self.extra_upper
        return TubeFrame(lower=lo, upper=hi)


@dataclass
class SimOptions:
    step: float = 0.01
    stay_horizon: float = 0.0
    extra_state: Sequence[float] = ()          # initial values of unconstrained dims
    extra_bounds: Sequence[Tuple[float, float]] = ()


@dataclass
class SimFlags:
    reached: bool
    safe: bool
    contained: bool
    stayed: bool

    @property
    def all_ok(self) -> bool:
        return self.reached and self.safe and self.contained and self.stayed

    def as_dict(self) -> dict:
        return {"reached": self.reached, "safe": self.safe,
                "contained": self.contained, "stayed": self.stayed}


@dataclass
class SimTrace:
    ts: np.ndarray
    states: np.ndarray        # (N, n_states)
    lower: np.ndarray         # (N, n_states)
    upper: np.ndarray
    inputs: np.ndarray
    disturbances: np.ndarray
    active: np.ndarray        # active plan's obstacle index, -1 when none
    flags: SimFlags
    deadline: float
    failure_time: Optional[float] = None
    failure_reason: Optional[str] = None
    reach_time: Optional[float] = None
    min_input_floor: float = float("inf")   # min eigenvalue of the symmetric input map

    @property
    def completed(self) -> bool:
        return self.failure_time is None

    def to_csv(self, path) -> None:
        n = self.states.shape[1]
        header = ["t"] + [f"x{i + 1}" for i in range(n)]
        for i in range(n):
            header += [f"g{i + 1}L", f"g{i + 1}U"]
        header += [f"u{i + 1}" for i in range(n)] + ["active_obstacle"]
        with open(path, "w", newline="") as fh:
            fh.write(",".join(header) + "\n")
            for r in range(self.ts.shape[0]):
                cells = [f"{self.ts[r]:.17g}"]
                cells += [f"{v:.17g}" for v in self.states[r]]
                for i in range(n):
                    cells.append(f"{self.lower[r, i]:.17g}")
                    cells.append(f"{self.upper[r, i]:.17g}")
                cells += [f"{v:.17g}" for v in self.inputs[r]]
                cells.append(str(int(self.active[r])))
                fh.write(",".join(cells) + "\n")


def _state_in_box(x: np.ndarray, box: Box, dims: Sequence[int]) -> bool:
    return box.contains_point([x[i] for i in dims])


def _python_loop(x, n_steps, t_end, frames, cfg, dynamics, dists,
                 states, lowers, uppers, inputs):
    """Reference stepping loop; used when the compiled kernel does not apply."""
    floor_fn = getattr(dynamics, "symmetric_input_floor", None)
    if floor_fn is None:
        def floor_fn(state):
            g = dynamics.input_matrix(state)
            return float(np.linalg.eigvalsh(0.5 * (g + g.T)).min())

    min_floor = float("inf")
    rows = 0
    for step in range(n_steps + 1):
        t = t_end * step / n_steps
        frame = frames.frame(t)
        try:
            u = control_input(x, frame, cfg, t=t)
        except TubeViolationError as err:
            return rows, min_floor, t, str(err)
        states[step] = x
        lowers[step] = frame.lower
        uppers[step] = frame.upper
        inputs[step] = u
        min_floor = min(min_floor, floor_fn(x))
        rows = step + 1
        if step == n_steps:
            break
        w = dists[step]
        h = t_end * (step + 1) / n_steps - t
        try:
            k1 = dynamics.derivative(x, u, w)
            x2 = x + 0.5 * h * k1
            k2 = dynamics.derivative(
                x2, control_input(x2, frames.frame(t + 0.5 * h), cfg, t=t + 0.5 * h), w)
            x3 = x + 0.5 * h * k2
            k3 = dynamics.derivative(
                x3, control_input(x3, frames.frame(t + 0.5 * h), cfg, t=t + 0.5 * h), w)
            x4 = x + h * k3
            k4 = dynamics.derivative(
                x4, control_input(x4, frames.frame(t + h), cfg, t=t + h), w)
        except TubeViolationError as err:
            return rows, min_floor, t, str(err)
        x = x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(x)):
            return rows, min_floor, t + h, "non-finite state"
    return rows, min_floor, None, None


def simulate(task: RasTask, frames: FrameProvider, cfg: ControllerConfig,
             dynamics: Dynamics, disturbance: DisturbanceModel,
             options: SimOptions, plans: Sequence[ObstaclePlan] = ()) -> SimTrace:
    """Run the closed loop from the task's initial state.

    The initial state must lie strictly inside the corridor.  A corridor
    violation or a non-finite state ends the run early with the failure
    recorded; metrics and flags are computed on the recorded prefix.
    """
    n = dynamics.n_states
    x = np.empty(n)
    x[frames.task_dims] = task.start
    extra = list(options.extra_state)
    if len(extra) != len(frames.extra_dims):
        raise ConfigurationError(
            [("run", f"expected {len(frames.extra_dims)} extra initial values")])
    for i, v in zip(frames.extra_dims, extra):
        x[i] = v

    frame0 = frames.frame(0.0)
    e0 = (2.0 * x - frame0.sum_bounds) / frame0.widths
    if np.any(np.abs(e0) >= 1.0):
        raise ConfigurationError(
            [("task.start_state", "initial state not strictly inside the corridor")])

    t_end = task.deadline + options.stay_horizon
    n_steps = max(1, int(round(t_end / options.step)))
    sorted_plans = sorted(plans, key=lambda p: p.enter_time)
    grid_ts = np.array([t_end * s / n_steps for s in range(n_steps + 1)])
    dists = disturbance.sequence(n, grid_ts)

    model_id = None
    if sim_core.NUMBA_AVAILABLE and isinstance(frames.source, Tube):
        if isinstance(dynamics, OmniRobot):
            model_id = sim_core.MODEL_OMNI
        elif isinstance(dynamics, IntegratorPlant):
            model_id = sim_core.MODEL_INTEGRATOR

    states = np.empty((n_steps + 1, n))
    lowers = np.empty((n_steps + 1, n))
    uppers = np.empty((n_steps + 1, n))
    inputs = np.empty((n_steps + 1, n))

    failure_time = None
    failure_reason = None

    if model_id is not None:
        tube = frames.source
        limit = cfg.input_limit if cfg.input_limit is not None else float("inf")
        rows, fail_dim, min_floor = sim_core.run_closed_loop(
            model_id, x, n_steps, t_end, tube.lower, tube.t_end, tube.width,
            np.asarray(frames.task_dims, dtype=np.int64),
            np.asarray(frames.extra_dims, dtype=np.int64),
            frames.extra_lower, frames.extra_upper,
            cfg.gain, float(cfg.gain_sign), limit, dists,
            states, lowers, uppers, inputs)
        if fail_dim == -2:
            failure_time = t_end * rows / n_steps
            failure_reason = "non-finite state"
        elif fail_dim >= 0:
            failure_time = t_end * min(rows, n_steps) / n_steps
            failure_reason = f"state component {fail_dim} left the corridor"
    else:
        rows, min_floor, failure_time, failure_reason = _python_loop(
            x, n_steps, t_end, frames, cfg, dynamics, dists,
            states, lowers, uppers, inputs)

    ts = grid_ts[:rows]
    states = states[:rows]
    lowers = lowers[:rows]
    uppers = uppers[:rows]
    inputs = inputs[:rows]
    dists = dists[:rows]
    if sorted_plans:
        releases = np.array([p.release_time for p in sorted_plans])
        order_idx = np.searchsorted(releases, ts, side="right")
        plan_ids = np.array([p.index for p in sorted_plans] + [-1])
        active = plan_ids[np.minimum(order_idx, len(sorted_plans))]
    else:
        active = np.full(rows, -1, dtype=int)

    task_dims = frames.task_dims
    reach_time = None
    reached = False
    for r in range(rows):
        if ts[r] <= task.deadline + 1e-12 and _state_in_box(states[r], task.target_set, task_dims):
            reached = True
            reach_time = float(ts[r])
            break
    safe = True
    for u_box in task.unsafe_sets:
        for r in range(rows):
            if _state_in_box(states[r], u_box, task_dims):
                safe = False
                break
        if not safe:
            break
    contained = failure_time is None and rows > 0 and \
        bool(np.all((states > lowers) & (states < uppers)))
    stay_rows = np.nonzero(ts >= task.deadline - 1e-12)[0]
    stayed = failure_time is None and all(
        _state_in_box(states[r], task.target_set, task_dims) for r in stay_rows)

    return SimTrace(ts=ts, states=states, lower=lowers, upper=uppers,
                    inputs=inputs, disturbances=dists, active=active,
                    flags=SimFlags(reached=reached, safe=safe,
                                   contained=contained, stayed=stayed),
                    deadline=task.deadline,
                    failure_time=failure_time, failure_reason=failure_reason,
                    reach_time=reach_time, min_input_floor=min_floor)
