"""Control-effort metrics and the reconstructed abrupt-corridor baseline.

The baseline replaces each smooth detour with near-step ramps at the
window edges, standing in for older corridor constructions that displace
the bounds abruptly.  It exists only for effort comparisons and is
labelled "reconstructed" in every report.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .avoidance import ObstaclePlan
from .plant import SimTrace
from .scenario import RasTask, TubeParams
from .tube import Tube

_trapezoid = getattr(np, "trapezoid", None) or np.trapz


@dataclass(frozen=True)
class EffortReport:
    energy: float   # integral of ||u||^2
    peak: float     # max ||u||
    l1: float       # integral of ||u||

    def as_dict(self) -> dict:
        return {"energy": self.energy, "peak": self.peak, "l1": self.l1}


def control_effort(trace: SimTrace, t_cap: Optional[float] = None) -> EffortReport:
    """Trapezoidal effort integrals over the recorded grid up to ``t_cap``.

    Defaults to the task deadline; failed traces are integrated up to the
    failure time.
    """
    if trace.ts.shape[0] == 0:
        raise ValueError("empty trace")
    cap = trace.deadline if t_cap is None else t_cap
    mask = trace.ts <= cap + 1e-12
    ts = trace.ts[mask]
    if ts.shape[0] == 0:
        raise ValueError("no trace rows before the cap")
    norms = np.linalg.norm(trace.inputs[mask], axis=1)
    if ts.shape[0] == 1:
        return EffortReport(energy=0.0, peak=float(norms[0]), l1=0.0)
    return EffortReport(energy=float(_trapezoid(norms ** 2, ts)),
                        peak=float(norms.max()),
                        l1=float(_trapezoid(norms, ts)))


def baseline_ramp_scale(params: TubeParams) -> float:
    """tanh time constant of the baseline ramps; a small fraction of the
    window margin, so ramps are an order of magnitude steeper than any
    smooth-corridor transient while still trackable at a reduced step."""
    return params.window_margin / 50.0


def baseline_tube(task: RasTask, plans: Sequence[ObstaclePlan], params: TubeParams,
                  ramp_scale: Optional[float] = None) -> Tube:
    """Abrupt-detour corridor on the same grid as the smooth one.

    Identical to nominal-margin tracking outside the detour windows; inside
    each window the bound sits at the plan level, entered and left through
    steep tanh ramps at the window edges.
    """
    margin = task.lower_margin()
    t_c = task.deadline
    n_steps = max(8, int(round(t_c / params.step)))
    ts = np.linspace(0.0, t_c, n_steps + 1)
    lower = margin.value_grid(ts)
    scale = baseline_ramp_scale(params) if ramp_scale is None else ramp_scale
    for p in plans:
        gate = 0.5 * (np.tanh((ts - p.prep_time) / scale)
                      - np.tanh((ts - p.release_time) / scale))
        lower[:, p.dim] += (p.level - lower[:, p.dim]) * gate
    return Tube(ts=ts, lower=lower, width=2.0 * task.band_halfwidth)


def comparison_report(scenario_name: str, seed: int, smooth: EffortReport,
                      baseline: EffortReport, smooth_flags: dict,
                      baseline_flags: dict) -> dict:
    def ratio(a, b):
        return a / b if b > 0 else float("inf")

    return {
        "scenario": scenario_name,
        "seed": seed,
        "baseline_kind": "reconstructed",
        "smooth": smooth.as_dict(),
        "baseline": baseline.as_dict(),
        "energy_ratio": ratio(smooth.energy, baseline.energy),
        "peak_ratio": ratio(smooth.peak, baseline.peak),
        "l1_ratio": ratio(smooth.l1, baseline.l1),
        "smooth_flags": smooth_flags,
        "baseline_flags": baseline_flags,
    }
