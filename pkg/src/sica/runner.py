"""Execute a scenario end to end: simulate or optimize, then write outputs."""
from __future__ import annotations

import time as _time
from dataclasses import dataclass, field

import numpy as np

from .config import ScenarioConfig
from .control import evaluate_objective, fbsm_optimize
from .forward import (ControlTrajectory, StateTrajectory, boundedness_violation,
                      population_closed_form, simulate_forward)
from .io import REPORT_SCHEMA_VERSION, write_outputs, write_report
from .model import ModelParams


@dataclass
class RunReport:
    scenario: dict
    mode: str
    wall_time_s: float
    J: float
    invariants: dict
    manifest: list[str] = field(default_factory=list)
    J_history: list[float] | None = None
    converged: bool | None = None
    iterations: int | None = None
    states: StateTrajectory | None = field(default=None, repr=False)
    controls: ControlTrajectory | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        out = {
            "schema_version": REPORT_SCHEMA_VERSION,
            "mode": self.mode,
            "scenario": self.scenario,
            "wall_time_s": self.wall_time_s,
            "J": self.J,
            "invariants": self.invariants,
            "manifest": self.manifest,
        }
        if self.mode == "optimize":
            out["optimization"] = {
                "J_history": self.J_history,
                "converged": self.converged,
                "iterations": self.iterations,
            }
        return out


def invariant_summary(states: StateTrajectory, p: ModelParams) -> dict:
    """Clamp count, population-law deviation and a-priori bound excess."""
    g = states.grid
    N = states.totals().sum(axis=1)
    expected = population_closed_form(states.time.times, N[0], p, g.area)
    return {
        "clamp_count": states.clamp_count,
        "min_value": float(states.states.min()),
        "population_law_max_rel_dev": float(np.max(np.abs(N - expected) / expected)),
        "bound_k": states.max_reaction,
        "bound_max_excess": boundedness_violation(states),
    }


def run_scenario(cfg: ScenarioConfig, write: bool = True) -> RunReport:
    """Run ``cfg`` per its control spec and (optionally) write all outputs."""
    start = _time.perf_counter()
    z0 = cfg.initial_state()
    p, g, t = cfg.model, cfg.grid, cfg.time

    history = converged = iterations = None
    if cfg.control.mode == "optimize":
        result = fbsm_optimize(z0, p, g, t, cfg.objective, cfg.fbsm)
        states, controls = result.states, result.controls
        J = result.J
        history, converged, iterations = result.J_history, result.converged, result.iterations
    else:
        controls = ControlTrajectory.constant(cfg.control.value, g, t, cfg.objective.u_max)
        states = simulate_forward(z0, controls, p, g, t)
        J = evaluate_objective(states, controls, cfg.objective, g)

    invariants = invariant_summary(states, p)
    manifest: list[str] = []
    if write:
        manifest = write_outputs(cfg.output.directory, states, controls,
                                 cfg.output.snapshot_stride, history,
                                 write_control_snapshots=cfg.control.mode == "optimize")

    report = RunReport(cfg.to_dict(), cfg.control.mode, _time.perf_counter() - start,
                       J, invariants, manifest, history, converged, iterations,
                       states, controls)
    if write:
        path = write_report(cfg.output.directory, report.to_dict())
        report.manifest = manifest + [path]
    return report
