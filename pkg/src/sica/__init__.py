"""Spatiotemporal SICA HIV/AIDS model with optimal treatment control.

Explicit finite-difference solver for the four-compartment reaction-diffusion
system, its adjoint, and a forward-backward sweep for the treatment control.
"""
from .adjoint import AdjointTrajectory, solve_adjoint, step_adjoint_backward
from .config import ScenarioConfig, default_scenario, dump_config, load_config
from .control import (FbsmConfig, OptimizationResult, evaluate_objective, fbsm_optimize,
                      objective_gradient, project_control)
from .errors import (NonConvergenceWarning, ParseError, SicaError, StabilityViolation,
                     ValidationError)
from .forward import (ControlTrajectory, StateTrajectory, TimeSpec, cfl_max_dt,
                      simulate_forward, simulate_ode_reference, step_state)
from .grid import GridSpec, integrate_field, laplacian_neumann
from .model import (ModelParams, ObjectiveConfig, StatePoint, adjoint_source,
                    control_coupling_R, reaction_terms, sensitivity_matrix_F)
from .runner import RunReport, run_scenario

__version__ = "0.1.0"

__all__ = [
    "AdjointTrajectory", "ControlTrajectory", "FbsmConfig", "GridSpec", "ModelParams",
    "NonConvergenceWarning", "ObjectiveConfig", "OptimizationResult", "ParseError",
    "RunReport", "ScenarioConfig", "SicaError", "StabilityViolation", "StateTrajectory",
    "StatePoint", "TimeSpec", "ValidationError", "adjoint_source", "cfl_max_dt",
    "control_coupling_R", "default_scenario", "dump_config", "evaluate_objective",
    "fbsm_optimize", "integrate_field", "laplacian_neumann", "load_config",
    "objective_gradient", "project_control", "reaction_terms", "run_scenario",
    "sensitivity_matrix_F", "simulate_forward", "simulate_ode_reference", "solve_adjoint",
    "step_adjoint_backward", "step_state",
]
