"""Backward integration of the adjoint (dual) system along a stored state."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import StabilityViolation
from .forward import ControlTrajectory, StateTrajectory, TimeSpec, check_cfl
from .grid import GridSpec, laplacian_neumann
from .model import ModelParams, ObjectiveConfig, adjoint_source, apply_F_transpose


@dataclass
class AdjointTrajectory:
    """Adjoint fields ``(p1, p2, p3, p4)`` on the state's time levels."""

    adjoint: np.ndarray
    grid: GridSpec
    time: TimeSpec
    mode: str = "full_jacobian"

    def __len__(self) -> int:
        return self.adjoint.shape[0]

    def __getitem__(self, n) -> np.ndarray:
        return self.adjoint[n]


def step_adjoint_backward(p_next, z, u, params: ModelParams, cfg: ObjectiveConfig,
                          g: GridSpec, dt: float, mode: str = "full_jacobian") -> np.ndarray:
    """Step the adjoint from level n+1 back to level n.

    ``p_prev = p_next + dt * (D lap(p_next) + F(z, u)^T p_next + (0, a, 0, 0))``
    with ``z`` and ``u`` taken at level n.
    """
    p_next = np.asarray(p_next, dtype=float)
    coupling = apply_F_transpose(z, u, p_next, params, mode)
    diffusion = params.diffusion[:, None, None] * laplacian_neumann(p_next, g)
    source = adjoint_source(cfg)[:, None, None]
    p_prev = p_next + dt * (diffusion + coupling + source)
    if not np.isfinite(p_prev).all():
        raise StabilityViolation("non-finite adjoint")
    return p_prev


def solve_adjoint(states: StateTrajectory, controls: ControlTrajectory, params: ModelParams,
                  cfg: ObjectiveConfig, mode: str = "full_jacobian") -> AdjointTrajectory:
    """Sweep backward from ``p(T) = 0`` to the initial level."""
    time, g = states.time, states.grid
    if controls.nt != time.nt:
        raise ValueError("states and controls have different time levels")
    check_cfl(time.dt, params, g)
    out = np.empty_like(states.states)
    out[-1] = 0.0
    for n in range(time.nt - 1, -1, -1):
        try:
            out[n] = step_adjoint_backward(out[n + 1], states[n], controls[n],
                                           params, cfg, g, time.dt, mode)
        except StabilityViolation as exc:
            exc.time_index = n
            raise
    return AdjointTrajectory(out, g, time, mode)
