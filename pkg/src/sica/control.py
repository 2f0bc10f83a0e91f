"""Treatment objective, projected control update and forward-backward sweep."""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np

from .adjoint import AdjointTrajectory, solve_adjoint
from .errors import NonConvergenceWarning
from .forward import ControlTrajectory, StateTrajectory, TimeSpec, simulate_forward
from .grid import GridSpec, integrate_field
from .model import JACOBIAN_MODES, ModelParams, ObjectiveConfig

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class FbsmConfig:
    """Iteration controls for :func:`fbsm_optimize`.

    ``tol`` bounds the relative L2 change of the control between sweeps and
    ``theta`` is the relaxation weight given to the freshly projected control.
    When an update raises the objective, ``theta`` is halved (never below
    ``theta_min``) and the update retried; it is restored to its configured
    value after ``reset_after`` consecutive accepted sweeps.
    """

    max_iters: int = 200
    tol: float = 1e-4
    theta: float = 0.5
    jacobian_mode: str = "full_jacobian"
    theta_min: float = 1.0 / 64
    reset_after: int = 5
    descent_slack: float = 1e-8

    def __post_init__(self):
        if int(self.max_iters) != self.max_iters or self.max_iters < 1:
            raise ValueError(f"max_iters must be an integer >= 1, got {self.max_iters!r}")
        if not self.tol > 0:
            raise ValueError(f"tol must be > 0, got {self.tol!r}")
        if not 0 < self.theta <= 1:
            raise ValueError(f"theta must lie in (0, 1], got {self.theta!r}")
        if not 0 < self.theta_min <= self.theta:
            raise ValueError("theta_min must lie in (0, theta]")
        if self.jacobian_mode not in JACOBIAN_MODES:
            raise ValueError(f"jacobian_mode must be one of {JACOBIAN_MODES}")


@dataclass
class OptimizationResult:
    controls: ControlTrajectory
    states: StateTrajectory
    adjoint: AdjointTrajectory
    J_history: list[float]
    converged: bool
    iterations: int
    theta_history: list[float] = field(default_factory=list)

    @property
    def J(self) -> float:
        return self.J_history[-1]


def evaluate_objective(states: StateTrajectory, controls: ControlTrajectory,
                       cfg: ObjectiveConfig, g: GridSpec | None = None) -> float:
    """``a * int_Q I + (b/2) * int_Q u^2`` by the trapezoidal rule in t and x."""
    g = g or states.grid
    if controls.nt != states.time.nt:
        raise ValueError("states and controls have different time levels")
    w = states.time.weights
    infected = integrate_field(states.I, g)
    control_sq = np.array([integrate_field(controls[n] ** 2, g) for n in range(len(w))])
    return float(cfg.a * np.dot(w, infected) + 0.5 * cfg.b * np.dot(w, control_sq))


def project_control(I_field, p1, p2, cfg: ObjectiveConfig) -> np.ndarray:
    """Pointwise optimal control ``clip(I (p2 - p1) / b, 0, u_max)``."""
    raw = np.asarray(I_field) * (np.asarray(p2) - np.asarray(p1)) / cfg.b
    return np.minimum(cfg.u_max, np.maximum(0.0, raw))


def candidate_control(states: StateTrajectory, adjoint: AdjointTrajectory,
                      cfg: ObjectiveConfig) -> np.ndarray:
    """Project every level of the control from the state and adjoint.

    The control on the interval ``[t_n, t_{n+1}]`` acts on the Euler update
    that the adjoint at level ``n+1`` prices, so level ``n`` pairs ``I_n`` with
    ``p_{n+1}``. The final level has no interval; there ``p(T) = 0`` gives 0.
    """
    I = states.I
    p = adjoint.adjoint
    out = np.empty_like(I)
    out[:-1] = project_control(I[:-1], p[1:, 0], p[1:, 1], cfg)
    out[-1] = project_control(I[-1], p[-1, 0], p[-1, 1], cfg)
    return out


def objective_gradient(states: StateTrajectory, controls: ControlTrajectory,
                       adjoint: AdjointTrajectory, cfg: ObjectiveConfig) -> np.ndarray:
    """Derivative of the discrete objective with respect to every control value.

    Entry ``[n, i, j]`` is dJ/du_n(i, j), quadrature weights included, so a
    directional derivative is simply ``np.sum(grad * du)``.
    """
    g, time = states.grid, states.time
    w_t = time.weights
    p = adjoint.adjoint
    # dg/du = (I, -I, 0, 0), so the adjoint pairing is I (p1 - p2)
    coupling = np.zeros_like(states.I)
    coupling[:-1] = time.dt * states.I[:-1] * (p[1:, 0] - p[1:, 1])
    u = np.asarray(controls.values)
    cost = cfg.b * w_t[:, None, None] * u
    return (coupling + cost) * g.weights


def _l2q_norm(u: np.ndarray, time: TimeSpec, g: GridSpec) -> float:
    sq = np.array([integrate_field(u[n] ** 2, g) for n in range(u.shape[0])])
    return float(np.sqrt(np.dot(time.weights, sq)))


def fbsm_optimize(z0, p: ModelParams, g: GridSpec, time: TimeSpec, cfg: ObjectiveConfig,
                  fc: FbsmConfig | None = None, u0=None) -> OptimizationResult:
    """Forward-backward sweep for the optimal treatment control.

    Starting from ``u0`` (zero by default) each sweep solves the state
    forward, the adjoint backward, projects a candidate control and blends it
    into the current one with weight ``theta``. Sweeps that would increase
    the objective are retried with a smaller ``theta``. Iteration stops once
    the relative L2 change of the control falls below ``fc.tol``.

    A run that exhausts ``max_iters`` or cannot find a descending update at
    ``theta_min`` still returns its best iterate, with ``converged=False``
    and a :class:`NonConvergenceWarning`.
    """
    fc = fc or FbsmConfig()
    mode = fc.jacobian_mode
    shape = (time.nt + 1,) + g.shape
    u = np.zeros(shape) if u0 is None else np.clip(np.asarray(u0, dtype=float), 0, cfg.u_max)
    if u.shape != shape:
        u = np.array(np.broadcast_to(u, shape))

    controls = ControlTrajectory(u, cfg.u_max)
    states = simulate_forward(z0, controls, p, g, time)
    J = evaluate_objective(states, controls, cfg, g)
    history = [J]
    slack = fc.descent_slack * abs(history[0])
    theta = fc.theta
    thetas: list[float] = []
    accepted_streak = 0
    converged = False
    iterations = 0

    for it in range(1, fc.max_iters + 1):
        iterations = it
        adjoint = solve_adjoint(states, controls, p, cfg, mode)
        target = candidate_control(states, adjoint, cfg)
        del adjoint

        stalled = False
        while True:
            trial = np.clip(theta * target + (1.0 - theta) * u, 0.0, cfg.u_max)
            trial_controls = ControlTrajectory(trial, cfg.u_max)
            trial_states = simulate_forward(z0, trial_controls, p, g, time)
            J_trial = evaluate_objective(trial_states, trial_controls, cfg, g)
            if J_trial <= J + slack:
                break
            if theta <= fc.theta_min:
                stalled = True
                break
            theta = max(theta / 2, fc.theta_min)
            accepted_streak = 0
            log.debug("sweep %d: J rose to %.12g, theta -> %g", it, J_trial, theta)

        if stalled:
            change = _l2q_norm(trial - u, time, g) / max(_l2q_norm(trial, time, g), 1e-12)
            converged = change < fc.tol
            log.info("sweep %d: no descent at theta_min, stopping", it)
            break

        change = _l2q_norm(trial - u, time, g) / max(_l2q_norm(trial, time, g), 1e-12)
        u, controls, states, J = trial, trial_controls, trial_states, J_trial
        history.append(J)
        thetas.append(theta)
        log.info("sweep %d: J=%.12g change=%.3e theta=%g", it, J, change, theta)

        accepted_streak += 1
        if accepted_streak >= fc.reset_after and theta < fc.theta:
            theta = fc.theta
            accepted_streak = 0
        if change < fc.tol:
            converged = True
            break

    adjoint = solve_adjoint(states, controls, p, cfg, mode)
    if not converged:
        warnings.warn(
            f"forward-backward sweep did not converge in {iterations} sweeps",
            NonConvergenceWarning,
            stacklevel=2,
        )
    return OptimizationResult(controls, states, adjoint, history, converged, iterations, thetas)
