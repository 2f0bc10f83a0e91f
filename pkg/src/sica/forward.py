"""Explicit Euler integration of the SICA reaction-diffusion system."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .errors import StabilityViolation
from .grid import GridSpec, integrate_field, laplacian_neumann
from .model import ModelParams, StatePoint, reaction_terms

CFL_SAFETY = 0.9
ODE_DT_CAP = 1e-2
EPS_NEG = 1e-9
COMPARTMENTS = ("S", "I", "C", "A")


@dataclass(frozen=True)
class TimeSpec:
    """Uniform time levels ``0, dt, ..., T`` with ``nt = round(T / dt)`` steps."""

    T: float
    dt: float

    def __post_init__(self):
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise ValueError(f"dt must be > 0, got {self.dt!r}")
        if not (math.isfinite(self.T) and self.T >= 0):
            raise ValueError(f"T must be >= 0, got {self.T!r}")
        if abs(self.nt * self.dt - self.T) > 1e-9 * max(self.T, self.dt):
            raise ValueError(f"T={self.T!r} is not a whole number of steps dt={self.dt!r}")

    @classmethod
    def fitted(cls, T: float, dt_max: float) -> "TimeSpec":
        """Largest step not above ``dt_max`` that divides ``T`` evenly."""
        if T == 0:
            return cls(0.0, dt_max)
        nt = math.ceil(T / dt_max * (1 - 1e-12))
        return cls(T, T / nt)

    @property
    def nt(self) -> int:
        return round(self.T / self.dt)

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.nt + 1) * self.dt

    @property
    def weights(self) -> np.ndarray:
        """Trapezoidal weights over the time levels."""
        w = np.full(self.nt + 1, self.dt)
        w[[0, -1]] *= 0.5
        if self.nt == 0:
            w[:] = 0.0
        return w


@dataclass
class ControlTrajectory:
    """Control fields at every time level, shape ``(nt + 1, nx, ny)``.

    Constant controls are stored as a broadcast view and cost no memory.
    """

    values: np.ndarray
    u_max: float = 1.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 3:
            raise ValueError(f"control values must be 3-D, got shape {self.values.shape}")
        lo, hi = float(self.values.min()), float(self.values.max())
        if lo < 0 or hi > self.u_max or not (math.isfinite(lo) and math.isfinite(hi)):
            raise ValueError(
                f"control outside [0, {self.u_max}]: min={lo!r}, max={hi!r}"
            )

    @classmethod
    def constant(cls, value: float, grid: GridSpec, time: TimeSpec, u_max: float = 1.0):
        field = np.full(grid.shape, float(value))
        return cls(np.broadcast_to(field, (time.nt + 1,) + grid.shape), u_max)

    @property
    def nt(self) -> int:
        return self.values.shape[0] - 1

    def __getitem__(self, n):
        return self.values[n]


@dataclass
class StepStats:
    """Counters accumulated by :func:`step_state` when passed in."""

    clamped: int = 0
    max_reaction: float = 0.0


@dataclass
class StateTrajectory:
    """Compartment fields at every level, ``states[n] -> (4, nx, ny)``."""

    states: np.ndarray
    grid: GridSpec
    time: TimeSpec
    clamp_count: int = 0
    max_reaction: float = 0.0

    def __len__(self) -> int:
        return self.states.shape[0]

    def __getitem__(self, n) -> np.ndarray:
        return self.states[n]

    @property
    def S(self) -> np.ndarray:
        return self.states[:, 0]

    @property
    def I(self) -> np.ndarray:
        return self.states[:, 1]

    @property
    def C(self) -> np.ndarray:
        return self.states[:, 2]

    @property
    def A(self) -> np.ndarray:
        return self.states[:, 3]

    def totals(self) -> np.ndarray:
        """Integrals of each compartment, shape ``(nt + 1, 4)``."""
        return integrate_field(self.states, self.grid)

    def means(self) -> np.ndarray:
        return self.totals() / self.grid.area


def cfl_max_dt(p: ModelParams, g: GridSpec, safety: float = CFL_SAFETY,
               cap: float = ODE_DT_CAP) -> float:
    """Largest stable explicit step for the diffusion part.

    Returns ``safety / (2 d_max (1/dx^2 + 1/dy^2))``; with no diffusion at all
    the bound is infinite and ``cap`` is returned instead.
    """
    d_max = float(max(p.d_S, p.d_I, p.d_C, p.d_A))
    if d_max == 0:
        return cap
    return safety / (2.0 * d_max * (1.0 / g.dx**2 + 1.0 / g.dy**2))


def check_cfl(dt: float, p: ModelParams, g: GridSpec) -> None:
    bound = cfl_max_dt(p, g)
    if dt > bound * (1 + 1e-12):
        raise StabilityViolation(f"dt={dt!r} exceeds the explicit stability bound {bound!r}")


def step_state(z, u, p: ModelParams, g: GridSpec, dt: float,
               eps_neg: float = EPS_NEG, stats: StepStats | None = None) -> np.ndarray:
    """One explicit Euler step of all four compartments.

    ``z`` has shape ``(4, nx, ny)``; ``u`` is a control field or scalar.
    Values that land in ``[-eps_neg, 0)`` are treated as round-off and set
    to zero (counted in ``stats``); anything more negative, or non-finite,
    raises :class:`StabilityViolation`.
    """
    z = np.asarray(z, dtype=float)
    reaction = reaction_terms(z, u, p)
    diffusion = p.diffusion[:, None, None] * laplacian_neumann(z, g)
    new = z + dt * (diffusion + reaction)

    if not np.isfinite(new).all():
        raise StabilityViolation("non-finite state")
    clamped = 0
    negative = new < 0
    if negative.any():
        worst = float(new.min())
        if worst < -eps_neg:
            raise StabilityViolation(f"negative density {worst!r}")
        clamped = int(negative.sum())
        new[negative] = 0.0
    if stats is not None:
        stats.clamped += clamped
        stats.max_reaction = max(stats.max_reaction, float(np.abs(reaction).max()))
    return new


def iter_forward(z0, controls, p: ModelParams, g: GridSpec, time: TimeSpec,
                 eps_neg: float = EPS_NEG,
                 stats: StepStats | None = None) -> Iterator[tuple[int, np.ndarray]]:
    """Yield ``(n, z_n)`` for every level without storing the trajectory.

    ``controls`` is anything indexable by level (a :class:`ControlTrajectory`
    or an array); the control at the left end of each interval is used.
    """
    z = np.array(z0, dtype=float)
    if z.shape != (4,) + g.shape:
        raise ValueError(f"initial state has shape {z.shape}, expected {(4,) + g.shape}")
    if (z < 0).any():
        raise ValueError("initial state must be nonnegative")
    check_cfl(time.dt, p, g)
    yield 0, z
    for n in range(time.nt):
        try:
            z = step_state(z, controls[n], p, g, time.dt, eps_neg, stats)
        except StabilityViolation as exc:
            exc.time_index = n + 1
            raise
        yield n + 1, z


def simulate_forward(z0, controls: ControlTrajectory, p: ModelParams, g: GridSpec,
                     time: TimeSpec, eps_neg: float = EPS_NEG) -> StateTrajectory:
    """Integrate from ``z0`` over ``time``, storing every level."""
    if controls.nt != time.nt or controls.values.shape[1:] != g.shape:
        raise ValueError("control trajectory does not match the time levels or grid")
    stats = StepStats()
    states = np.empty((time.nt + 1, 4) + g.shape)
    for n, z in iter_forward(z0, controls, p, g, time, eps_neg, stats):
        states[n] = z
    return StateTrajectory(states, g, time, stats.clamped, stats.max_reaction)


def boundedness_violation(traj: StateTrajectory) -> float:
    """Largest excess of any compartment over ``k t + max(z_i(0))``.

    ``k`` is the largest pointwise reaction magnitude seen during the run.
    A value <= 0 means the a-priori bound holds everywhere.
    """
    t = traj.time.times[:, None]
    peak0 = traj.states[0].reshape(4, -1).max(axis=1)[None, :]
    bound = traj.max_reaction * t + peak0
    peaks = traj.states.reshape(len(traj), 4, -1).max(axis=2)
    return float((peaks - bound).max())


def population_closed_form(t, N0: float, p: ModelParams, area: float):
    """Total population under zero flux: relaxes to ``area * Lambda / mu``."""
    N_eq = area * p.Lambda / p.mu
    return N_eq + (N0 - N_eq) * np.exp(-p.mu * np.asarray(t))


def simulate_ode_reference(z0_point, u_const: float, p: ModelParams, T: float,
                           dt_fine: float, stride: int = 1) -> np.ndarray:
    """Classical RK4 solution of the well-mixed (diffusion-free) model.

    Used as an independent oracle, so the right-hand side is written out in
    plain float arithmetic rather than reusing :func:`reaction_terms`.
    Returns every ``stride``-th point, shape ``(nsteps // stride + 1, 4)``.
    """
    if not dt_fine > 0:
        raise ValueError("dt_fine must be > 0")
    nsteps = round(T / dt_fine)
    if abs(nsteps * dt_fine - T) > 1e-9 * max(T, dt_fine):
        raise ValueError("T must be a whole number of fine steps")

    Lam, mu, beta = p.Lambda, p.mu, p.beta
    eC, eA, phi, rho, gam, om = p.eta_C, p.eta_A, p.phi, p.rho, p.gamma, p.omega
    x1, x2, x3 = p.xi1, p.xi2, p.xi3
    u = float(u_const)

    def rhs(S, I, C, A):
        inf = beta * (I + eC * C + eA * A) * S
        return (Lam - inf - mu * S + u * I,
                inf - x3 * I + gam * A + om * C - u * I,
                phi * I - x2 * C,
                rho * I - x1 * A)

    h = dt_fine
    h2, h6 = h / 2, h / 6
    S, I, C, A = (float(v) for v in z0_point)
    out = [StatePoint(S, I, C, A)]
    for k in range(1, nsteps + 1):
        a1, a2, a3, a4 = rhs(S, I, C, A)
        b1, b2, b3, b4 = rhs(S + h2 * a1, I + h2 * a2, C + h2 * a3, A + h2 * a4)
        c1, c2, c3, c4 = rhs(S + h2 * b1, I + h2 * b2, C + h2 * b3, A + h2 * b4)
        d1, d2, d3, d4 = rhs(S + h * c1, I + h * c2, C + h * c3, A + h * c4)
        S += h6 * (a1 + 2 * b1 + 2 * c1 + d1)
        I += h6 * (a2 + 2 * b2 + 2 * c2 + d2)
        C += h6 * (a3 + 2 * b3 + 2 * c3 + d3)
        A += h6 * (a4 + 2 * b4 + 2 * c4 + d4)
        if k % stride == 0:
            if not all(map(math.isfinite, (S, I, C, A))):
                raise StabilityViolation("non-finite reference state", time_index=k)
            out.append(StatePoint(S, I, C, A))
    return np.array(out)
