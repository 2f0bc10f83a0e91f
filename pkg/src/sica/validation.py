"""Self-checks run by ``sica validate``: stencil, oracle and invariant suites."""
from __future__ import annotations

import time as _time
from dataclasses import dataclass

import numpy as np

from .adjoint import solve_adjoint
from .config import ScenarioConfig
from .control import evaluate_objective, objective_gradient
from .forward import (ControlTrajectory, TimeSpec, boundedness_violation,
                      iter_forward, population_closed_form, simulate_forward,
                      simulate_ode_reference)
from .grid import GridSpec, integrate_field, laplacian_neumann
from .model import ModelParams, ObjectiveConfig


@dataclass
class CheckResult:
    name: str
    value: float
    tolerance: float
    passed: bool
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.name:<34} {self.value:<12.4g} {self.detail}"


def max_relative_error(values: np.ndarray, reference: np.ndarray) -> float:
    """Largest deviation per compartment, scaled by that compartment's peak."""
    values, reference = np.asarray(values), np.asarray(reference)
    scale = np.abs(reference).max(axis=0)
    scale = np.where(scale > 0, scale, 1.0)
    return float((np.abs(values - reference).max(axis=0) / scale).max())


def eigenfunction_errors(sizes=(17, 33, 65), L: float = 10.0) -> list[float]:
    """Max-norm Laplacian error on ``cos(pi x/L) cos(pi y/L)`` per grid size."""
    errors = []
    for n in sizes:
        g = GridSpec(n, n, L, L)
        X, Y = g.mesh()
        f = np.cos(np.pi * X / L) * np.cos(np.pi * Y / L)
        exact = -2.0 * (np.pi / L) ** 2 * f
        errors.append(float(np.abs(laplacian_neumann(f, g) - exact).max()))
    return errors


def observed_orders(errors: list[float]) -> list[float]:
    return [float(np.log2(e0 / e1)) for e0, e1 in zip(errors, errors[1:])]


def stencil_checks(rng: np.random.Generator) -> list[CheckResult]:
    g = GridSpec(23, 31, 7.0, 11.0)
    const = laplacian_neumann(np.full(g.shape, 3.7), g)
    out = [CheckResult("laplacian_constant_zero", float(np.abs(const).max()), 0.0,
                       bool(np.all(const == 0.0)))]

    orders = observed_orders(eigenfunction_errors())
    out.append(CheckResult("laplacian_convergence_order", min(orders), 1.9,
                           min(orders) >= 1.9, f"orders={[round(o, 3) for o in orders]}"))

    f, h = rng.random(g.shape), rng.random(g.shape)
    Lf, Lh = laplacian_neumann(f, g), laplacian_neumann(h, g)
    cons = abs(float(integrate_field(Lf, g))) / float(integrate_field(np.abs(Lf), g))
    out.append(CheckResult("laplacian_conservation", cons, 1e-10, cons <= 1e-10))
    lhs, rhs = float(integrate_field(Lf * h, g)), float(integrate_field(f * Lh, g))
    sym = abs(lhs - rhs) / abs(lhs)
    out.append(CheckResult("laplacian_self_adjoint", sym, 1e-10, sym <= 1e-10))
    return out


def homogeneous_reduction_error(p: ModelParams, z_point, u: float, T: float = 25.0,
                                dt: float = 2e-3, n: int = 32) -> tuple[float, float]:
    """PDE on a uniform field vs. RK4 at ``dt / 100``; returns (error, PDE seconds)."""
    g = GridSpec(n, n)
    time = TimeSpec(T, dt)
    z0 = np.array(z_point, dtype=float)[:, None, None] * np.ones(g.shape)
    controls = ControlTrajectory.constant(u, g, time)
    start = _time.perf_counter()
    pde = np.array([z[:, 0, 0] for _, z in iter_forward(z0, controls, p, g, time)])
    elapsed = _time.perf_counter() - start
    ref = simulate_ode_reference(z_point, u, p, T, dt / 100, stride=100)
    return max_relative_error(pde, ref), elapsed


def population_law_deviation(cfg: ScenarioConfig, u: float, dt: float | None = None) -> float:
    """Max relative gap between the integrated population and its closed form."""
    time = cfg.time if dt is None else TimeSpec(cfg.time.T, dt)
    g = cfg.grid
    controls = ControlTrajectory.constant(u, g, time)
    worst, N0 = 0.0, None
    for n, z in iter_forward(cfg.initial_state(), controls, cfg.model, g, time):
        N = float(integrate_field(z, g).sum())
        N0 = N if N0 is None else N0
        exact = float(population_closed_form(n * time.dt, N0, cfg.model, g.area))
        worst = max(worst, abs(N - exact) / exact)
    return worst


def gradient_check(p: ModelParams, cfg: ObjectiveConfig, g: GridSpec, time: TimeSpec,
                   z0: np.ndarray, rng: np.random.Generator, n_dirs: int = 10,
                   base_u: float = 0.3, eps: float = 1e-3,
                   max_level_fraction: float = 0.8) -> list[tuple[float, float, float]]:
    """Adjoint directional derivatives of J against central differences.

    Each direction is a random field on one random time level drawn from the
    first ``max_level_fraction`` of the horizon. Returns tuples
    ``(adjoint, finite_difference, relative_error)``.
    """
    u = np.full((time.nt + 1,) + g.shape, base_u)
    controls = ControlTrajectory(u)
    states = simulate_forward(z0, controls, p, g, time)
    adjoint = solve_adjoint(states, controls, p, cfg, "full_jacobian")
    grad = objective_gradient(states, controls, adjoint, cfg)

    def J_of(values):
        c = ControlTrajectory(values)
        return evaluate_objective(simulate_forward(z0, c, p, g, time), c, cfg)

    results = []
    top = max(1, int(max_level_fraction * time.nt))
    for _ in range(n_dirs):
        du = np.zeros_like(u)
        du[rng.integers(0, top)] = rng.uniform(-1.0, 1.0, g.shape)
        adj = float(np.sum(grad * du))
        fd = (J_of(u + eps * du) - J_of(u - eps * du)) / (2 * eps)
        results.append((adj, fd, abs(adj - fd) / abs(fd)))
    return results


def run_validation(cfg: ScenarioConfig, seed: int = 0) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    p = cfg.model
    results = stencil_checks(rng)

    z_point = (2.19, 0.5, 0.0, 0.0)
    for u in (0.0, 0.5):
        err, secs = homogeneous_reduction_error(p, z_point, u)
        results.append(CheckResult(f"homogeneous_vs_rk4_u={u}", err, 1e-3,
                                   err < 1e-3 and secs < 10, f"pde_time={secs:.2f}s"))

    controls = ControlTrajectory.constant(cfg.control.value, cfg.grid, cfg.time)
    states = simulate_forward(cfg.initial_state(), controls, p, cfg.grid, cfg.time)
    results.append(CheckResult("clamp_events", states.clamp_count, 0,
                               states.clamp_count == 0))
    excess = boundedness_violation(states)
    results.append(CheckResult("a_priori_bound_excess", excess, 0.0,
                               excess <= 0 and states.states.min() >= 0,
                               f"k={states.max_reaction:.4g}"))
    N = states.totals().sum(axis=1)
    exact = population_closed_form(cfg.time.times, N[0], p, cfg.grid.area)
    dev = float(np.max(np.abs(N - exact) / exact))
    results.append(CheckResult("population_law", dev, 1e-3, dev < 1e-3))
    del states

    g = GridSpec(16, 16)
    time = TimeSpec.fitted(5.0, 1e-2)
    X, Y = g.mesh()
    z0 = np.stack([np.full(g.shape, 2.19),
                   0.5 * np.exp(-((X - 5) ** 2 + (Y - 5) ** 2) / 2.0),
                   np.zeros(g.shape), np.zeros(g.shape)])
    checks = gradient_check(p, cfg.objective, g, time, z0, rng, n_dirs=3)
    worst = max(r for _, _, r in checks)
    results.append(CheckResult("adjoint_gradient_vs_fd", worst, 1e-2, worst < 1e-2))
    return results


def format_table(results: list[CheckResult]) -> str:
    lines = [f"{'':6}{'check':<34} {'value':<12} detail"]
    lines += [r.line() for r in results]
    passed = sum(r.passed for r in results)
    lines.append(f"{passed}/{len(results)} checks passed")
    return "\n".join(lines)
