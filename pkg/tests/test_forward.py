import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sica.errors import StabilityViolation
from sica.forward import (ControlTrajectory, StepStats, TimeSpec, boundedness_violation,
                          cfl_max_dt, check_cfl, iter_forward, population_closed_form,
                          simulate_forward, simulate_ode_reference, step_state)
from sica.grid import GridSpec, integrate_field
from sica.model import ModelParams, reaction_terms
from sica.validation import max_relative_error

P = ModelParams()
NO_KINETICS = ModelParams(mu=0.0, Lambda=0.0, beta=0.0, phi=0.0, rho=0.0, gamma=0.0,
                          omega=0.0)


def uniform(g, point):
    return np.array(point, dtype=float)[:, None, None] * np.ones(g.shape)


def bump(g, amplitude=0.5, width=1.0):
    X, Y = g.mesh()
    r2 = (X - g.Lx / 2) ** 2 + (Y - g.Ly / 2) ** 2
    return amplitude * np.exp(-r2 / (2 * width**2))


def test_timespec_levels():
    t = TimeSpec(1.0, 0.25)
    assert t.nt == 4
    np.testing.assert_allclose(t.times, [0, 0.25, 0.5, 0.75, 1.0])
    np.testing.assert_allclose(t.weights, [0.125, 0.25, 0.25, 0.25, 0.125])


@pytest.mark.parametrize("T,dt", [(1.0, 0.0), (1.0, -0.1), (1.0, 0.3), (-1.0, 0.1)])
def test_timespec_rejects(T, dt):
    with pytest.raises(ValueError):
        TimeSpec(T, dt)


def test_timespec_fitted():
    t = TimeSpec.fitted(25.0, 0.0063)
    assert t.dt <= 0.0063 and t.nt == 3969
    assert TimeSpec.fitted(25.0, 1e-2).nt == 2500


def test_cfl_example():
    p = ModelParams(d_S=0.9, d_I=0.1, d_C=0.1, d_A=0.1)
    g = GridSpec(11, 11, 10.0, 10.0)  # dx = dy = 1
    assert cfl_max_dt(p, g) == pytest.approx(0.25, rel=1e-15)


def test_cfl_cap_without_diffusion():
    p = ModelParams(d_S=0, d_I=0, d_C=0, d_A=0)
    assert cfl_max_dt(p, GridSpec()) == 1e-2
    assert cfl_max_dt(p, GridSpec(), cap=0.5) == 0.5


def test_cfl_quarters_when_spacing_halves():
    coarse, fine = GridSpec(11, 11), GridSpec(21, 21)
    assert cfl_max_dt(P, fine) == pytest.approx(cfl_max_dt(P, coarse) / 4, rel=1e-14)


def test_check_cfl_raises():
    g = GridSpec(11, 11)
    with pytest.raises(StabilityViolation):
        check_cfl(0.3, P, g)
    check_cfl(0.25, P, g)


def test_control_trajectory_bounds():
    with pytest.raises(ValueError):
        ControlTrajectory(np.full((3, 4, 4), 1.2))
    with pytest.raises(ValueError):
        ControlTrajectory(np.full((3, 4, 4), -0.1))
    with pytest.raises(ValueError):
        ControlTrajectory(np.full((3, 4, 4), 0.6), u_max=0.5)
    c = ControlTrajectory.constant(0.5, GridSpec(4, 4), TimeSpec(1.0, 0.5))
    assert c.nt == 2 and c[1].shape == (4, 4)


def test_uniform_step_is_pointwise_euler():
    g = GridSpec(6, 5)
    point = np.array([1.5, 0.3, 0.2, 0.1])
    dt = 0.01
    new = step_state(uniform(g, point), 0.4, P, g, dt)
    expected = point + dt * reaction_terms(point, 0.4, P)
    for i in range(g.nx):
        for j in range(g.ny):
            np.testing.assert_allclose(new[:, i, j], expected, rtol=1e-15)


def test_disease_free_state_is_fixed():
    g = GridSpec(8, 8)
    z = uniform(g, (2.19, 0, 0, 0))
    np.testing.assert_allclose(step_state(z, 0.0, P, g, 0.01), z, rtol=1e-15)


def test_pure_diffusion_conserves_mass():
    g = GridSpec(32, 32)
    z0 = np.zeros((4,) + g.shape)
    z0[1] = bump(g)
    time = TimeSpec.fitted(2.0, cfl_max_dt(NO_KINETICS, g))
    controls = ControlTrajectory.constant(0.0, g, time)
    traj = simulate_forward(z0, controls, NO_KINETICS, g, time)
    mass = integrate_field(traj.I, g)
    assert np.max(np.abs(mass - mass[0])) / mass[0] < 1e-10
    assert traj.I[-1].max() < traj.I[0].max()  # it does spread


def test_zero_horizon_returns_initial_state():
    g = GridSpec(5, 5)
    z0 = uniform(g, (1, 0.2, 0, 0))
    time = TimeSpec(0.0, 0.01)
    traj = simulate_forward(z0, ControlTrajectory.constant(0.0, g, time), P, g, time)
    assert len(traj) == 1
    np.testing.assert_array_equal(traj[0], z0)


def test_step_raises_on_large_negative():
    g = GridSpec(4, 4)
    z = uniform(g, (0.0, 1.0, 0.0, 0.0))
    with pytest.raises(StabilityViolation, match="negative"):
        step_state(z, 1.0, P, g, dt=5.0)


def test_step_clamps_round_off_and_counts():
    g = GridSpec(4, 4)
    z = uniform(g, (0.0, 1.0, 0.0, 0.0))
    stats = StepStats()
    new = step_state(z, 1.0, P, g, dt=5.0, eps_neg=100.0, stats=stats)
    assert stats.clamped == 16 and new.min() == 0.0


def test_violation_reports_time_index():
    g = GridSpec(4, 4, 1000.0, 1000.0)
    z0 = uniform(g, (0.0, 1.0, 0.0, 0.0))
    time = TimeSpec(10.0, 1.0)
    with pytest.raises(StabilityViolation) as info:
        simulate_forward(z0, ControlTrajectory.constant(1.0, g, time), P, g, time)
    assert info.value.time_index == 1


def test_initial_state_checks():
    g = GridSpec(4, 4)
    time = TimeSpec(1.0, 0.1)
    c = ControlTrajectory.constant(0.0, g, time)
    with pytest.raises(ValueError):
        simulate_forward(np.zeros((4, 5, 5)), c, P, g, time)
    with pytest.raises(ValueError):
        simulate_forward(-np.ones((4, 4, 4)), c, P, g, time)


def test_left_point_control_sampling():
    g = GridSpec(3, 3)
    time = TimeSpec(0.2, 0.1)
    z0 = uniform(g, (1.0, 0.5, 0.0, 0.0))
    u = np.zeros((3,) + g.shape)
    u[1] = 1.0  # only the second interval is treated
    traj = simulate_forward(z0, ControlTrajectory(u), P, g, time)
    untreated = step_state(z0, 0.0, P, g, 0.1)
    np.testing.assert_allclose(traj[1], untreated)
    np.testing.assert_allclose(traj[2], step_state(untreated, 1.0, P, g, 0.1))


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_population_law_random_controls(seed):
    rng = np.random.default_rng(seed)
    g = GridSpec(10, 10)
    time = TimeSpec(2.0, 1e-3)
    z0 = np.stack([np.full(g.shape, 2.0), bump(g), rng.random(g.shape) * 0.1,
                   np.zeros(g.shape)])
    controls = rng.random((time.nt + 1,) + g.shape)
    N0 = None
    worst = 0.0
    for n, z in iter_forward(z0, controls, P, g, time):
        N = float(integrate_field(z, g).sum())
        N0 = N if N0 is None else N0
        exact = population_closed_form(n * time.dt, N0, P, g.area)
        worst = max(worst, abs(N - exact) / exact)
    assert worst < 1e-3


def test_boundedness_on_small_run():
    g = GridSpec(16, 16)
    time = TimeSpec.fitted(5.0, min(1e-2, cfl_max_dt(P, g)))
    z0 = np.stack([np.full(g.shape, 2.19), bump(g), np.zeros(g.shape), np.zeros(g.shape)])
    traj = simulate_forward(z0, ControlTrajectory.constant(0.5, g, time), P, g, time)
    assert traj.clamp_count == 0
    assert traj.states.min() >= 0
    assert boundedness_violation(traj) <= 0


def test_ode_reference_equilibrium():
    ref = simulate_ode_reference((2.19, 0, 0, 0), 0.0, P, 5.0, 1e-2)
    np.testing.assert_allclose(ref, np.tile([2.19, 0, 0, 0], (len(ref), 1)), atol=1e-15)


def test_ode_reference_population_law():
    ref = simulate_ode_reference((1.0, 0.5, 0.2, 0.1), 0.0, P, 5.0, 1e-4, stride=100)
    t = np.arange(len(ref)) * 1e-2
    exact = population_closed_form(t, ref[0].sum(), P, 1.0)
    np.testing.assert_allclose(ref.sum(axis=1), exact, rtol=1e-9)


def test_treatment_lowers_final_infected():
    z0 = (2.19, 0.5, 0.0, 0.0)
    I_untreated = simulate_ode_reference(z0, 0.0, P, 25.0, 1e-2)[-1, 1]
    I_treated = simulate_ode_reference(z0, 1.0, P, 25.0, 1e-2)[-1, 1]
    assert I_treated < I_untreated


def test_ode_reference_rejects_bad_step():
    with pytest.raises(ValueError):
        simulate_ode_reference((1, 0, 0, 0), 0.0, P, 1.0, 0.0)
    with pytest.raises(ValueError):
        simulate_ode_reference((1, 0, 0, 0), 0.0, P, 1.0, 0.3)


def test_ode_reference_flags_blow_up():
    hot = ModelParams(beta=1e6)
    with pytest.raises(StabilityViolation):
        simulate_ode_reference((1e3, 1e3, 0, 0), 0.0, hot, 1.0, 0.1)


def _homogeneous_error(dt, T=5.0, u=0.0):
    g = GridSpec(3, 3)
    time = TimeSpec(T, dt)
    point = (2.19, 0.5, 0.0, 0.0)
    traj = simulate_forward(uniform(g, point), ControlTrajectory.constant(u, g, time), P, g,
                            time)
    ref = simulate_ode_reference(point, u, P, T, dt / 100, stride=100)
    return max_relative_error(traj.states[:, :, 0, 0], ref)


def test_first_order_in_time():
    errors = [_homogeneous_error(dt) for dt in (0.04, 0.02, 0.01)]
    orders = np.log2(np.array(errors[:-1]) / np.array(errors[1:]))
    assert np.all(orders >= 0.9)
