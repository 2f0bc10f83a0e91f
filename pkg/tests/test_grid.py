import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sica.grid import GridSpec, inner_product, integrate_field, laplacian_neumann
from sica.validation import eigenfunction_errors, observed_orders


def test_grid_geometry():
    g = GridSpec(11, 21, 10.0, 5.0)
    assert g.shape == (11, 21)
    assert g.dx == 1.0 and g.dy == 0.25
    assert g.area == 50.0
    X, Y = g.mesh()
    assert X[3, 7] == 3.0 and Y[3, 7] == 1.75
    assert g.weights.sum() == pytest.approx(g.area, rel=1e-15)


@pytest.mark.parametrize("kwargs", [dict(nx=2), dict(ny=1), dict(Lx=0.0), dict(Ly=-1.0)])
def test_grid_rejects_bad_sizes(kwargs):
    with pytest.raises(ValueError):
        GridSpec(**kwargs)


def test_shape_mismatch_rejected():
    g = GridSpec(8, 8)
    with pytest.raises(ValueError):
        laplacian_neumann(np.zeros((8, 9)), g)
    with pytest.raises(ValueError):
        integrate_field(np.zeros(8), g)


def test_laplacian_of_constant_is_exactly_zero():
    g = GridSpec(13, 9, 3.0, 7.0)
    assert np.all(laplacian_neumann(np.full(g.shape, 4.2), g) == 0.0)


def test_laplacian_exact_on_quadratic_interior():
    g = GridSpec(11, 11)  # dx = 1, so x^2 samples are exact integers
    X, _ = g.mesh()
    lap = laplacian_neumann(X**2, g)
    np.testing.assert_array_equal(lap[1:-1, 1:-1], 2.0)


def test_laplacian_spike():
    g = GridSpec(9, 9, 4.0, 4.0)
    h = g.dx
    f = np.zeros(g.shape)
    f[4, 4] = 1.0
    expected = np.zeros(g.shape)
    expected[4, 4] = -4 / h**2
    for i, j in [(3, 4), (5, 4), (4, 3), (4, 5)]:
        expected[i, j] = 1 / h**2
    np.testing.assert_allclose(laplacian_neumann(f, g), expected, rtol=1e-15)


def test_laplacian_boundary_reflection():
    g = GridSpec(5, 5)
    f = np.zeros(g.shape)
    f[1, 2] = 1.0
    # ghost at i=-1 mirrors i=1, so the boundary node sees the value twice
    assert laplacian_neumann(f, g)[0, 2] == pytest.approx(2.0 / g.dx**2)


def test_laplacian_handles_stacked_fields():
    g = GridSpec(7, 6)
    rng = np.random.default_rng(3)
    f = rng.random((4, 7, 6))
    stacked = laplacian_neumann(f, g)
    for k in range(4):
        np.testing.assert_array_equal(stacked[k], laplacian_neumann(f[k], g))


def test_integrate_examples():
    g = GridSpec(33, 17)
    X, Y = g.mesh()
    assert integrate_field(np.ones(g.shape), g) == pytest.approx(100.0, rel=1e-14)
    assert integrate_field(X, g) == pytest.approx(500.0, rel=1e-14)
    assert integrate_field(X * Y, g) == pytest.approx(2500.0, rel=1e-14)


def test_inner_product_matches_integral():
    g = GridSpec(6, 6)
    f = np.arange(36.0).reshape(6, 6)
    assert inner_product(f, f, g) == pytest.approx(float(integrate_field(f**2, g)))


sizes = st.integers(3, 24)


@settings(max_examples=40, deadline=None)
@given(sizes, sizes, st.floats(0.5, 20), st.floats(0.5, 20), st.integers(0, 2**32 - 1))
def test_discrete_conservation(nx, ny, Lx, Ly, seed):
    g = GridSpec(nx, ny, Lx, Ly)
    lap = laplacian_neumann(np.random.default_rng(seed).random(g.shape), g)
    assert abs(integrate_field(lap, g)) <= 1e-10 * integrate_field(np.abs(lap), g) + 1e-300


@settings(max_examples=40, deadline=None)
@given(sizes, sizes, st.floats(0.5, 20), st.floats(0.5, 20), st.integers(0, 2**32 - 1))
def test_self_adjoint(nx, ny, Lx, Ly, seed):
    g = GridSpec(nx, ny, Lx, Ly)
    rng = np.random.default_rng(seed)
    f, h = rng.random(g.shape), rng.random(g.shape)
    lhs = inner_product(laplacian_neumann(f, g), h, g)
    rhs = inner_product(f, laplacian_neumann(h, g), g)
    assert abs(lhs - rhs) <= 1e-10 * max(abs(lhs), abs(rhs))


def test_second_order_convergence_on_eigenfunction():
    orders = observed_orders(eigenfunction_errors((17, 33, 65)))
    assert len(orders) == 2
    assert min(orders) >= 1.9
