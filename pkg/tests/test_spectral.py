import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fisher_stab import (
    Grid,
    ModelParams,
    SpectralData,
    StateField,
    boundary_normal_derivative,
    eigenfunction_values,
    eigenvalue,
    modal_projection,
    unstable_mode_count,
)
from fisher_stab.exceptions import ConfigError, WindowError
from fisher_stab.spectral import projection_matrix, window_weights

from oracles import adaptive_simpson



def mp_eigenvalue(alpha, j):
    return float((mpmath.pi * j) ** 2 - mpmath.mpf(alpha))


@pytest.mark.parametrize("alpha,j,expected", [(30, 1, -20.1304), (30, 3, 58.8264)])
def test_eigenvalue_examples(alpha, j, expected):
    assert eigenvalue(alpha, j) == pytest.approx(mp_eigenvalue(alpha, j), abs=1e-12)
    assert eigenvalue(alpha, j) == pytest.approx(expected, abs=1e-4)


def test_marginal_eigenvalue():
    assert eigenvalue(np.pi**2, 1) == pytest.approx(0.0, abs=1e-13)


def test_eigenvalue_formula_random():
    rng = np.random.default_rng(3)
    for alpha in rng.uniform(0, 100, size=20):
        for j in range(1, 51):
            ref = mp_eigenvalue(alpha, j)
            assert abs(eigenvalue(alpha, j) - ref) <= 1e-12 * (np.pi * j) ** 2


@pytest.mark.parametrize("alpha,rho,n", [(30, 15, 2), (0.5, 0.1, 0), (30, 60, 3), (30, 12, 2)])
def test_unstable_mode_count(alpha, rho, n):
    assert unstable_mode_count(alpha, rho) == n


@given(st.floats(1.0, 200.0), st.floats(0.1, 400.0))
@settings(max_examples=200, deadline=None)
def test_cutoff_consistency(alpha, rho):
    try:
        n = unstable_mode_count(alpha, rho)
    except ConfigError:
        return
    if n > 0:
        assert eigenvalue(alpha, n) < rho
    assert eigenvalue(alpha, n + 1) >= rho


def test_cutoff_on_eigenvalue_rejected():
    with pytest.raises(ConfigError):
        unstable_mode_count(30.0, eigenvalue(30.0, 2))


def test_rho_must_be_positive():
    with pytest.raises(ConfigError):
        unstable_mode_count(30.0, 0.0)


def test_spectral_data(spectral):
    assert spectral.n_unstable == 2
    np.testing.assert_allclose(spectral.lambdas, [np.pi**2 - 30, 4 * np.pi**2 - 30], rtol=1e-14)
    np.testing.assert_allclose(spectral.normal_derivs, [-np.pi, 2 * np.pi], rtol=1e-14)
    assert np.all(np.diff(spectral.lambdas) > 0)


def test_eigenfunction_values():
    grid = Grid(200)
    mid = grid.snap(0.5)
    assert eigenfunction_values(1, grid).values[mid] == pytest.approx(1.0)
    assert eigenfunction_values(2, grid).values[mid] == pytest.approx(0.0, abs=1e-15)
    phi3 = eigenfunction_values(3, grid).values
    assert phi3[0] == 0.0 and phi3[-1] == 0.0


def test_boundary_normal_derivative():
    assert boundary_normal_derivative(1) == pytest.approx(-np.pi)
    assert boundary_normal_derivative(2) == pytest.approx(2 * np.pi)
    for j in range(1, 20):
        assert np.sign(boundary_normal_derivative(j + 1)) == -np.sign(boundary_normal_derivative(j))
        # finite-difference derivative of sin(pi j x) at x = 1
        x = 1 - 1e-6
        fd = (np.sin(np.pi * j) - np.sin(np.pi * j * x)) / 1e-6
        assert fd == pytest.approx(boundary_normal_derivative(j), rel=1e-4)


def test_projection_examples():
    grid = Grid(200)
    h2 = grid.h**2
    s1 = eigenfunction_values(1, grid)
    s2 = eigenfunction_values(2, grid)
    assert abs(modal_projection(s1, 1) - 0.5) <= 2 * h2
    assert abs(modal_projection(s2, 1)) <= 2 * h2


def test_projection_matches_adaptive_simpson():
    grid = Grid(400)
    u = StateField.from_function(lambda x: 5 * x * np.exp(x), grid)
    ref = adaptive_simpson(lambda x: 5 * x * np.exp(x) * np.sin(np.pi * x), 0.0, 1.0)
    assert modal_projection(u, 1) == pytest.approx(ref, abs=1e-4)


def test_projection_order():
    f = lambda x: 5 * x * np.exp(x)
    ref = adaptive_simpson(lambda x: f(x) * np.sin(2 * np.pi * x), 0.0, 1.0)
    errs = [abs(modal_projection(StateField.from_function(f, Grid(m)), 2) - ref) for m in (100, 200)]
    order = np.log2(errs[0] / errs[1])
    assert 1.7 <= order <= 2.3


def test_orthogonality():
    grid = Grid(200)
    for i in range(1, 6):
        phi = eigenfunction_values(i, grid)
        for j in range(1, 6):
            if i != j:
                assert abs(modal_projection(phi, j)) <= 2 * grid.h**2


def test_windowed_projection():
    grid = Grid(200)
    u = StateField.from_function(lambda x: np.ones_like(x), grid)
    # int_{0.5}^{1} sin(pi x) dx = 1/pi
    assert modal_projection(u, 1, (0.5, 1.0)) == pytest.approx(1 / np.pi, abs=2 * grid.h**2)
    w = window_weights(grid, (0.25, 0.75))
    assert np.all(w[: grid.snap(0.25)] == 0) and np.all(w[grid.snap(0.75) + 1 :] == 0)


@pytest.mark.parametrize("window", [(0.5, 0.5), (0.7, 0.3), (-0.1, 0.5), (0.2, 1.1), (0.5, 0.504)])
def test_bad_windows(window):
    grid = Grid(200)
    u = eigenfunction_values(1, grid)
    with pytest.raises(WindowError):
        modal_projection(u, 1, window)


def test_projection_matrix_rows(spectral):
    grid = Grid(100)
    p = projection_matrix(spectral, grid)
    u = StateField.from_function(lambda x: x * (1 - x), grid)
    assert p @ u.values == pytest.approx([modal_projection(u, 1), modal_projection(u, 2)])


def test_state_field_immutable_and_finite():
    grid = Grid(10)
    vals = np.zeros(11)
    f = StateField(grid, vals)
    vals[3] = 1.0
    assert f.values[3] == 0.0
    with pytest.raises(ValueError):
        f.values[0] = 1.0
    with pytest.raises(ValueError):
        StateField(grid, np.full(11, np.nan))
    with pytest.raises(ValueError):
        StateField(grid, np.zeros(5))


def test_state_field_arithmetic():
    grid = Grid(10)
    a = StateField.from_function(np.sin, grid)
    b = StateField.from_function(np.cos, grid)
    np.testing.assert_allclose((a + b).values, np.sin(grid.nodes) + np.cos(grid.nodes))
    np.testing.assert_allclose((a * 2.0).values, 2 * np.sin(grid.nodes))


def test_grid():
    g = Grid(4)
    assert g.h == 0.25
    np.testing.assert_array_equal(g.nodes, [0, 0.25, 0.5, 0.75, 1.0])
    with pytest.raises(ConfigError):
        Grid(0)


def test_model_params():
    assert ModelParams(30, 0.3).linearized.beta == 0.0
    with pytest.raises(ConfigError):
        ModelParams(30, -1.0)


def test_spectral_compute_zero_modes():
    sp = SpectralData.compute(0.5, 0.1)
    assert sp.n_unstable == 0
    assert sp.lambdas.size == 0
