import numpy as np
import pytest
import sympy as sp
from hypothesis import given
from hypothesis import strategies as st

from densityflow.errors import GridMismatch
from densityflow.grid import (
    PeriodicGrid,
    ScalarField,
    VectorField,
    divergence,
    gradient,
    inner,
    integrate,
    interpolate,
    laplacian,
    lie_bracket,
    random_field,
    spectral_filter,
)

x = sp.Symbol("x", real=True)


def sample(grid, expr):
    return np.broadcast_to(sp.lambdify(x, expr, "numpy")(grid.coords[0]), grid.shape).astype(float)


def test_constructor_validation():
    with pytest.raises(ValueError):
        PeriodicGrid.circle(15)
    with pytest.raises(ValueError):
        PeriodicGrid.circle(8)
    with pytest.raises(ValueError):
        PeriodicGrid.circle(32, length=-1.0)
    with pytest.raises(ValueError):
        PeriodicGrid((32, 32), (1.0, 1.0), np.zeros((32, 32)))


def test_grid_equality_and_mismatch(circle):
    assert circle == PeriodicGrid.circle(128)
    other = PeriodicGrid.circle(64)
    with pytest.raises(GridMismatch):
        ScalarField(circle, 0.0) + ScalarField(other, 0.0)


def test_fields_reject_non_finite(small_circle):
    with pytest.raises(ValueError):
        ScalarField(small_circle, np.full(32, np.nan))


def test_flat_derivatives_of_trig_polynomial(circle):
    f = circle.sample(lambda s: np.sin(3 * s) + np.cos(s))
    g = gradient(f).components[0]
    assert np.max(np.abs(g - (3 * np.cos(3 * circle.coords[0]) - np.sin(circle.coords[0])))) < 1e-12
    lap = laplacian(f).values
    assert np.max(np.abs(lap + 9 * np.sin(3 * circle.coords[0]) + np.cos(circle.coords[0]))) < 1e-11


def test_conformal_operators_match_symbolic_formulas(conformal_circle):
    lam = 0.3 * sp.sin(x)
    f = sp.cos(x) + sp.sin(2 * x) / 3
    grad = sp.exp(-2 * lam) * sp.diff(f, x)
    lap = sp.exp(-lam) * sp.diff(sp.exp(lam) * grad, x)
    F = ScalarField(conformal_circle, sample(conformal_circle, f))
    assert np.max(np.abs(gradient(F).components[0] - sample(conformal_circle, grad))) < 1e-10
    assert np.max(np.abs(laplacian(F).values - sample(conformal_circle, lap))) < 1e-9


def test_conformal_volume_and_integral(conformal_circle):
    exact = float(sp.N(sp.Integral(sp.exp(0.3 * sp.sin(x)), (x, 0, 2 * sp.pi)), 20))
    assert conformal_circle.volume == pytest.approx(exact, rel=1e-13)


def test_torus_divergence_theorem(torus, rng):
    X = VectorField(torus, (random_field(torus, rng).values, random_field(torus, rng).values))
    assert abs(integrate(divergence(X))) < 1e-12


def test_integration_by_parts(conformal_circle, rng):
    f, h = random_field(conformal_circle, rng), random_field(conformal_circle, rng)
    lhs = integrate(inner(gradient(f), gradient(h)))
    rhs = -integrate(f * laplacian(h))
    assert lhs == pytest.approx(rhs, rel=1e-10)


def test_lie_bracket_of_gradients_matches_symbolic(circle):
    p, q = sp.cos(x), sp.sin(x)
    gp, gq = sp.diff(p, x), sp.diff(q, x)
    expected = sp.simplify(gp * sp.diff(gq, x) - gq * sp.diff(gp, x))
    assert expected == 1
    B = lie_bracket(gradient(circle.sample(np.cos)), gradient(circle.sample(np.sin)))
    assert np.max(np.abs(B.components[0] - 1.0)) < 1e-12


def test_lie_bracket_antisymmetric(torus, rng):
    X = gradient(random_field(torus, rng))
    Y = gradient(random_field(torus, rng))
    assert (lie_bracket(X, Y) + lie_bracket(Y, X)).max_abs() < 1e-12
    assert lie_bracket(X, X).max_abs() == 0.0


@given(st.floats(0.0, 2 * np.pi), st.integers(0, 2**32 - 1))
def test_interpolation_is_exact_for_band_limited_fields(point, seed):
    grid = PeriodicGrid.circle(32)
    f = random_field(grid, np.random.default_rng(seed), kmax=6)
    coeffs = np.fft.rfft(f.values)
    k = np.arange(len(coeffs))
    w = np.where((k == 0), 1.0, 2.0)
    exact = float(np.sum(w * (coeffs * np.exp(1j * k * point)).real) / grid.size)
    assert interpolate(f, point) == pytest.approx(exact, abs=1e-12)


def test_spectral_filter_keeps_low_modes(circle):
    low = circle.sample(lambda s: np.cos(3 * s)).values
    high = circle.sample(lambda s: np.cos(60 * s)).values
    assert np.max(np.abs(spectral_filter(low + high, circle) - low)) < 1e-12


def test_random_field_properties(circle, rng):
    f = random_field(circle, rng, amplitude=0.7)
    assert f.max_abs() == pytest.approx(0.7)
    assert abs(integrate(f)) < 1e-12
