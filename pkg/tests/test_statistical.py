import numpy as np
import pytest
import sympy as sp
from hypothesis import given
from hypothesis import strategies as st

from densityflow.errors import DomainTooSmall, NonZeroSum
from densityflow.statistical import (
    FiniteProbability,
    GaussianPoint,
    KahlerFunction,
    LineSamples,
    expectation,
    finite_wave,
    gaussian_density,
    gaussian_phase_check,
    gaussian_wave,
    kahler_bracket,
    kahler_eval,
    quantize,
)

K = KahlerFunction
xi = sp.Symbol("xi", real=True)


def test_gaussian_wave_at_origin():
    s = LineSamples.around(0.0)
    for hbar in (0.5, 1.0, 2.0):
        psi = gaussian_wave(GaussianPoint(0.0, 0.0), hbar, s)
        assert np.all(psi.imag == 0.0) and np.all(psi.real > 0)
        assert s.integrate(np.abs(psi) ** 2).real == pytest.approx(1.0, abs=1e-12)


def test_modulus_law():
    z = GaussianPoint.from_complex(1 + 2j)
    s = LineSamples.around(z.x)
    assert np.max(np.abs(np.abs(gaussian_wave(z, 1.0, s)) ** 2 - gaussian_density(s.points, 1.0))) < 1e-14


def test_domain_too_small():
    with pytest.raises(DomainTooSmall):
        gaussian_wave(GaussianPoint(0.0, 0.0), 1.0, LineSamples.around(0.0, half_width=8.0))
    with pytest.raises(DomainTooSmall):
        gaussian_wave(GaussianPoint(5.0, 0.0), 1.0, LineSamples.around(0.0))


def test_kahler_eval_examples():
    z = GaussianPoint.from_complex(1 + 2j)
    assert kahler_eval(K.One, z) == 1.0
    assert kahler_eval(K.Harmonic, z) == 2.5
    assert kahler_eval(K.PosY, z) == 2.0


def test_bracket_table():
    assert kahler_bracket(K.PosX, K.PosY) == {K.One: 1.0}
    assert kahler_bracket(K.PosY, K.PosX) == {K.One: -1.0}
    assert kahler_bracket(K.PosX, K.Harmonic) == {K.PosY: 1.0}
    assert kahler_bracket(K.PosY, K.Harmonic) == {K.PosX: -1.0}
    for f in K:
        assert kahler_bracket(K.One, f) == {} and kahler_bracket(f, f) == {}


def test_bracket_table_matches_canonical_poisson_bracket():
    x, y = sp.symbols("x y", real=True)
    exprs = {K.One: sp.Integer(1), K.PosX: x, K.PosY: y, K.Harmonic: (x**2 + y**2) / 2}
    for f in K:
        for g in K:
            a, b = exprs[f], exprs[g]
            exact = sp.expand(sp.diff(a, x) * sp.diff(b, y) - sp.diff(a, y) * sp.diff(b, x))
            table = sum((c * exprs[t] for t, c in kahler_bracket(f, g).items()), sp.Integer(0))
            assert sp.simplify(exact - table) == 0


def test_quantized_operators_on_samples():
    s = LineSamples.around(0.0)
    g = np.exp(-s.points**2 / 4)
    assert np.array_equal(quantize(K.One, 1.3)(g, s), g)
    assert np.max(np.abs(quantize(K.PosX, 1.3)(g, s) - s.points * g)) == 0.0
    derivative = sp.lambdify(xi, sp.diff(sp.exp(-xi**2 / 4), xi), "numpy")(s.points)
    assert np.max(np.abs(quantize(K.PosY, 1.3)(g, s) - 1.3j * derivative)) < 1e-12


@given(st.integers(0, 2**32 - 1))
def test_quantization_is_linear(seed):
    rng = np.random.default_rng(seed)
    s = LineSamples.around(0.0, n=512)
    u = np.exp(-(s.points - rng.uniform(-1, 1)) ** 2) * np.exp(1j * rng.uniform(-2, 2) * s.points)
    v = np.exp(-(s.points - rng.uniform(-1, 1)) ** 2 / 3)
    a, b = complex(*rng.normal(size=2)), complex(*rng.normal(size=2))
    for f in K:
        Q = quantize(f, 0.8)
        assert np.max(np.abs(Q(a * u + b * v, s) - a * Q(u, s) - b * Q(v, s))) < 1e-10


def test_expectation_examples():
    z = GaussianPoint.from_complex(1 + 2j)
    assert expectation(K.PosX, z, 1.0) == pytest.approx(1.0, abs=1e-8)
    assert expectation(K.Harmonic, z, 1.0) == pytest.approx(2.5, abs=1e-8)
    assert expectation(K.One, GaussianPoint(-1.5, 0.3), 2.0) == pytest.approx(1.0, abs=1e-12)


@given(st.floats(-2, 2), st.floats(-2, 2), st.sampled_from([0.5, 1.0, 2.0]), st.sampled_from(list(K)))
def test_expectation_identity(x, y, hbar, f):
    z = GaussianPoint(x, y)
    assert abs(expectation(f, z, hbar) - kahler_eval(f, z)) < 1e-8


def test_phase_check_orientation():
    assert gaussian_phase_check(0.0, 0.0).residual == 0.0
    forward = gaussian_phase_check(-0.7, 0.7, mu=0.4)
    assert forward.residual < 1e-10 and forward.orientation == 1
    mirrored = gaussian_phase_check(0.7, 0.7, mu=0.4)
    assert mirrored.residual < 1e-10 and mirrored.orientation == -1
    assert forward.residuals[-1] > 0.1


def test_finite_wave_examples():
    p = FiniteProbability(np.array([0.5, 0.5]))
    psi = finite_wave(p, [0.25, -0.25])
    expected = np.sqrt(0.5) * np.exp(np.array([0.25j, -0.25j]))
    assert np.max(np.abs(psi - expected)) < 1e-15
    assert np.array_equal(finite_wave(p, [0.0, 0.0]), np.sqrt(p.weights))


@given(st.integers(0, 2**32 - 1), st.integers(2, 10))
def test_finite_wave_modulus(seed, n):
    rng = np.random.default_rng(seed)
    w = rng.uniform(0.1, 1.0, n)
    p = FiniteProbability(w / w.sum())
    pdot = rng.normal(size=n)
    pdot -= pdot.mean()
    assert np.max(np.abs(np.abs(finite_wave(p, pdot)) ** 2 - p.weights)) < 1e-15


def test_finite_probability_validation():
    with pytest.raises(ValueError):
        FiniteProbability(np.array([0.0, 1.0]))
    with pytest.raises(ValueError):
        FiniteProbability(np.array([0.5, 0.6]))
    with pytest.raises(NonZeroSum):
        finite_wave(FiniteProbability(np.array([0.5, 0.5])), [0.1, 0.1])
