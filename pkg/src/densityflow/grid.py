"""Spectral calculus on periodic grids.

Supported manifolds are the flat circle, the flat 2-torus and the circle
with a conformal metric ``exp(2*lam) dx^2`` (volume element ``exp(lam) dx``).
All derivatives are Fourier derivatives; the Nyquist mode is dropped from
odd derivatives so that derivatives of real fields stay real.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

from .errors import GridMismatch

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True, eq=False)
class PeriodicGrid:
    """Uniform periodic grid of dimension 1 or 2.

    ``conformal_exponent`` holds node values of ``lam`` and is only allowed
    in 1D; ``None`` means the flat metric.
    """

    points: tuple[int, ...]
    lengths: tuple[float, ...]
    conformal_exponent: np.ndarray | None = None

    def __post_init__(self):
        points = tuple(int(n) for n in self.points)
        lengths = tuple(float(L) for L in self.lengths)
        if len(points) not in (1, 2) or len(points) != len(lengths):
            raise ValueError("grid must be 1D or 2D with one length per axis")
        for n in points:
            if n < 16 or n % 2:
                raise ValueError(f"points per axis must be even and >= 16, got {n}")
        for L in lengths:
            if not (np.isfinite(L) and L > 0):
                raise ValueError(f"axis length must be positive and finite, got {L}")
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "lengths", lengths)
        if self.conformal_exponent is not None:
            if len(points) != 1:
                raise ValueError("conformal metrics are only supported in 1D")
            lam = np.array(self.conformal_exponent, dtype=float).reshape(points)
            if not np.all(np.isfinite(lam)):
                raise ValueError("conformal exponent must be finite")
            lam.setflags(write=False)
            object.__setattr__(self, "conformal_exponent", lam)

    @classmethod
    def circle(cls, n: int, length: float = TWO_PI, conformal=None) -> "PeriodicGrid":
        """Circle of circumference ``length``; ``conformal`` is an array or a callable of x."""
        if callable(conformal):
            x = np.arange(n) * (length / n)
            conformal = np.broadcast_to(np.asarray(conformal(x), dtype=float), (n,))
        return cls((n,), (length,), conformal)

    @classmethod
    def torus(cls, n: int | Sequence[int], lengths: float | Sequence[float] = TWO_PI) -> "PeriodicGrid":
        if np.isscalar(n):
            n = (n, n)
        if np.isscalar(lengths):
            lengths = (lengths, lengths)
        return cls(tuple(n), tuple(lengths))

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, PeriodicGrid):
            return NotImplemented
        if self.points != other.points or self.lengths != other.lengths:
            return False
        a, b = self.conformal_exponent, other.conformal_exponent
        if a is None or b is None:
            return a is None and b is None
        return bool(np.array_equal(a, b))

    def __hash__(self):
        return hash((self.points, self.lengths, self.conformal_exponent is None))

    @property
    def dim(self) -> int:
        return len(self.points)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.points

    @property
    def size(self) -> int:
        return int(np.prod(self.points))

    @property
    def is_flat(self) -> bool:
        return self.conformal_exponent is None

    @cached_property
    def spacing(self) -> tuple[float, ...]:
        return tuple(L / n for L, n in zip(self.lengths, self.points))

    @cached_property
    def axes(self) -> tuple[np.ndarray, ...]:
        return tuple(np.arange(n) * h for n, h in zip(self.points, self.spacing))

    @cached_property
    def coords(self) -> tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*self.axes, indexing="ij"))

    @cached_property
    def volume_element(self) -> np.ndarray:
        """Density of dvol with respect to the coordinate measure."""
        if self.is_flat:
            return np.ones(self.shape)
        return np.exp(self.conformal_exponent)

    @cached_property
    def metric_factor(self) -> np.ndarray:
        """Conformal factor of the metric: g(X, Y) = factor * <X, Y>_euclid."""
        if self.is_flat:
            return np.ones(self.shape)
        return np.exp(2.0 * self.conformal_exponent)

    @cached_property
    def weights(self) -> np.ndarray:
        """Quadrature weights of the uniform rule against dvol."""
        return self.volume_element * float(np.prod(self.spacing))

    @cached_property
    def volume(self) -> float:
        return float(self.weights.sum())

    @cached_property
    def wavenumbers(self) -> tuple[np.ndarray, ...]:
        """Angular wavenumbers per axis in rfft/fft layout, Nyquist zeroed.

        The last axis uses the rfft layout, the others the full fft layout.
        """
        ks = []
        for axis, (n, L) in enumerate(zip(self.points, self.lengths)):
            if axis == self.dim - 1:
                k = np.fft.rfftfreq(n, d=L / n) * TWO_PI
                k[-1] = 0.0
            else:
                k = np.fft.fftfreq(n, d=L / n) * TWO_PI
                k[n // 2] = 0.0
            shape = [1] * self.dim
            shape[axis] = k.size
            ks.append(k.reshape(shape))
        return tuple(ks)

    @cached_property
    def full_wavenumbers(self) -> tuple[np.ndarray, ...]:
        """Signed wavenumbers in rfft layout, Nyquist kept (for filters)."""
        ks = []
        for axis, (n, L) in enumerate(zip(self.points, self.lengths)):
            if axis == self.dim - 1:
                k = np.fft.rfftfreq(n, d=L / n) * TWO_PI
            else:
                k = np.fft.fftfreq(n, d=L / n) * TWO_PI
            shape = [1] * self.dim
            shape[axis] = k.size
            ks.append(k.reshape(shape))
        return tuple(ks)

    @cached_property
    def nyquist_modes(self) -> list[np.ndarray]:
        """Node values of the non-constant modes killed by the spectral gradient."""
        modes = []
        for signs in np.ndindex(*([2] * self.dim)):
            if not any(signs):
                continue
            m = np.ones(self.shape)
            for axis, s in enumerate(signs):
                if s:
                    idx = np.arange(self.points[axis])
                    shape = [1] * self.dim
                    shape[axis] = -1
                    m = m * ((-1.0) ** idx).reshape(shape)
            modes.append(m)
        return modes

    def fft(self, values: np.ndarray) -> np.ndarray:
        return np.fft.rfftn(values)

    def ifft(self, coeffs: np.ndarray) -> np.ndarray:
        return np.fft.irfftn(coeffs, s=self.shape, axes=tuple(range(self.dim)))

    def diff(self, values: np.ndarray, axis: int) -> np.ndarray:
        """Coordinate partial derivative of node values along ``axis``."""
        return self.ifft(1j * self.wavenumbers[axis] * self.fft(values))

    def same(self, other: "PeriodicGrid") -> None:
        if not (self is other or self == other):
            raise GridMismatch("fields live on different grids")

    def sample(self, func: Callable[..., np.ndarray]) -> "ScalarField":
        """Scalar field with node values ``func(*coords)``."""
        values = np.broadcast_to(np.asarray(func(*self.coords), dtype=float), self.shape)
        return ScalarField(self, values)

    def constant(self, c: float) -> "ScalarField":
        return ScalarField(self, np.full(self.shape, float(c)))

    def zero_vector(self) -> "VectorField":
        return VectorField(self, tuple(np.zeros(self.shape) for _ in range(self.dim)))


def _frozen(values, shape) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.shape != shape:
        arr = np.broadcast_to(arr, shape).copy()
    if not np.all(np.isfinite(arr)):
        raise ValueError("field values must be finite")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ScalarField:
    grid: PeriodicGrid
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values, self.grid.shape))

    def _other(self, other):
        if isinstance(other, ScalarField):
            self.grid.same(other.grid)
            return other.values
        return other

    def __add__(self, other):
        return ScalarField(self.grid, self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return ScalarField(self.grid, self.values - self._other(other))

    def __rsub__(self, other):
        return ScalarField(self.grid, self._other(other) - self.values)

    def __mul__(self, other):
        if isinstance(other, VectorField):
            return other * self
        return ScalarField(self.grid, self.values * self._other(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return ScalarField(self.grid, self.values / self._other(other))

    def __neg__(self):
        return ScalarField(self.grid, -self.values)

    def map(self, func: Callable[[np.ndarray], np.ndarray]) -> "ScalarField":
        return ScalarField(self.grid, func(self.values))

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values)))


@dataclass(frozen=True, eq=False)
class VectorField:
    """Vector field stored by its coordinate components, one array per axis."""

    grid: PeriodicGrid
    components: tuple[np.ndarray, ...]

    def __post_init__(self):
        comps = tuple(self.components)
        if len(comps) != self.grid.dim:
            raise ValueError(f"expected {self.grid.dim} components, got {len(comps)}")
        object.__setattr__(
            self, "components", tuple(_frozen(c, self.grid.shape) for c in comps)
        )

    def _zip(self, other, op):
        self.grid.same(other.grid)
        return VectorField(self.grid, tuple(op(a, b) for a, b in zip(self.components, other.components)))

    def __add__(self, other):
        return self._zip(other, np.add)

    def __sub__(self, other):
        return self._zip(other, np.subtract)

    def __neg__(self):
        return VectorField(self.grid, tuple(-c for c in self.components))

    def __mul__(self, other):
        if isinstance(other, ScalarField):
            self.grid.same(other.grid)
            other = other.values
        return VectorField(self.grid, tuple(c * other for c in self.components))

    __rmul__ = __mul__

    def max_abs(self) -> float:
        return max(float(np.max(np.abs(c))) for c in self.components)


def gradient(f: ScalarField) -> VectorField:
    """Metric gradient; in the conformal case ``exp(-2 lam) f'``."""
    grid = f.grid
    comps = tuple(grid.diff(f.values, axis) for axis in range(grid.dim))
    if not grid.is_flat:
        comps = tuple(c / grid.metric_factor for c in comps)
    return VectorField(grid, comps)


def divergence(X: VectorField) -> ScalarField:
    """Divergence with respect to dvol."""
    grid = X.grid
    vol = grid.volume_element
    if grid.is_flat:
        div = sum(grid.diff(c, axis) for axis, c in enumerate(X.components))
    else:
        div = grid.diff(vol * X.components[0], 0) / vol
    return ScalarField(grid, div)


def laplacian(f: ScalarField) -> ScalarField:
    return divergence(gradient(f))


def integrate(f: ScalarField) -> float:
    return float(np.sum(f.values * f.grid.weights))


def inner(X: VectorField, Y: VectorField) -> ScalarField:
    """Pointwise metric pairing g(X, Y)."""
    X.grid.same(Y.grid)
    euclid = sum(a * b for a, b in zip(X.components, Y.components))
    return ScalarField(X.grid, X.grid.metric_factor * euclid)


def directional(X: VectorField, f: np.ndarray) -> np.ndarray:
    """X(f) for node values ``f``: sum_j X^j d_j f."""
    grid = X.grid
    return sum(c * grid.diff(f, axis) for axis, c in enumerate(X.components))


def lie_bracket(X: VectorField, Y: VectorField) -> VectorField:
    """[X, Y]^i = X(Y^i) - Y(X^i)."""
    X.grid.same(Y.grid)
    comps = tuple(
        directional(X, Yi) - directional(Y, Xi) for Xi, Yi in zip(X.components, Y.components)
    )
    return VectorField(X.grid, comps)


def interpolate(f: ScalarField, x) -> np.ndarray:
    """Trigonometric interpolant of a 1D field evaluated at arbitrary points."""
    grid = f.grid
    if grid.dim != 1:
        raise NotImplementedError("interpolation is implemented for 1D grids")
    n, L = grid.points[0], grid.lengths[0]
    c = np.fft.rfft(f.values) / n
    k = np.arange(c.size) * (TWO_PI / L)
    x = np.asarray(x, dtype=float)
    w = np.full(c.size - 1, 2.0)
    w[0] = 1.0
    body = (np.exp(1j * np.multiply.outer(x, k[:-1])) * (w * c[:-1])).real.sum(axis=-1)
    # the Nyquist term of a real signal is a pure cosine
    return body + c[-1].real * np.cos(k[-1] * x)


def spectral_filter(values: np.ndarray, grid: PeriodicGrid, fraction: float = 2.0 / 3.0) -> np.ndarray:
    """Zero every Fourier mode with |k_i| above ``fraction`` of the axis Nyquist number."""
    coeffs = grid.fft(values)
    mask = np.ones(coeffs.shape, dtype=bool)
    for k, n, L in zip(grid.full_wavenumbers, grid.points, grid.lengths):
        cutoff = fraction * (n / 2) * (TWO_PI / L)
        mask &= np.abs(k) <= cutoff + 1e-12
    return grid.ifft(np.where(mask, coeffs, 0.0))


def random_field(
    grid: PeriodicGrid, rng: np.random.Generator, kmax: int = 4, amplitude: float = 1.0
) -> ScalarField:
    """Random real trigonometric polynomial with integer modes |m_i| <= kmax.

    The result has zero coordinate mean and maximum absolute value ``amplitude``.
    """
    values = np.zeros(grid.shape)
    ranges = [range(-kmax, kmax + 1)] * grid.dim
    for m in np.ndindex(*[len(r) for r in ranges]):
        mode = [r[i] for r, i in zip(ranges, m)]
        if not any(mode):
            continue
        phase = sum(TWO_PI * mi * x / L for mi, x, L in zip(mode, grid.coords, grid.lengths))
        a, b = rng.normal(size=2) / (1.0 + sum(mi * mi for mi in mode))
        values = values + a * np.cos(phase) + b * np.sin(phase)
    values *= amplitude / np.max(np.abs(values))
    return ScalarField(grid, values)
