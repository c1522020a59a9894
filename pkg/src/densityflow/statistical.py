"""Wave functions of small statistical models.

The unit-variance Gaussian family ``p(xi; mu)`` has tangent bundle identified
with the complex plane, ``z = x + i y``. Each ``z`` carries the wave function

    Psi(z)(xi) = (2 pi)^(-1/4) exp(-(xi - x)^2 / 4) exp(-i y xi / hbar)

and the four Kähler functions ``1, x, y, (x^2 + y^2)/2`` are recovered as
expectations of their quantized operators. Functions on the real line are
sampled on a truncated window around the mean; the Gaussian tails make the
truncation invisible at double precision once the window half-width is 12.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .errors import DomainTooSmall, NonZeroSum

MIN_HALF_WIDTH = 12.0
DEFAULT_SAMPLES = 2048
HERMITICITY_TOL = 1e-10
SUM_TOL = 1e-12


@dataclass(frozen=True)
class GaussianPoint:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError("GaussianPoint coordinates must be finite")

    @classmethod
    def from_complex(cls, z: complex) -> "GaussianPoint":
        z = complex(z)
        return cls(z.real, z.imag)


class KahlerFunction(enum.Enum):
    One = "1"
    PosX = "x"
    PosY = "y"
    Harmonic = "(x^2+y^2)/2"


@dataclass(frozen=True)
class LineSamples:
    """Uniform periodic sampling of ``[start, start + length)``."""

    start: float
    length: float
    n: int

    @classmethod
    def around(cls, center: float, half_width: float = MIN_HALF_WIDTH, n: int = DEFAULT_SAMPLES) -> "LineSamples":
        return cls(center - half_width, 2.0 * half_width, n)

    @property
    def spacing(self) -> float:
        return self.length / self.n

    @property
    def points(self) -> np.ndarray:
        return self.start + self.spacing * np.arange(self.n)

    @property
    def wavenumbers(self) -> np.ndarray:
        return 2 * np.pi * np.fft.fftfreq(self.n, d=self.spacing)

    def covers(self, center: float, half_width: float) -> bool:
        # the periodic window [start, start + length] identifies its endpoints
        tol = 1e-12 * max(1.0, abs(center))
        return self.start <= center - half_width + tol and self.start + self.length >= center + half_width - tol

    def derivative(self, values: np.ndarray, order: int = 1) -> np.ndarray:
        k = self.wavenumbers
        mult = (1j * k) ** order
        if order % 2 == 1 and self.n % 2 == 0:
            mult[self.n // 2] = 0.0
        return np.fft.ifft(mult * np.fft.fft(values))

    def integrate(self, values: np.ndarray) -> complex:
        return complex(np.sum(values) * self.spacing)


def gaussian_density(xi: np.ndarray, mu: float) -> np.ndarray:
    return np.exp(-0.5 * (xi - mu) ** 2) / np.sqrt(2 * np.pi)


def gaussian_wave(z: GaussianPoint, hbar: float, samples: LineSamples) -> np.ndarray:
    """Samples of ``Psi(z)`` on ``samples.points``."""
    if not samples.covers(z.x, MIN_HALF_WIDTH):
        raise DomainTooSmall(f"samples must cover [x - {MIN_HALF_WIDTH:g}, x + {MIN_HALF_WIDTH:g}] around x={z.x}")
    xi = samples.points
    return (2 * np.pi) ** -0.25 * np.exp(-0.25 * (xi - z.x) ** 2) * np.exp(-1j * z.y * xi / hbar)


def kahler_eval(f: KahlerFunction, z: GaussianPoint) -> float:
    if f is KahlerFunction.One:
        return 1.0
    if f is KahlerFunction.PosX:
        return z.x
    if f is KahlerFunction.PosY:
        return z.y
    return 0.5 * (z.x**2 + z.y**2)


# {f, g} for f before g in declaration order; the rest follows from antisymmetry
_BRACKETS = {
    (KahlerFunction.PosX, KahlerFunction.PosY): {KahlerFunction.One: 1.0},
    (KahlerFunction.PosX, KahlerFunction.Harmonic): {KahlerFunction.PosY: 1.0},
    (KahlerFunction.PosY, KahlerFunction.Harmonic): {KahlerFunction.PosX: -1.0},
}


def kahler_bracket(f: KahlerFunction, g: KahlerFunction) -> dict[KahlerFunction, float]:
    """Poisson bracket as a linear combination ``{tag: coefficient}``; empty means zero."""
    if (f, g) in _BRACKETS:
        return dict(_BRACKETS[(f, g)])
    if (g, f) in _BRACKETS:
        return {tag: -c for tag, c in _BRACKETS[(g, f)].items()}
    return {}


@dataclass(frozen=True)
class QuantOperator:
    """Linear operator acting on sampled complex functions."""

    label: str
    action: Callable[[np.ndarray, LineSamples], np.ndarray]

    def __call__(self, values: np.ndarray, samples: LineSamples) -> np.ndarray:
        return self.action(np.asarray(values, dtype=complex), samples)


def quantize(f: KahlerFunction, hbar: float) -> QuantOperator:
    if f is KahlerFunction.One:
        return QuantOperator("Id", lambda v, s: v.copy())
    if f is KahlerFunction.PosX:
        return QuantOperator("xi", lambda v, s: s.points * v)
    if f is KahlerFunction.PosY:
        return QuantOperator("i hbar d/dxi", lambda v, s: 1j * hbar * s.derivative(v))
    shift = hbar**2 / 8 + 0.5

    def harmonic(v, s):
        return -0.5 * hbar**2 * s.derivative(v, 2) + 0.5 * s.points**2 * v - shift * v

    return QuantOperator("-(hbar^2/2) d2/dxi2 + xi^2/2 - (hbar^2/8 + 1/2)", harmonic)


def expectation(
    f: KahlerFunction, z: GaussianPoint, hbar: float, samples: LineSamples | None = None
) -> float:
    """``<Psi(z), Q(f) Psi(z)>`` by periodic trapezoidal quadrature."""
    samples = LineSamples.around(z.x) if samples is None else samples
    psi = gaussian_wave(z, hbar, samples)
    value = samples.integrate(np.conj(psi) * quantize(f, hbar)(psi, samples))
    if abs(value.imag) > HERMITICITY_TOL:
        raise ArithmeticError(f"expectation has imaginary part {value.imag:.3e}; operator is not Hermitian here")
    return value.real


class PhaseCheck(NamedTuple):
    residual: float
    orientation: int
    residuals: dict[int, float]


def gaussian_phase_check(
    mu_velocity: float, y: float, mu: float = 0.0, samples: LineSamples | None = None
) -> PhaseCheck:
    """Compare ``dp/dt`` along a moving mean with ``div(p grad phi)``.

    ``orientation`` is the sign ``s`` in ``phi = s * y * xi`` that gives the
    smaller sup-norm residual; both residuals are reported.
    """
    samples = LineSamples.around(mu) if samples is None else samples
    xi = samples.points
    p = gaussian_density(xi, mu)
    dp_dt = (xi - mu) * mu_velocity * p
    residuals = {}
    for s in (1, -1):
        flux = p * (s * y)
        div = samples.derivative(flux).real
        residuals[s] = float(np.max(np.abs(dp_dt - div)))
    best = min(residuals, key=lambda s: residuals[s])
    return PhaseCheck(residuals[best], best, residuals)


@dataclass(frozen=True, eq=False)
class FiniteProbability:
    weights: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        if w.ndim != 1 or w.size == 0:
            raise ValueError("weights must be a non-empty vector")
        if not np.all(w > 0):
            raise ValueError("weights must be strictly positive")
        if abs(w.sum() - 1.0) > SUM_TOL:
            raise ValueError(f"weights must sum to 1, got {w.sum()!r}")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)


def finite_wave(p: FiniteProbability, pdot) -> np.ndarray:
    """``sqrt(p_k) exp(i u_k / 2)`` with ``pdot_k = u_k p_k``."""
    pdot = np.asarray(pdot, dtype=float)
    if pdot.shape != p.weights.shape:
        raise ValueError("pdot must match the number of outcomes")
    if abs(pdot.sum()) > 1e-10:
        raise NonZeroSum(f"tangent vector must sum to zero, got {pdot.sum():.3e}")
    u = pdot / p.weights
    return np.sqrt(p.weights) * np.exp(0.5j * u)
