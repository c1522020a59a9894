"""Reference Schrödinger solver on flat periodic grids.

Wave functions are related to Madelung states through
``psi = sqrt(rho) exp(-i (phi - gauge_integral) / hbar)``. The solver uses
Strang splitting with exact Fourier propagation of the kinetic part; it
shares no code path with the Madelung integrator.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .density import DENSITY_FLOOR, Density
from .dynamics import TrajectoryState
from .errors import UnsupportedMetric
from .grid import PeriodicGrid, ScalarField


def _require_flat(grid: PeriodicGrid) -> None:
    if not grid.is_flat:
        raise UnsupportedMetric("the reference solver supports flat grids only")


@dataclass(frozen=True, eq=False)
class WaveFunction:
    """Complex samples of a wave function on a flat grid.

    Construction does not rescale; use :meth:`normalized` for that, so that
    unitarity of the propagator stays observable through :meth:`norm`.
    """

    grid: PeriodicGrid
    values: np.ndarray

    def __post_init__(self):
        _require_flat(self.grid)
        arr = np.array(self.values, dtype=complex)
        if arr.shape != self.grid.shape:
            raise ValueError(f"expected shape {self.grid.shape}, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("wave function values must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @classmethod
    def normalized(cls, grid: PeriodicGrid, values) -> "WaveFunction":
        psi = cls(grid, values)
        return cls(grid, psi.values / psi.norm())

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.values) ** 2 * self.grid.weights)))

    def inner(self, other: "WaveFunction") -> complex:
        """``int conj(self) other dvol``."""
        self.grid.same(other.grid)
        return complex(np.sum(np.conj(self.values) * other.values * self.grid.weights))


def plane_wave(grid: PeriodicGrid, k) -> WaveFunction:
    """Normalized ``exp(i k.x)`` for an integer-compatible wave vector."""
    k = np.atleast_1d(np.asarray(k, dtype=float))
    phase = sum(ki * x for ki, x in zip(k, grid.coords))
    return WaveFunction.normalized(grid, np.exp(1j * phase))


def to_wave(s: TrajectoryState, hbar: float) -> WaveFunction:
    if not hbar > 0:
        raise ValueError("hbar must be positive to form a wave function")
    amplitude = np.sqrt(s.rho.values)
    return WaveFunction(s.grid, amplitude * np.exp(-1j * (s.phi.values - s.gauge_integral) / hbar))


def density_of(psi: WaveFunction, floor: float = DENSITY_FLOOR) -> Density:
    return Density(ScalarField(psi.grid, np.abs(psi.values) ** 2), floor)


def _k_squared(grid: PeriodicGrid) -> np.ndarray:
    ks = [np.fft.fftfreq(n, d=L / n) * 2 * np.pi for n, L in zip(grid.points, grid.lengths)]
    mesh = np.meshgrid(*ks, indexing="ij")
    return sum(k * k for k in mesh)


def split_step_evolve(psi: WaveFunction, V: ScalarField, hbar: float, dt: float, steps: int) -> WaveFunction:
    """Strang splitting for ``i hbar psi_t = -(hbar^2/2) lap psi + V psi``."""
    grid = psi.grid
    grid.same(V.grid)
    kinetic = np.exp(-0.5j * hbar * _k_squared(grid) * dt)
    half_potential = np.exp(-0.5j * V.values * dt / hbar)
    values = psi.values.copy()
    for _ in range(int(steps)):
        values = half_potential * values
        values = np.fft.ifftn(kinetic * np.fft.fftn(values))
        values = half_potential * values
    return WaveFunction(grid, values)


def projective_distance(a: WaveFunction, b: WaveFunction) -> float:
    overlap = abs(a.inner(b))
    return float(np.sqrt(max(0.0, 1.0 - overlap**2)))


def energy(psi: WaveFunction, V: ScalarField, hbar: float) -> float:
    """``<psi, (-(hbar^2/2) lap + V) psi>`` with the kinetic part evaluated spectrally."""
    grid = psi.grid
    coeffs = np.fft.fftn(psi.values)
    # Parseval on the grid: sum |psi|^2 dV = (dV / size) sum |c|^2
    cell = float(np.prod(grid.spacing))
    kinetic = 0.5 * hbar**2 * cell / grid.size * float(np.sum(_k_squared(grid) * np.abs(coeffs) ** 2))
    potential = float(np.sum(V.values * np.abs(psi.values) ** 2 * grid.weights))
    return kinetic + potential
