"""Variational dynamics on the tangent bundle of the density manifold.

The state is a density ``rho`` and a zero-mean phase ``phi``. They evolve by

    phi_t = 1/2 |grad phi + X|^2 + V + Q(rho) + c_t
    rho_t = div(rho (grad phi + X))

where ``Q`` is the quantum potential and the constant ``c_t`` keeps ``phi``
zero-mean. The accumulated ``int c_t dt`` restores the global phase of the
corresponding wave function.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .density import (
    DENSITY_FLOOR,
    Density,
    PhasePotential,
    TangentDensity,
    quantum_potential,
    quantum_potential_log_form,
)
from .errors import ConfigError, DensityFloor, DensityFlowError, StepRejected
from .geometry import TangentPoint
from .grid import PeriodicGrid, ScalarField, VectorField, divergence, gradient, inner, integrate, spectral_filter

__all__ = [
    "SimulationConfig",
    "TrajectoryState",
    "EnergyReport",
    "lagrangian",
    "hamiltonian",
    "quantum_potential",
    "quantum_potential_log_form",
    "stationary_potential",
    "madelung_rhs",
    "evolve",
]

log = logging.getLogger(__name__)

Drift = Callable[[float], VectorField]


@dataclass(frozen=True)
class SimulationConfig:
    """Parameters of a Madelung run.

    ``drift`` maps a time to the vector field ``X_t``; it is sampled at the
    RK4 stage times. ``dealias`` applies a two-thirds spectral filter to both
    fields after every step, which keeps the explicit scheme stable when the
    top grid modes would otherwise exceed the RK4 stability bound.
    """

    grid: PeriodicGrid
    hbar: float
    dt: float
    t_final: float
    potential: ScalarField
    drift: Drift | None = None
    integrator: str = "rk4"
    record_every: int = 1
    dealias: bool = True
    floor: float = DENSITY_FLOOR

    def __post_init__(self):
        if not self.hbar >= 0 or not math.isfinite(self.hbar):
            raise ConfigError(f"hbar must be non-negative, got {self.hbar}", "hbar")
        if not self.dt > 0 or not math.isfinite(self.dt):
            raise ConfigError(f"dt must be positive, got {self.dt}", "dt")
        if not self.dt < self.t_final:
            raise ConfigError(f"dt={self.dt} must be smaller than t_final={self.t_final}", "t_final")
        if self.integrator != "rk4":
            raise ConfigError(f"unknown integrator {self.integrator!r}", "integrator")
        if int(self.record_every) != self.record_every or self.record_every < 1:
            raise ConfigError("record_every must be a positive integer", "record_every")
        self.grid.same(self.potential.grid)

    @property
    def steps(self) -> int:
        return max(1, int(math.ceil(self.t_final / self.dt - 1e-9)))

    def drift_at(self, t: float) -> VectorField | None:
        return None if self.drift is None else self.drift(t)


@dataclass(frozen=True, eq=False)
class TrajectoryState:
    time: float
    rho: Density
    phi: PhasePotential
    gauge_integral: float = 0.0

    def __post_init__(self):
        self.rho.grid.same(self.phi.grid)
        if not math.isfinite(self.gauge_integral):
            raise ValueError("gauge_integral must be finite")

    @property
    def grid(self) -> PeriodicGrid:
        return self.rho.grid

    def tangent_point(self) -> TangentPoint:
        return TangentPoint.from_potential(self.rho, self.phi)


@dataclass
class EnergyReport:
    """Diagnostics at the recorded times.

    ``mass_error`` is the largest ``|int rho - 1|`` measured before
    renormalization over the steps since the previous record.
    """

    times: list[float] = field(default_factory=list)
    energy: list[float] = field(default_factory=list)
    mass_error: list[float] = field(default_factory=list)
    min_density: list[float] = field(default_factory=list)

    def append(self, t: float, energy: float, mass_error: float, min_density: float) -> None:
        self.times.append(float(t))
        self.energy.append(float(energy))
        self.mass_error.append(float(mass_error))
        self.min_density.append(float(min_density))

    def relative_energy_drift(self) -> np.ndarray:
        e = np.asarray(self.energy)
        return np.abs(e - e[0]) / abs(e[0])


def _fisher_term(rho: Density) -> float:
    """``int |grad sqrt(rho)|^2 dvol``."""
    g = gradient(rho.field.map(np.sqrt))
    return integrate(inner(g, g))


def lagrangian(p: TangentPoint, X: VectorField | None, V: ScalarField, hbar: float) -> float:
    rho = p.rho
    density = inner(p.grad_phi, p.grad_phi) * 0.5 - V
    if X is not None:
        density = density - inner(X, X)
    return integrate(density * rho.field) - 0.5 * hbar**2 * _fisher_term(rho)


def hamiltonian(p: TangentPoint, V: ScalarField, hbar: float) -> float:
    rho = p.rho
    density = inner(p.grad_phi, p.grad_phi) * 0.5 + V
    return integrate(density * rho.field) + 0.5 * hbar**2 * _fisher_term(rho)


def stationary_potential(rho: Density, hbar: float, const: float = 0.0) -> ScalarField:
    """Potential for which ``(rho, phi = 0)`` is a fixed point of the flow."""
    return -quantum_potential(rho, hbar) + const


def _rhs(grid: PeriodicGrid, phi: np.ndarray, rho: np.ndarray, V: ScalarField, hbar: float, X, floor: float):
    lowest = float(rho.min())
    if lowest < floor:
        raise DensityFloor(f"density minimum {lowest:.3e} is below the floor {floor:.1e}")
    rho_f = ScalarField(grid, rho)
    u = gradient(ScalarField(grid, phi))
    if X is not None:
        u = u + X
    root = rho_f.map(np.sqrt)
    q = divergence(gradient(root)) / root * (-0.5 * hbar**2)
    full = inner(u, u) * 0.5 + V + q
    c_t = -integrate(full) / grid.volume
    dphi = full.values + c_t
    drho = divergence(u * rho_f).values
    return dphi, drho, c_t


def madelung_rhs(
    s: TrajectoryState, cfg: SimulationConfig, t: float | None = None
) -> tuple[ScalarField, TangentDensity, float]:
    """Right-hand side ``(dphi, drho, c_t)``; ``X`` is sampled at ``t`` (default ``s.time``)."""
    grid = s.grid
    grid.same(cfg.grid)
    X = cfg.drift_at(s.time if t is None else t)
    dphi, drho, c_t = _rhs(grid, s.phi.values, s.rho.values, cfg.potential, cfg.hbar, X, cfg.floor)
    u = gradient(s.phi.field) if X is None else gradient(s.phi.field) + X
    flux = integrate(inner(u, u).map(np.sqrt) * s.rho.field)
    return ScalarField(grid, dphi), TangentDensity.with_scale(ScalarField(grid, drho), flux), c_t


def _energy(state: TrajectoryState, cfg: SimulationConfig) -> float:
    return hamiltonian(state.tangent_point(), cfg.potential, cfg.hbar)


def evolve(initial: TrajectoryState, cfg: SimulationConfig) -> tuple[list[TrajectoryState], EnergyReport]:
    """Classical RK4 integration of the Madelung system.

    The density is renormalized after every step. On a floor violation or a
    non-finite field the partial trajectory is attached to the raised error.
    """
    grid = initial.grid
    grid.same(cfg.grid)
    V, hbar, floor = cfg.potential, cfg.hbar, cfg.floor
    states = [initial]
    report = EnergyReport()
    report.append(initial.time, _energy(initial, cfg), 0.0, float(initial.rho.values.min()))

    phi = np.array(initial.phi.values)
    rho = np.array(initial.rho.values)
    t = initial.time
    gauge = initial.gauge_integral
    t_end = initial.time + cfg.t_final
    worst_mass = 0.0

    def stage(ph, rh, tt):
        return _rhs(grid, ph, rh, V, hbar, cfg.drift_at(tt), floor)

    for step in range(1, cfg.steps + 1):
        h = min(cfg.dt, t_end - t)
        try:
            k1p, k1r, c1 = stage(phi, rho, t)
            k2p, k2r, c2 = stage(phi + 0.5 * h * k1p, rho + 0.5 * h * k1r, t + 0.5 * h)
            k3p, k3r, c3 = stage(phi + 0.5 * h * k2p, rho + 0.5 * h * k2r, t + 0.5 * h)
            k4p, k4r, c4 = stage(phi + h * k3p, rho + h * k3r, t + h)
        except DensityFloor as exc:
            raise DensityFloor(f"step {step} at t={t:.6g}: {exc}", states, report) from exc
        except ValueError as exc:
            if isinstance(exc, DensityFlowError):
                raise
            raise StepRejected(f"step {step} at t={t:.6g}: {exc}", states, report) from exc
        phi = phi + h / 6.0 * (k1p + 2 * k2p + 2 * k3p + k4p)
        rho = rho + h / 6.0 * (k1r + 2 * k2r + 2 * k3r + k4r)
        gauge += h / 6.0 * (c1 + 2 * c2 + 2 * c3 + c4)
        t = min(initial.time + step * cfg.dt, t_end)
        if not (np.all(np.isfinite(phi)) and np.all(np.isfinite(rho)) and math.isfinite(gauge)):
            raise StepRejected(f"non-finite state after step {step} at t={t:.6g}", states, report)
        if cfg.dealias:
            phi = spectral_filter(phi, grid)
            rho = spectral_filter(rho, grid)
        mass = float(np.sum(rho * grid.weights))
        worst_mass = max(worst_mass, abs(mass - 1.0))
        rho = rho / mass
        phi = phi - float(np.sum(phi * grid.weights)) / grid.volume
        lowest = float(rho.min())
        if lowest < floor:
            raise DensityFloor(
                f"density minimum {lowest:.3e} below the floor after step {step} at t={t:.6g}", states, report
            )
        if step % cfg.record_every == 0 or step == cfg.steps:
            state = TrajectoryState(
                t, Density(ScalarField(grid, rho), floor), PhasePotential(ScalarField(grid, phi)), gauge
            )
            states.append(state)
            report.append(t, _energy(state, cfg), worst_mass, lowest)
            worst_mass = 0.0
    log.debug("evolve: %d steps to t=%.6g", cfg.steps, t)
    return states, report
