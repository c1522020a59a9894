"""Quantum dynamics as a symplectic flow on the manifold of probability densities."""

from .density import (
    Density,
    PhasePotential,
    TangentDensity,
    helmholtz_project,
    p_operator,
    solve_phase,
    uniform_density,
    zero_mean_project,
)
from .dynamics import EnergyReport, SimulationConfig, TrajectoryState, evolve, hamiltonian, lagrangian, madelung_rhs
from .grid import PeriodicGrid, ScalarField, VectorField, divergence, gradient, laplacian
from .schrodinger import WaveFunction, projective_distance, split_step_evolve, to_wave

__version__ = "0.1.0"

__all__ = [
    "Density",
    "EnergyReport",
    "PeriodicGrid",
    "PhasePotential",
    "ScalarField",
    "SimulationConfig",
    "TangentDensity",
    "TrajectoryState",
    "VectorField",
    "WaveFunction",
    "divergence",
    "evolve",
    "gradient",
    "hamiltonian",
    "helmholtz_project",
    "lagrangian",
    "laplacian",
    "madelung_rhs",
    "p_operator",
    "projective_distance",
    "solve_phase",
    "split_step_evolve",
    "to_wave",
    "uniform_density",
    "zero_mean_project",
]
