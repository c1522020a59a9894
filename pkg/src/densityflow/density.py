"""Points and tangent vectors of the space of smooth positive densities.

A tangent vector at ``rho`` is a zero-mean function ``h``; it is identified
with the gradient ``grad(phi)`` solving ``div(rho (grad(phi) + X)) = h``.
The weighted operator ``u -> div(f grad u)`` is inverted on zero-mean
functions by preconditioned conjugate gradients.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import DensityFloor, NonPositiveWeight, NonZeroMean, SolverDivergence
from .grid import PeriodicGrid, ScalarField, VectorField, divergence, gradient, inner, integrate, laplacian, random_field

log = logging.getLogger(__name__)

DENSITY_FLOOR = 1e-8
TOL_SOLVE = 1e-10
MEAN_TOL = 1e-10


def _abs_mass(f: ScalarField) -> float:
    return float(np.sum(np.abs(f.values) * f.grid.weights))


def _check_zero_mean(f: ScalarField, what: str, scale: float = 0.0) -> None:
    """``scale`` widens the tolerance for fields obtained by cancellation from larger ones."""
    mean = integrate(f)
    if abs(mean) > MEAN_TOL * max(_abs_mass(f), scale, np.finfo(float).tiny):
        raise NonZeroMean(f"{what} must integrate to zero, got {mean:.3e}")


@dataclass(frozen=True, eq=False)
class Density:
    """Strictly positive probability density, normalized on construction."""

    field: ScalarField
    floor: float = DENSITY_FLOOR

    def __post_init__(self):
        mass = integrate(self.field)
        if not mass > 0:
            raise DensityFloor(f"density has non-positive total mass {mass:.3e}")
        field = self.field / mass
        lowest = float(field.values.min())
        if lowest < self.floor:
            raise DensityFloor(f"density minimum {lowest:.3e} is below the floor {self.floor:.1e}")
        object.__setattr__(self, "field", field)

    @classmethod
    def from_values(cls, grid: PeriodicGrid, values, floor: float = DENSITY_FLOOR) -> "Density":
        return cls(ScalarField(grid, values), floor)

    @property
    def grid(self) -> PeriodicGrid:
        return self.field.grid

    @property
    def values(self) -> np.ndarray:
        return self.field.values


@dataclass(frozen=True, eq=False)
class TangentDensity:
    """Zero-mean function: a tangent vector to the density manifold."""

    field: ScalarField

    def __post_init__(self):
        _check_zero_mean(self.field, "tangent density")

    @classmethod
    def with_scale(cls, field: ScalarField, scale: float) -> "TangentDensity":
        """Accept ``field`` if its mean is small relative to ``scale``, the size of its inputs."""
        _check_zero_mean(field, "tangent density", scale)
        obj = object.__new__(cls)
        object.__setattr__(obj, "field", field)
        return obj

    @property
    def grid(self) -> PeriodicGrid:
        return self.field.grid

    @property
    def values(self) -> np.ndarray:
        return self.field.values


@dataclass(frozen=True, eq=False)
class PhasePotential:
    """Zero-mean representative of a potential defined up to a constant."""

    field: ScalarField

    def __post_init__(self):
        _check_zero_mean(self.field, "phase potential")

    @property
    def grid(self) -> PeriodicGrid:
        return self.field.grid

    @property
    def values(self) -> np.ndarray:
        return self.field.values

    def gradient(self) -> VectorField:
        return gradient(self.field)


def uniform_density(grid: PeriodicGrid) -> Density:
    return Density(grid.constant(1.0 / grid.volume))


def random_density(grid: PeriodicGrid, rng: np.random.Generator, kmax: int = 3, contrast: float = 0.5) -> Density:
    """Density proportional to ``1 + contrast * r`` with ``r`` a random band-limited field, ``max|r| = 1``."""
    if not 0 <= contrast < 1:
        raise ValueError("contrast must lie in [0, 1)")
    return Density(1.0 + random_field(grid, rng, kmax, contrast))


def _as_field(f) -> ScalarField:
    return f.field if isinstance(f, (Density, TangentDensity, PhasePotential)) else f


def zero_mean_project(f) -> TangentDensity:
    f = _as_field(f)
    return TangentDensity.with_scale(f - integrate(f) / f.grid.volume, _abs_mass(f))


def p_operator(f, u) -> TangentDensity:
    """``div(f grad u)`` for a positive weight ``f``."""
    f, u = _as_field(f), _as_field(u)
    if float(f.values.min()) <= 0:
        raise NonPositiveWeight(f"weight minimum is {float(f.values.min()):.3e}")
    return TangentDensity(divergence(gradient(u) * f))


def _kernel_basis(grid: PeriodicGrid) -> list[np.ndarray]:
    """Orthonormal basis (weighted inner product) of the discrete kernel of the weighted Laplacian."""
    w = grid.weights
    basis = []
    for v in [np.ones(grid.shape)] + grid.nyquist_modes:
        for q in basis:
            v = v - q * np.sum(q * v * w)
        basis.append(v / np.sqrt(np.sum(v * v * w)))
    return basis


class _WeightedLaplacianSolver:
    """CG for ``-div(rho grad u) = b`` on the complement of the kernel.

    The operator is self-adjoint for the dvol-weighted inner product. The
    preconditioner is the inverse flat coordinate Laplacian applied to the
    weighted residual, which is self-adjoint and positive for that product.
    """

    def __init__(self, rho: np.ndarray, grid: PeriodicGrid):
        self.rho = rho
        self.grid = grid
        self.w = grid.weights
        self.kernel = _kernel_basis(grid)
        k2 = sum(k * k for k in grid.wavenumbers)
        with np.errstate(divide="ignore"):
            self.inv_k2 = np.where(k2 > 0, 1.0 / np.where(k2 > 0, k2, 1.0), 0.0)

    def dot(self, a, b) -> float:
        return float(np.sum(a * b * self.w))

    def project(self, v: np.ndarray) -> np.ndarray:
        for q in self.kernel:
            v = v - q * self.dot(q, v)
        return v

    def apply(self, u: np.ndarray) -> np.ndarray:
        grid = self.grid
        comps = [grid.diff(u, axis) / grid.metric_factor * self.rho for axis in range(grid.dim)]
        if grid.is_flat:
            div = sum(grid.diff(c, axis) for axis, c in enumerate(comps))
        else:
            vol = grid.volume_element
            div = grid.diff(vol * comps[0], 0) / vol
        return -div

    def precondition(self, r: np.ndarray) -> np.ndarray:
        grid = self.grid
        return self.project(grid.ifft(self.inv_k2 * grid.fft(self.w * r)))

    def solve(self, b: np.ndarray, target: float, max_iters: int) -> tuple[np.ndarray, int, float]:
        x = np.zeros_like(b)
        r = b.copy()
        rnorm = np.sqrt(self.dot(r, r))
        if rnorm <= target:
            return x, 0, rnorm
        z = self.precondition(r)
        p = z
        rz = self.dot(r, z)
        for it in range(1, max_iters + 1):
            Ap = self.apply(p)
            alpha = rz / self.dot(p, Ap)
            x = x + alpha * p
            if it % 50 == 0:
                r = b - self.apply(x)
            else:
                r = r - alpha * Ap
            rnorm = np.sqrt(self.dot(r, r))
            if rnorm <= target:
                # confirm against the true residual before accepting
                r = b - self.apply(x)
                rnorm = np.sqrt(self.dot(r, r))
                if rnorm <= target:
                    return self.project(x), it, rnorm
            z = self.precondition(r)
            rz_new = self.dot(r, z)
            p = z + (rz_new / rz) * p
            rz = rz_new
        raise SolverDivergence(
            f"conjugate gradients did not reach residual {target:.3e} in {max_iters} iterations "
            f"(last residual {rnorm:.3e})"
        )


def _phase_rhs(rho: Density, h, X: VectorField | None) -> tuple[ScalarField, ScalarField]:
    h = _as_field(h)
    rho.grid.same(h.grid)
    _check_zero_mean(h, "tangent vector h")
    rhs = h
    if X is not None:
        rhs = rhs - divergence(X * rho.field)
    return h, rhs


def solve_phase(
    rho: Density,
    h,
    X: VectorField | None = None,
    *,
    tol: float = TOL_SOLVE,
    max_iters: int | None = None,
) -> PhasePotential:
    """Zero-mean ``phi`` with ``div(rho (grad phi + X)) = h``."""
    h, rhs = _phase_rhs(rho, h, X)
    grid = rho.grid
    solver = _WeightedLaplacianSolver(rho.values, grid)
    b = solver.project(-rhs.values)
    scale = np.sqrt(solver.dot(h.values, h.values))
    if scale == 0.0:
        scale = np.sqrt(solver.dot(b, b))
    if scale == 0.0:
        return PhasePotential(grid.constant(0.0))
    max_iters = 10 * grid.size if max_iters is None else max_iters
    phi, iters, res = solver.solve(b, tol * scale, max_iters)
    log.debug("solve_phase: %d iterations, residual %.2e", iters, res)
    return PhasePotential(ScalarField(grid, phi))


def solve_phase_dense(rho: Density, h, X: VectorField | None = None) -> PhasePotential:
    """Direct least-squares solve of the same problem; an oracle for small grids."""
    h, rhs = _phase_rhs(rho, h, X)
    grid = rho.grid
    if grid.size > 256:
        raise ValueError("dense solve is limited to grids with at most 256 nodes")
    solver = _WeightedLaplacianSolver(rho.values, grid)
    n = grid.size
    eye = np.eye(n)
    A = np.column_stack([-solver.apply(eye[:, j].reshape(grid.shape)).ravel() for j in range(n)])
    constraints = np.array([(q * grid.weights).ravel() for q in solver.kernel])
    M = np.vstack([A, constraints])
    rhs_vec = np.concatenate([rhs.values.ravel(), np.zeros(len(solver.kernel))])
    phi = np.linalg.lstsq(M, rhs_vec, rcond=None)[0]
    return PhasePotential(ScalarField(grid, phi.reshape(grid.shape)))


def helmholtz_project(rho: Density, Z: VectorField, **solver_options) -> VectorField:
    """Gradient part ``grad(phi)`` of the splitting ``Z = Zbar + rho grad(phi)`` with ``div(Zbar) = 0``."""
    phi = solve_phase(rho, zero_mean_project(divergence(Z)), **solver_options)
    return gradient(phi.field)


def quantum_potential(rho: Density, hbar: float) -> ScalarField:
    """``-(hbar^2/2) lap(sqrt(rho)) / sqrt(rho)``."""
    root = rho.field.map(np.sqrt)
    return laplacian(root) / root * (-0.5 * hbar**2)


def quantum_potential_log_form(rho: Density, hbar: float) -> ScalarField:
    """The same potential written with derivatives of ``rho`` itself."""
    g = gradient(rho.field)
    r = rho.field
    return (inner(g, g) / (r * r) * 0.25 - laplacian(r) / r * 0.5) * (0.5 * hbar**2)
