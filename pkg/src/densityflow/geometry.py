"""Geometry of the tangent bundle of the density manifold.

Points of the tangent bundle are pairs ``(rho, grad phi)``. A tangent vector
to the bundle at such a point is a pair of gradient fields
``(horizontal, vertical)``; the horizontal part moves the density through
``d rho/dt = div(rho * horizontal)`` and the vertical part moves ``grad phi``
linearly. In this global trivialization the connector simply returns the
vertical part.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .density import (
    Density,
    helmholtz_project,
    quantum_potential,
    solve_phase,
    uniform_density,
    zero_mean_project,
)
from .errors import BaseMismatch, UnsupportedMetric
from .grid import (
    PeriodicGrid,
    ScalarField,
    VectorField,
    divergence,
    gradient,
    inner,
    integrate,
    lie_bracket,
)

GRADIENT_TOL = 1e-8


def is_gradient(X: VectorField, tol: float = GRADIENT_TOL) -> bool:
    """True when X coincides with its gradient part for the uniform density."""
    scale = X.max_abs()
    if scale == 0.0:
        return True
    rho = uniform_density(X.grid)
    residual = (helmholtz_project(rho, X * rho.field) - X).max_abs()
    return residual <= tol * scale


def _require_gradient(X: VectorField, what: str) -> None:
    if not is_gradient(X):
        raise ValueError(f"{what} is not a gradient field")


@dataclass(frozen=True, eq=False)
class TangentPoint:
    """A point ``(rho, grad phi)`` of the tangent bundle."""

    rho: Density
    grad_phi: VectorField
    check: bool = True

    def __post_init__(self):
        self.rho.grid.same(self.grad_phi.grid)
        if self.check:
            _require_gradient(self.grad_phi, "grad_phi")

    @classmethod
    def from_potential(cls, rho: Density, phi) -> "TangentPoint":
        phi = getattr(phi, "field", phi)
        return cls(rho, gradient(phi), check=False)

    @property
    def grid(self) -> PeriodicGrid:
        return self.rho.grid


@dataclass(frozen=True, eq=False)
class DoubleTangent:
    """Tangent vector ``(horizontal, vertical)`` to the bundle at ``base``."""

    base: TangentPoint
    horizontal: VectorField
    vertical: VectorField
    check: bool = True

    def __post_init__(self):
        self.base.grid.same(self.horizontal.grid)
        self.base.grid.same(self.vertical.grid)
        if self.check:
            _require_gradient(self.horizontal, "horizontal component")
            _require_gradient(self.vertical, "vertical component")

    @classmethod
    def from_potentials(cls, base: TangentPoint, psi1, psi2) -> "DoubleTangent":
        psi1 = getattr(psi1, "field", psi1)
        psi2 = getattr(psi2, "field", psi2)
        return cls(base, gradient(psi1), gradient(psi2), check=False)

    def __add__(self, other: "DoubleTangent") -> "DoubleTangent":
        _same_base(self, other)
        return DoubleTangent(self.base, self.horizontal + other.horizontal, self.vertical + other.vertical, check=False)

    def __mul__(self, c: float) -> "DoubleTangent":
        return DoubleTangent(self.base, self.horizontal * c, self.vertical * c, check=False)

    __rmul__ = __mul__

    def __neg__(self) -> "DoubleTangent":
        return self * -1.0

    def max_abs(self) -> float:
        return max(self.horizontal.max_abs(), self.vertical.max_abs())


def _same_base(A: DoubleTangent, B: DoubleTangent) -> None:
    a, b = A.base, B.base
    if a is b:
        return
    if a.grid != b.grid:
        raise BaseMismatch("double tangents live over different grids")
    same = np.array_equal(a.rho.values, b.rho.values) and all(
        np.array_equal(x, y) for x, y in zip(a.grad_phi.components, b.grad_phi.components)
    )
    if not same:
        raise BaseMismatch("double tangents are attached to different base points")


def _rho_of(p) -> Density:
    return p.rho if isinstance(p, TangentPoint) else p


def metric_gD(p, gp1: VectorField, gp2: VectorField) -> float:
    """``int g(gp1, gp2) rho dvol``; ``p`` is a TangentPoint or a Density."""
    rho = _rho_of(p)
    return integrate(inner(gp1, gp2) * rho.field)


def theta_L(A: DoubleTangent) -> float:
    return metric_gD(A.base, A.base.grad_phi, A.horizontal)


def omega_L(A: DoubleTangent, B: DoubleTangent) -> float:
    _same_base(A, B)
    rho = A.base.rho
    return metric_gD(rho, A.horizontal, B.vertical) - metric_gD(rho, B.horizontal, A.vertical)


def metric_TD(A: DoubleTangent, B: DoubleTangent) -> float:
    """Dombrowski metric: sum of the horizontal and vertical pairings."""
    _same_base(A, B)
    rho = A.base.rho
    return metric_gD(rho, A.horizontal, B.horizontal) + metric_gD(rho, A.vertical, B.vertical)


def complex_structure(A: DoubleTangent) -> DoubleTangent:
    """``J(h, v) = (-v, h)``."""
    return DoubleTangent(A.base, -A.vertical, A.horizontal, check=False)


class HermitianValues(NamedTuple):
    g: float
    omega: float
    JA: DoubleTangent


def almost_hermitian(A: DoubleTangent, B: DoubleTangent) -> HermitianValues:
    """Metric value, fundamental 2-form value ``g(JA, B)`` and ``JA``."""
    JA = complex_structure(A)
    return HermitianValues(metric_TD(A, B), metric_TD(JA, B), JA)


class ConnectorMap:
    """Connector of the flat trivialization: ``(rho, phi, h, v) -> (rho, v)``."""

    def __call__(self, A: DoubleTangent) -> TangentPoint:
        return TangentPoint(A.base.rho, A.vertical, check=False)

    @staticmethod
    def vertical_lift(p: TangentPoint, v: VectorField) -> DoubleTangent:
        return DoubleTangent(p, p.grid.zero_vector(), v, check=False)


connector = ConnectorMap()


@dataclass(frozen=True, eq=False)
class Observable:
    """``F(x, u) = a(x) + g(B(x), u) + (c/2) g(u, u)`` on the tangent bundle of M."""

    position_part: ScalarField
    linear_part: VectorField
    kinetic_coeff: float = 0.0

    def __post_init__(self):
        self.position_part.grid.same(self.linear_part.grid)
        object.__setattr__(self, "kinetic_coeff", float(self.kinetic_coeff))

    @classmethod
    def position(cls, a: ScalarField) -> "Observable":
        return cls(a, a.grid.zero_vector(), 0.0)

    @classmethod
    def momentum(cls, B: VectorField) -> "Observable":
        return cls(B.grid.constant(0.0), B, 0.0)

    @classmethod
    def kinetic(cls, grid: PeriodicGrid, c: float = 1.0) -> "Observable":
        return cls(grid.constant(0.0), grid.zero_vector(), c)

    @property
    def grid(self) -> PeriodicGrid:
        return self.position_part.grid

    def __add__(self, other: "Observable") -> "Observable":
        return Observable(
            self.position_part + other.position_part,
            self.linear_part + other.linear_part,
            self.kinetic_coeff + other.kinetic_coeff,
        )

    def evaluate(self, u: VectorField) -> ScalarField:
        """The function ``x -> F(x, u(x))``."""
        value = self.position_part + inner(self.linear_part, u)
        if self.kinetic_coeff:
            value = value + inner(u, u) * (0.5 * self.kinetic_coeff)
        return value

    def fiber_derivative(self, u: VectorField) -> VectorField:
        """Vector representing ``v -> d/dt F(u + t v)`` through the metric."""
        return self.linear_part + u * self.kinetic_coeff


def _require_flat(grid: PeriodicGrid) -> None:
    if not grid.is_flat:
        raise UnsupportedMetric("only flat metrics are supported here")


def canonical_hvf(F: Observable, u: VectorField) -> tuple[VectorField, VectorField]:
    """Horizontal and vertical parts of the canonical Hamiltonian field of F at ``(x, u(x))``.

    Uses ``omega(A, B) = g(pi A, K B) - g(pi B, K A)`` with ``omega(X_F, .) = dF``,
    so the horizontal part is the fiber derivative and the vertical part is
    minus the base derivative of F with ``u`` frozen.
    """
    grid = F.grid
    _require_flat(grid)
    grid.same(u.grid)
    horizontal = F.fiber_derivative(u)
    base_derivative = []
    for axis in range(grid.dim):
        d = grid.diff(F.position_part.values, axis)
        for Bj, uj in zip(F.linear_part.components, u.components):
            d = d + grid.diff(Bj, axis) * uj
        base_derivative.append(-d)
    return horizontal, VectorField(grid, tuple(base_derivative))


def canonical_bracket(F: Observable, G: Observable, u: VectorField) -> ScalarField:
    """``{F, G}`` of the canonical structure, evaluated along ``x -> (x, u(x))``."""
    hF, vF = canonical_hvf(F, u)
    hG, vG = canonical_hvf(G, u)
    return inner(hF, vG) - inner(hG, vF)


def observable_lift(F: Observable, p: TangentPoint) -> float:
    """``int F(grad phi) rho dvol``."""
    return integrate(F.evaluate(p.grad_phi) * p.rho.field)


def symplectic_gradient_H(p: TangentPoint, V: ScalarField, hbar: float) -> DoubleTangent:
    gphi = p.grad_phi
    energy_density = inner(gphi, gphi) * 0.5 + V + quantum_potential(p.rho, hbar)
    vertical = gradient(zero_mean_project(energy_density).field)
    return DoubleTangent(p, gphi, vertical, check=False)


def symplectic_gradient_lift(F: Observable, p: TangentPoint) -> DoubleTangent:
    _require_flat(p.grid)
    rho = p.rho
    horizontal = helmholtz_project(rho, F.fiber_derivative(p.grad_phi) * rho.field)
    vertical = gradient(F.evaluate(p.grad_phi))
    return DoubleTangent(p, horizontal, vertical, check=False)


def poisson_bracket_lifted(F: Observable, G: Observable, p: TangentPoint) -> float:
    return omega_L(symplectic_gradient_lift(F, p), symplectic_gradient_lift(G, p))


def lifted_canonical_bracket(F: Observable, G: Observable, p: TangentPoint) -> float:
    """``-int {F, G}(grad phi) rho dvol`` from the canonical structure alone."""
    return -integrate(canonical_bracket(F, G, p.grad_phi) * p.rho.field)


def torsion(rho: Density, gp: VectorField, gq: VectorField) -> VectorField:
    return helmholtz_project(rho, lie_bracket(gp, gq) * rho.field)


def nijenhuis(A: DoubleTangent, B: DoubleTangent) -> DoubleTangent:
    _same_base(A, B)
    rho = A.base.rho
    psi1, psi2 = A.horizontal, A.vertical
    alpha1, alpha2 = B.horizontal, B.vertical
    horizontal = helmholtz_project(rho, (lie_bracket(alpha1, psi1) - lie_bracket(alpha2, psi2)) * rho.field)
    vertical = helmholtz_project(rho, (lie_bracket(psi2, alpha1) + lie_bracket(psi1, alpha2)) * rho.field)
    return DoubleTangent(A.base, horizontal, vertical, check=False)


# --- finite-difference probes -------------------------------------------------


def density_velocity(rho: Density, gp: VectorField) -> ScalarField:
    """``div(rho gp)``: the density tangent vector carried by the gradient ``gp``."""
    return divergence(gp * rho.field)


def density_field_bracket(rho: Density, gx: VectorField, gy: VectorField) -> ScalarField:
    """Lie bracket of the constant fields ``rho -> div(rho gx)`` and ``rho -> div(rho gy)``.

    Computed as ``D h_y [h_x] - D h_x [h_y]``; both fields are linear in rho.
    """
    hx = density_velocity(rho, gx)
    hy = density_velocity(rho, gy)
    return divergence(gy * hx) - divergence(gx * hy)


def flow_density(rho: Density, gp: VectorField, t: float, substeps: int = 4) -> Density:
    """Follow ``d rho/ds = div(rho gp)`` for time ``t`` with classical RK4."""
    grid = rho.grid
    vel = lambda r: divergence(gp * ScalarField(grid, r)).values
    r = rho.values
    ds = t / substeps
    for _ in range(substeps):
        k1 = vel(r)
        k2 = vel(r + 0.5 * ds * k1)
        k3 = vel(r + 0.5 * ds * k2)
        k4 = vel(r + ds * k3)
        r = r + ds / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    return Density(ScalarField(grid, r), rho.floor)


def directional_derivative(
    func: Callable[[Density, VectorField], float], A: DoubleTangent, step: float = 1e-4, order: int = 4
) -> float:
    """Central difference of ``func`` along ``t -> (rho_t, grad phi + t * vertical)``.

    ``order`` selects the three-point (2) or five-point (4) stencil.
    """
    base = A.base

    def at(t):
        return func(flow_density(base.rho, A.horizontal, t), base.grad_phi + A.vertical * t)

    if order == 2:
        return (at(step) - at(-step)) / (2.0 * step)
    if order == 4:
        return (at(-2 * step) - at(2 * step) + 8.0 * (at(step) - at(-step))) / (12.0 * step)
    raise ValueError("order must be 2 or 4")


def theta_exterior_derivative(A: DoubleTangent, B: DoubleTangent, step: float = 1e-4) -> float:
    """``A(theta(B)) - B(theta(A)) - theta([A, B])`` for the constant extensions of A and B."""
    _same_base(A, B)
    p = A.base

    def theta_along(C):
        return lambda rho, gphi: metric_gD(rho, gphi, C.horizontal)

    bracket_h = density_field_bracket(p.rho, A.horizontal, B.horizontal)
    bracket_horizontal = gradient(solve_phase(p.rho, zero_mean_project(bracket_h)).field)
    theta_bracket = metric_gD(p.rho, p.grad_phi, bracket_horizontal)
    return (
        directional_derivative(theta_along(B), A, step)
        - directional_derivative(theta_along(A), B, step)
        - theta_bracket
    )


def covariant_derivative(
    Z: Callable[[Density], VectorField], rho: Density, gx: VectorField, step: float = 1e-3
) -> VectorField:
    """Derivative of the field Z along the constant field carried by ``gx``."""
    h = density_velocity(rho, gx)
    return _along(Z, rho, h, step)


def _along(Z, rho: Density, h: ScalarField, step: float) -> VectorField:
    """Fourth-order central difference of Z along the density direction h."""

    def at(t):
        return Z(Density(rho.field + h * t, rho.floor))

    return (at(-2 * step) - at(2 * step) + (at(step) - at(-step)) * 8.0) * (1.0 / (12.0 * step))


def curvature_probe(
    Z: Callable[[Density], VectorField],
    rho: Density,
    gx: VectorField,
    gy: VectorField,
    step: float = 1e-3,
) -> tuple[VectorField, float]:
    """``R(X, Y) Z`` by nested central differences, with the scale of its terms."""
    nabla_y = lambda r: covariant_derivative(Z, r, gy, step)
    nabla_x = lambda r: covariant_derivative(Z, r, gx, step)
    xy = covariant_derivative(nabla_y, rho, gx, step)
    yx = covariant_derivative(nabla_x, rho, gy, step)
    bracket = _along(Z, rho, density_field_bracket(rho, gx, gy), step)
    scale = max(xy.max_abs(), yx.max_abs(), bracket.max_abs())
    return xy - yx - bracket, scale
