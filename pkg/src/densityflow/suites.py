"""Verification suites behind the command-line interface.

Every check compares a measured quantity with a fixed tolerance. The
measurement functions are also imported by the test suite, so each
command-line check and its test share one definition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import sympy as sp

from . import geometry as geo
from . import schrodinger as sch
from . import statistical as stat
from .config import RunConfig, build_problem, simulation_config
from .density import (
    Density,
    PhasePotential,
    p_operator,
    quantum_potential,
    quantum_potential_log_form,
    random_density,
    solve_phase,
    uniform_density,
)
from .dynamics import SimulationConfig, TrajectoryState, evolve, madelung_rhs
from .errors import DensityFloor, StepRejected
from .grid import PeriodicGrid, ScalarField, VectorField, gradient, integrate, laplacian, random_field

GENERATOR = "numpy.random.PCG64"


@dataclass
class Check:
    name: str
    measured: float
    tolerance: float | list[float]
    passed: bool

    def to_json(self) -> dict:
        return {"name": self.name, "measured": self.measured, "tolerance": self.tolerance, "passed": self.passed}

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.name}: measured {self.measured:.3e}, tolerance {self.tolerance}"


def below(name: str, measured: float, tol: float) -> Check:
    measured = float(measured)
    return Check(name, measured, tol, bool(math.isfinite(measured) and measured < tol))


def above(name: str, measured: float, bound: float) -> Check:
    measured = float(measured)
    return Check(name, measured, bound, bool(math.isfinite(measured) and measured > bound))


def within(name: str, measured: float, lo: float, hi: float) -> Check:
    measured = float(measured)
    return Check(name, measured, [lo, hi], bool(lo <= measured <= hi))


@dataclass
class SuiteResult:
    checks: list[Check] = field(default_factory=list)
    series: dict[str, tuple[list[float], list[float]]] = field(default_factory=dict)

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)


# --- random data --------------------------------------------------------------


def random_point(grid: PeriodicGrid, rng: np.random.Generator) -> geo.TangentPoint:
    return geo.TangentPoint.from_potential(random_density(grid, rng), random_field(grid, rng))


def random_double(p: geo.TangentPoint, rng: np.random.Generator, amplitude: float = 1.0) -> geo.DoubleTangent:
    grid = p.grid
    return geo.DoubleTangent.from_potentials(
        p, random_field(grid, rng, amplitude=amplitude), random_field(grid, rng, amplitude=amplitude)
    )


def random_observable(grid: PeriodicGrid, rng: np.random.Generator) -> geo.Observable:
    B = VectorField(grid, tuple(random_field(grid, rng).values for _ in range(grid.dim)))
    return geo.Observable(random_field(grid, rng), B, rng.normal())


def _lifted(F: geo.Observable):
    return lambda rho, gphi: geo.observable_lift(F, geo.TangentPoint(rho, gphi, check=False))


# --- elliptic solver ----------------------------------------------------------


def roundtrip_errors(grid: PeriodicGrid, rng: np.random.Generator, pairs: int) -> list[float]:
    """``max |solve_phase(p_operator(rho, phi)) - phi|`` for random band-limited pairs."""
    errors = []
    for _ in range(pairs):
        rho = random_density(grid, rng)
        phi = random_field(grid, rng)
        phi = phi - integrate(phi) / grid.volume
        back = solve_phase(rho, p_operator(rho, phi))
        errors.append(float(np.max(np.abs(back.values - phi.values))))
    return errors


# --- geometry -----------------------------------------------------------------

_x = sp.Symbol("x", real=True)


def _uniform_projection(expr) -> sp.Expr:
    """Gradient part of a vector field on the 2 pi circle at uniform density."""
    mean = sp.integrate(expr, (_x, 0, 2 * sp.pi)) / (2 * sp.pi)
    return sp.simplify(expr - mean)


def bracket_oracle(p_expr, q_expr) -> sp.Expr:
    """``P([grad p, grad q])`` at uniform density, symbolically."""
    gp, gq = sp.diff(p_expr, _x), sp.diff(q_expr, _x)
    return _uniform_projection(gp * sp.diff(gq, _x) - gq * sp.diff(gp, _x))


def _sample_expr(grid: PeriodicGrid, expr) -> np.ndarray:
    return np.broadcast_to(np.asarray(sp.lambdify(_x, expr, "numpy")(grid.coords[0]), dtype=float), grid.shape)


def _potential(grid: PeriodicGrid, expr) -> ScalarField:
    return ScalarField(grid, _sample_expr(grid, expr))


TORSION_PAIRS = [(sp.cos(_x), sp.sin(_x)), (sp.cos(_x), sp.cos(2 * _x)), (sp.sin(_x), sp.cos(3 * _x))]


def torsion_literal_witness_error(grid: PeriodicGrid) -> float:
    """Distance from ``torsion(uniform, grad cos, grad sin)`` to ``grad(-sin(2x)/2)``."""
    rho = uniform_density(grid)
    T = geo.torsion(rho, gradient(_potential(grid, sp.cos(_x))), gradient(_potential(grid, sp.sin(_x))))
    expected = _sample_expr(grid, sp.diff(-sp.sin(2 * _x) / 2, _x))
    return float(np.max(np.abs(T.components[0] - expected)))


def torsion_symbolic_error(grid: PeriodicGrid) -> float:
    rho = uniform_density(grid)
    worst = 0.0
    for p_expr, q_expr in TORSION_PAIRS:
        T = geo.torsion(rho, gradient(_potential(grid, p_expr)), gradient(_potential(grid, q_expr)))
        expected = _sample_expr(grid, bracket_oracle(p_expr, q_expr))
        worst = max(worst, float(np.max(np.abs(T.components[0] - expected))))
    return worst


def torsion_antisymmetry(grid: PeriodicGrid, rng: np.random.Generator, trials: int) -> float:
    worst = 0.0
    for _ in range(trials):
        rho = random_density(grid, rng)
        gp, gq = gradient(random_field(grid, rng)), gradient(random_field(grid, rng))
        worst = max(worst, (geo.torsion(rho, gp, gq) + geo.torsion(rho, gq, gp)).max_abs())
    return worst


# horizontal potentials of the two arguments; vertical parts vanish
NIJENHUIS_WITNESS = (sp.cos(_x), sp.cos(2 * _x))


def nijenhuis_witness(grid: PeriodicGrid) -> tuple[float, float]:
    """Norm of ``N(A, B)`` for the recorded witness and its distance to the symbolic value."""
    psi1, alpha1 = NIJENHUIS_WITNESS
    p = geo.TangentPoint(uniform_density(grid), grid.zero_vector(), check=False)
    A = geo.DoubleTangent(p, gradient(_potential(grid, psi1)), grid.zero_vector(), check=False)
    B = geo.DoubleTangent(p, gradient(_potential(grid, alpha1)), grid.zero_vector(), check=False)
    N = geo.nijenhuis(A, B)
    expected = _sample_expr(grid, bracket_oracle(alpha1, psi1))
    error = max(float(np.max(np.abs(N.horizontal.components[0] - expected))), N.vertical.max_abs())
    return N.max_abs(), error


def omega_compatibility(grid: PeriodicGrid, rng: np.random.Generator, trials: int) -> tuple[float, float]:
    """Largest ``|g(JA, B) - Omega(A, B)|`` and ``|Omega(A, B) + Omega(B, A)|``."""
    compat = antisym = 0.0
    for _ in range(trials):
        p = random_point(grid, rng)
        A, B = random_double(p, rng), random_double(p, rng)
        omega = geo.omega_L(A, B)
        compat = max(compat, abs(geo.almost_hermitian(A, B).omega - omega))
        antisym = max(antisym, abs(omega + geo.omega_L(B, A)))
    return compat, antisym


def curvature_errors(grid: PeriodicGrid, rng: np.random.Generator, trials: int) -> list[float]:
    """Relative size of ``R(X, Y) Z`` for the nonlinear field ``Z(rho) = grad log rho``."""
    Z = lambda r: gradient(r.field.map(np.log))
    errors = []
    for _ in range(trials):
        rho = random_density(grid, rng)
        gx = gradient(random_field(grid, rng, amplitude=0.5))
        gy = gradient(random_field(grid, rng, amplitude=0.5))
        R, scale = geo.curvature_probe(Z, rho, gx, gy)
        errors.append(R.max_abs() / scale)
    return errors


def closedness_errors(grid: PeriodicGrid, rng: np.random.Generator, trials: int, step: float) -> list[float]:
    """``|X(Theta(Y)) - Y(Theta(X)) - Theta([X,Y]) + Omega(X, Y)|`` for random constant fields."""
    errors = []
    for _ in range(trials):
        p = random_point(grid, rng)
        A, B = random_double(p, rng, 0.5), random_double(p, rng, 0.5)
        errors.append(abs(geo.theta_exterior_derivative(A, B, step) + geo.omega_L(A, B)))
    return errors


def sqrt_identity_errors(grid: PeriodicGrid, rng: np.random.Generator, trials: int, hbar: float = 1.0) -> list[float]:
    errors = []
    for _ in range(trials):
        rho = random_density(grid, rng)
        a, b = quantum_potential(rho, hbar), quantum_potential_log_form(rho, hbar)
        errors.append((a - b).max_abs() / a.max_abs())
    return errors


def madelung_geometry_errors(grid: PeriodicGrid, rng: np.random.Generator, trials: int, hbar: float) -> list[float]:
    """Madelung right-hand side against the symplectic gradient of the Hamiltonian."""
    errors = []
    for _ in range(trials):
        rho = random_density(grid, rng)
        f = random_field(grid, rng)
        phi = PhasePotential(f - integrate(f) / grid.volume)
        V = random_field(grid, rng)
        cfg = SimulationConfig(grid, hbar, 1e-3, 1.0, V)
        dphi, drho, _ = madelung_rhs(TrajectoryState(0.0, rho, phi), cfg)
        X = geo.symplectic_gradient_H(geo.TangentPoint.from_potential(rho, phi), V, hbar)
        vertical = (gradient(dphi) - X.vertical).max_abs() / max(X.vertical.max_abs(), 1e-300)
        horizontal = geo.density_velocity(rho, X.horizontal) - drho.field
        errors.append(max(vertical, horizontal.max_abs() / max(drho.field.max_abs(), 1e-300)))
    return errors


LAPLACIAN_BENCHMARK = 1 / (sp.Rational(3, 2) + sp.cos(_x))


def laplacian_errors(sizes) -> list[float]:
    """Sup error of the spectral Laplacian of an analytic, non-band-limited function."""
    exact = sp.diff(LAPLACIAN_BENCHMARK, _x, 2)
    errors = []
    for n in sizes:
        grid = PeriodicGrid.circle(n)
        approx = laplacian(_potential(grid, LAPLACIAN_BENCHMARK)).values
        errors.append(float(np.max(np.abs(approx - _sample_expr(grid, exact)))))
    return errors


def decay_rates(sizes, errors) -> list[float]:
    """``-d log(error) / dN`` between consecutive sizes; constant for geometric decay."""
    return [math.log(e0 / e1) / (n1 - n0) for n0, n1, e0, e1 in zip(sizes, sizes[1:], errors, errors[1:])]


# --- symplectic gradients -----------------------------------------------------


def bracket_identity_errors(grid: PeriodicGrid, rng: np.random.Generator, trials: int) -> list[float]:
    errors = []
    for _ in range(trials):
        p = random_point(grid, rng)
        F, G = random_observable(grid, rng), random_observable(grid, rng)
        lifted = geo.poisson_bracket_lifted(F, G, p)
        oracle = geo.lifted_canonical_bracket(F, G, p)
        errors.append(abs(lifted - oracle) / abs(oracle))
    return errors


def defining_relation_errors(grid: PeriodicGrid, rng: np.random.Generator, trials: int, step: float) -> list[float]:
    """``Omega(X_F, C)`` against the central difference of the lifted observable along C."""
    p = random_point(grid, rng)
    F = random_observable(grid, rng)
    XF = geo.symplectic_gradient_lift(F, p)
    errors = []
    for _ in range(trials):
        C = random_double(p, rng)
        derivative = geo.directional_derivative(_lifted(F), C, step)
        errors.append(abs(geo.omega_L(XF, C) - derivative) / abs(derivative))
    return errors


# --- Gaussian model -----------------------------------------------------------


def gaussian_identity_error(checks) -> float:
    worst = 0.0
    zs = np.linspace(-checks.gaussian_z_range, checks.gaussian_z_range, checks.gaussian_z_points)
    for hbar in checks.gaussian_hbars:
        for x in zs:
            for y in zs:
                z = stat.GaussianPoint(float(x), float(y))
                samples = stat.LineSamples.around(z.x, checks.gaussian_half_width, checks.gaussian_samples)
                for f in stat.KahlerFunction:
                    worst = max(worst, abs(stat.kahler_eval(f, z) - stat.expectation(f, z, hbar, samples)))
    return worst


def gaussian_refinement_change(checks) -> float:
    """Change of every expectation when the sample count doubles."""
    worst = 0.0
    for hbar in checks.gaussian_hbars:
        z = stat.GaussianPoint(checks.gaussian_z_range, -checks.gaussian_z_range)
        coarse = stat.LineSamples.around(z.x, checks.gaussian_half_width, checks.gaussian_samples)
        fine = stat.LineSamples.around(z.x, checks.gaussian_half_width, 2 * checks.gaussian_samples)
        for f in stat.KahlerFunction:
            worst = max(worst, abs(stat.expectation(f, z, hbar, coarse) - stat.expectation(f, z, hbar, fine)))
    return worst


def kahler_table_mismatches() -> int:
    """Disagreements between the bracket table and ``{f, g} = f_x g_y - f_y g_x``."""
    x, y = sp.symbols("x y", real=True)
    exprs = {
        stat.KahlerFunction.One: sp.Integer(1),
        stat.KahlerFunction.PosX: x,
        stat.KahlerFunction.PosY: y,
        stat.KahlerFunction.Harmonic: (x**2 + y**2) / 2,
    }
    bad = 0
    for f, fe in exprs.items():
        for g, ge in exprs.items():
            exact = sp.expand(sp.diff(fe, x) * sp.diff(ge, y) - sp.diff(fe, y) * sp.diff(ge, x))
            table = sum((c * exprs[tag] for tag, c in stat.kahler_bracket(f, g).items()), sp.Integer(0))
            bad += sp.simplify(exact - table) != 0
    return bad


# --- time integration ---------------------------------------------------------


def _initial_state(cfg: RunConfig):
    built_grid, rho, phi, V, drift = build_problem(cfg)
    return built_grid, TrajectoryState(0.0, rho, phi), V, drift


def state_distance(a: TrajectoryState, b: TrajectoryState) -> float:
    return max(float(np.max(np.abs(a.rho.values - b.rho.values))), float(np.max(np.abs(a.phi.values - b.phi.values))))


def l2_distance(a: ScalarField, b: ScalarField) -> float:
    d = a - b
    return math.sqrt(integrate(d * d))


def rk4_order_factor(cfg: RunConfig, points: int, dt: float, t_final: float) -> float:
    """Error ratio at ``dt`` and ``dt/2`` against a ``dt/8`` reference on the configured problem."""
    sub = cfg.model_copy(update={"grid": cfg.grid.model_copy(update={"points": points})})
    grid, s0, V, drift = _initial_state(sub)

    def final(step):
        c = SimulationConfig(grid, cfg.physics.hbar, step, t_final, V, drift, record_every=10**9)
        return evolve(s0, c)[0][-1]

    ref = final(dt / 8)
    return state_distance(final(dt), ref) / state_distance(final(dt / 2), ref)


def strang_order_factor(cfg: RunConfig, points: int, dt: float, t_final: float) -> float:
    """Error ratio at ``dt`` and ``dt/2`` against the exact propagator from a dense eigensolve."""
    sub = cfg.model_copy(
        update={
            "grid": cfg.grid.model_copy(update={"points": points}),
            "physics": cfg.physics.model_copy(update={"stationary": False}),
        }
    )
    grid, s0, V, _ = _initial_state(sub)
    hbar = cfg.physics.hbar
    psi0 = sch.to_wave(s0, hbar)
    n = grid.size
    k = 2 * np.pi * np.fft.fftfreq(n, d=grid.spacing[0])
    F = np.fft.fft(np.eye(n), axis=0) / np.sqrt(n)
    H = F.conj().T @ np.diag(0.5 * hbar**2 * k**2) @ F + np.diag(V.values)
    w, U = np.linalg.eigh(H)
    exact = sch.WaveFunction(grid, U @ (np.exp(-1j * w * t_final / hbar) * (U.conj().T @ psi0.values)))

    def err(step):
        psi = sch.split_step_evolve(psi0, V, hbar, step, round(t_final / step))
        diff = sch.WaveFunction(grid, psi.values - exact.values)
        return diff.norm()

    return err(dt) / err(dt / 2)


# --- suites -------------------------------------------------------------------


def suite_verify_geometry(cfg: RunConfig, rng: np.random.Generator) -> SuiteResult:
    grid, *_ = build_problem(cfg)
    circle = PeriodicGrid.circle(cfg.grid.points)
    c = cfg.checks
    res = SuiteResult()
    res.checks.append(below("roundtrip_max_error", max(roundtrip_errors(grid, rng, c.roundtrip_pairs)), 1e-8))
    res.checks.append(below("torsion_witness_literal", torsion_literal_witness_error(circle), 1e-8))
    res.checks.append(below("torsion_witness_symbolic", torsion_symbolic_error(circle), 1e-8))
    res.checks.append(below("torsion_antisymmetry", torsion_antisymmetry(grid, rng, c.trials), 1e-10))
    norm, err = nijenhuis_witness(circle)
    res.checks.append(above("nijenhuis_witness_norm", norm, 1e-3))
    res.checks.append(below("nijenhuis_witness_symbolic", err, 1e-8))
    compat, antisym = omega_compatibility(grid, rng, c.trials)
    res.checks.append(below("omega_compatibility", compat, 1e-12))
    res.checks.append(below("omega_antisymmetry", antisym, 1e-12))
    res.checks.append(below("curvature_relative", max(curvature_errors(grid, rng, c.trials)), 1e-6))
    res.checks.append(below("closedness", max(closedness_errors(grid, rng, c.closedness_trials, c.fd_step)), 1e-5))
    res.checks.append(below("sqrt_identity_relative", max(sqrt_identity_errors(grid, rng, c.trials)), 1e-8))
    hbar = cfg.physics.hbar
    res.checks.append(below("madelung_vs_symplectic_gradient", max(madelung_geometry_errors(grid, rng, c.trials, hbar)), 1e-10))
    sizes = list(c.laplacian_sizes)
    errors = laplacian_errors(sizes)
    rates = decay_rates(sizes, errors)
    res.checks.append(above("laplacian_min_decay_rate", min(rates), 0.0))
    res.checks.append(within("laplacian_decay_rate_ratio", rates[-1] / rates[0], 0.8, 1.25))
    res.series["laplacian_error"] = ([float(n) for n in sizes], errors)
    return res


def suite_bracket_check(cfg: RunConfig, rng: np.random.Generator) -> SuiteResult:
    grid, *_ = build_problem(cfg)
    c = cfg.checks
    res = SuiteResult()
    res.checks.append(below("bracket_identity_relative", max(bracket_identity_errors(grid, rng, c.bracket_trials)), 1e-6))
    res.checks.append(below("defining_relation_relative", max(defining_relation_errors(grid, rng, c.trials, c.fd_step)), 1e-5))
    return res


def suite_gaussian_check(cfg: RunConfig, rng: np.random.Generator) -> SuiteResult:
    c = cfg.checks
    res = SuiteResult()
    res.checks.append(below("expectation_identity", gaussian_identity_error(c), 1e-8))
    res.checks.append(below("quadrature_refinement", gaussian_refinement_change(c), 1e-10))
    res.checks.append(below("bracket_table_mismatches", kahler_table_mismatches(), 0.5))
    z = stat.GaussianPoint(1.0, 2.0)
    samples = stat.LineSamples.around(z.x, c.gaussian_half_width, c.gaussian_samples)
    modulus = np.abs(stat.gaussian_wave(z, 1.0, samples)) ** 2 - stat.gaussian_density(samples.points, z.x)
    res.checks.append(below("modulus_law", float(np.max(np.abs(modulus))), 1e-14))
    y = float(rng.uniform(-2, 2))
    check = stat.gaussian_phase_check(-y, y)
    res.checks.append(below("phase_check_residual", check.residual, 1e-10))
    res.checks.append(below("phase_check_orientation_mismatch", float(check.orientation != 1), 0.5))
    return res


def _run_evolve(cfg: RunConfig, res: SuiteResult):
    grid, s0, V, drift = _initial_state(cfg)
    sim = simulation_config(cfg, grid, V, drift)
    try:
        states, report = evolve(s0, sim)
        completed = True
    except (DensityFloor, StepRejected) as exc:
        states, report = exc.states, exc.report
        completed = False
    res.checks.append(below("integration_failures", float(not completed), 0.5))
    res.series["energy"] = (report.times, report.energy)
    res.series["mass_error"] = (report.times, report.mass_error)
    res.series["min_density"] = (report.times, report.min_density)
    return s0, states, report


def suite_evolve(cfg: RunConfig, rng: np.random.Generator) -> SuiteResult:
    res = SuiteResult()
    s0, states, report = _run_evolve(cfg, res)
    energy = np.asarray(report.energy)
    res.checks.append(below("max_mass_error", max(report.mass_error), 1e-10))
    if cfg.physics.stationary:
        res.checks.append(below("energy_variation", float(np.max(np.abs(energy - energy[0]))), 1e-9))
        res.checks.append(below("state_deviation", max(state_distance(s, s0) for s in states), 1e-9))
    else:
        res.checks.append(below("relative_energy_drift", float(report.relative_energy_drift().max()), 1e-6))
    return res


def crossval_run(cfg: RunConfig):
    """Evolve the Madelung system and the split-step wave function side by side.

    Returns ``(times, density_l2, projective, report)`` at the recorded times.
    """
    grid, s0, V, drift = _initial_state(cfg)
    hbar = cfg.physics.hbar
    sim = simulation_config(cfg, grid, V, drift)
    states, report = evolve(s0, sim)
    psi = sch.to_wave(s0, hbar)
    times, dens, proj = [], [], []
    steps_done = 0
    for s in states:
        target = int(round((s.time - s0.time) / sim.dt))
        psi = sch.split_step_evolve(psi, V, hbar, sim.dt, target - steps_done)
        steps_done = target
        times.append(s.time)
        dens.append(l2_distance(s.rho.field, sch.density_of(psi).field))
        proj.append(sch.projective_distance(sch.to_wave(s, hbar), psi))
    return times, dens, proj, report


def suite_crossval(cfg: RunConfig, rng: np.random.Generator) -> SuiteResult:
    res = SuiteResult()
    times, dens, proj, report = crossval_run(cfg)
    res.series["density_l2"] = (times, dens)
    res.series["projective_distance"] = (times, proj)
    res.series["energy"] = (report.times, report.energy)
    res.checks.append(below("density_l2_max", max(dens), 1e-4))
    res.checks.append(below("projective_distance_max", max(proj), 1e-3))
    res.checks.append(below("max_mass_error", max(report.mass_error), 1e-10))
    c = cfg.checks
    res.checks.append(within("rk4_order_factor", rk4_order_factor(cfg, c.order_points, c.order_dt, c.order_t_final), 12, 20))
    res.checks.append(within("strang_order_factor", strang_order_factor(cfg, c.order_points, c.order_dt, c.order_t_final), 3.4, 4.6))
    return res


SUITES = {
    "evolve": suite_evolve,
    "verify-geometry": suite_verify_geometry,
    "bracket-check": suite_bracket_check,
    "gaussian-check": suite_gaussian_check,
    "crossval": suite_crossval,
}
