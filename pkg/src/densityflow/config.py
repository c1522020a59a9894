"""Run configuration: a YAML (or JSON) document validated by pydantic.

Field expressions are strings in the grid coordinates ``x`` (and ``y`` in 2D)
parsed by sympy, for example ``"1 + 0.3*cos(x)"``. Unknown keys are errors.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Literal

import numpy as np
import sympy as sp
import yaml
from pydantic import BaseModel, ConfigDict, Field, PositiveFloat, PositiveInt, ValidationError, model_validator

from .density import Density, PhasePotential, zero_mean_project
from .dynamics import SimulationConfig, stationary_potential
from .errors import ConfigError, DensityFloor
from .grid import PeriodicGrid, ScalarField, VectorField

COMMANDS = ("evolve", "verify-geometry", "bracket-check", "gaussian-check", "crossval")
NEEDS_DT = ("evolve", "crossval")


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class GridSection(_Section):
    points: PositiveInt
    length: PositiveFloat = 2 * math.pi
    dim: Literal[1, 2] = 1
    conformal: str | None = Field(default=None, description="expression for the conformal exponent, 1D only")


class PhysicsSection(_Section):
    hbar: float = Field(default=0.5, ge=0)
    potential: str = "cos(x)"
    stationary: bool = Field(default=False, description="if true, the potential becomes -Q(rho0) + potential")
    drift: list[str] | None = Field(default=None, description="drift components in x, y and t")


class InitialSection(_Section):
    rho: str = "1 + 0.3*cos(x)"
    phi: str = "0.2*sin(x)"


class TimeSection(_Section):
    dt: PositiveFloat | None = None
    t_final: PositiveFloat = 1.0
    record_every: PositiveInt = 1
    dealias: bool = True


class ChecksSection(_Section):
    trials: PositiveInt = 20
    roundtrip_pairs: PositiveInt = 50
    bracket_trials: PositiveInt = 30
    closedness_trials: PositiveInt = 10
    fd_step: PositiveFloat = 1e-4
    gaussian_samples: PositiveInt = 2048
    gaussian_half_width: PositiveFloat = 12.0
    gaussian_hbars: list[PositiveFloat] = [0.5, 1.0, 2.0]
    gaussian_z_points: PositiveInt = 5
    gaussian_z_range: PositiveFloat = 2.0
    order_points: PositiveInt = 64
    order_dt: PositiveFloat = 0.01
    order_t_final: PositiveFloat = 1.0
    laplacian_sizes: list[PositiveInt] = [16, 32, 64]


class RunConfig(_Section):
    grid: GridSection
    physics: PhysicsSection = PhysicsSection()
    initial: InitialSection = InitialSection()
    time: TimeSection = TimeSection()
    checks: ChecksSection = ChecksSection()

    @model_validator(mode="after")
    def _consistent(self):
        if self.grid.conformal is not None and self.grid.dim != 1:
            raise ValueError("grid.conformal is only supported for dim 1")
        if self.time.dt is not None and not self.time.dt < self.time.t_final:
            raise ValueError("time.dt must be smaller than time.t_final")
        return self

    def effective(self) -> dict:
        return self.model_dump(mode="json")


def _field_path(loc) -> str:
    return ".".join(str(part) for part in loc if part != "__root__")


def load_config(data: dict, command: str | None = None) -> RunConfig:
    """Validate a parsed document; raises ConfigError naming the offending field."""
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a mapping", None)
    try:
        cfg = RunConfig.model_validate(data)
    except ValidationError as exc:
        err = exc.errors()[0]
        path = _field_path(err["loc"])
        if not path and "time.dt" in err["msg"]:
            path = "time.dt"
        elif not path and "grid.conformal" in err["msg"]:
            path = "grid.conformal"
        raise ConfigError(f"{path or 'config'}: {err['msg']}", path or None) from None
    if command in NEEDS_DT and cfg.time.dt is None:
        raise ConfigError(f"time.dt: required for the {command} command", "time.dt")
    # expressions are checked eagerly so that errors surface at parse time
    build_problem(cfg, check_only=True)
    return cfg


def parse_config(path, command: str | None = None) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}", None) from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        raise ConfigError(f"{path}: malformed document{where}", None) from None
    return load_config(data if data is not None else {}, command)


_NAMES = {"pi": sp.pi, "E": sp.E}


def _compile(expr: str, symbols: tuple[str, ...], where: str):
    syms = sp.symbols(symbols)
    local = dict(_NAMES, **{s.name: s for s in syms})
    try:
        parsed = sp.sympify(expr, locals=local)
    except (sp.SympifyError, SyntaxError, TypeError) as exc:
        raise ConfigError(f"{where}: cannot parse expression {expr!r}", where) from exc
    extra = {s.name for s in parsed.free_symbols} - set(symbols)
    if extra:
        raise ConfigError(f"{where}: unknown symbols {sorted(extra)} in {expr!r}", where)
    return sp.lambdify(syms, parsed, "numpy")


def _sample(grid: PeriodicGrid, expr: str, where: str) -> ScalarField:
    names = ("x", "y")[: grid.dim]
    func = _compile(expr, names, where)
    with np.errstate(all="ignore"):
        values = np.broadcast_to(np.asarray(func(*grid.coords), dtype=float), grid.shape)
    if not np.all(np.isfinite(values)):
        raise ConfigError(f"{where}: expression {expr!r} is not finite on the grid", where)
    return ScalarField(grid, values)


def build_grid(cfg: RunConfig) -> PeriodicGrid:
    g = cfg.grid
    try:
        if g.dim == 2:
            return PeriodicGrid.torus(g.points, g.length)
        conformal = None
        if g.conformal is not None:
            probe = PeriodicGrid.circle(g.points, g.length)
            conformal = _sample(probe, g.conformal, "grid.conformal").values
        return PeriodicGrid.circle(g.points, g.length, conformal=conformal)
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"grid: {exc}", "grid.points") from None


def _drift(grid: PeriodicGrid, exprs: list[str] | None):
    if exprs is None:
        return None
    if len(exprs) != grid.dim:
        raise ConfigError(f"physics.drift: expected {grid.dim} components", "physics.drift")
    names = ("x", "y")[: grid.dim] + ("t",)
    funcs = [_compile(e, names, "physics.drift") for e in exprs]

    def X(t: float) -> VectorField:
        comps = [np.broadcast_to(np.asarray(f(*grid.coords, t), dtype=float), grid.shape) for f in funcs]
        return VectorField(grid, tuple(comps))

    return X


def build_problem(cfg: RunConfig, check_only: bool = False):
    """Grid, initial density and phase, and potential described by ``cfg``."""
    grid = build_grid(cfg)
    rho_f = _sample(grid, cfg.initial.rho, "initial.rho")
    try:
        rho = Density(rho_f)
    except DensityFloor as exc:
        raise ConfigError(f"initial.rho: {exc}", "initial.rho") from None
    phi = PhasePotential(zero_mean_project(_sample(grid, cfg.initial.phi, "initial.phi")).field)
    V = _sample(grid, cfg.physics.potential, "physics.potential")
    if cfg.physics.stationary:
        V = stationary_potential(rho, cfg.physics.hbar) + V
    drift = _drift(grid, cfg.physics.drift)
    if check_only:
        return None
    return grid, rho, phi, V, drift


def simulation_config(cfg: RunConfig, grid: PeriodicGrid, V: ScalarField, drift=None) -> SimulationConfig:
    t = cfg.time
    return SimulationConfig(
        grid=grid,
        hbar=cfg.physics.hbar,
        dt=t.dt,
        t_final=t.t_final,
        potential=V,
        drift=drift,
        record_every=t.record_every,
        dealias=t.dealias,
    )
