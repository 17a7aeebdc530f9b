"""Built-in benchmark scenarios: bathymetries, initial states, gauges, norms.

Five cases are registered:

  soliton_flat   solitary wave over a flat bottom with the exact reference
  shoaling_wall  solitary wave shoaling on a 1:50 slope, reflecting off a wall
  dingemans_bar  regular waves over a submerged trapezoidal bar (wave flume)
  sumer_beach    solitary waves over a 1:14 sandy beach, optional mobile bed
  lake_at_rest   still water over the trapezoidal bar (well-balance check)

Bed elevation b is measured from the datum z = -H0, so still water has depth
h = H0 - b.  The trapezoidal-bar profile keeps 0.4 m of water offshore and
0.1 m over the bar crest; the 1:14 beach puts the still-water shoreline
5.6 m shoreward of the toe.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .config import ScenarioConfig
from .dg import Basis, Discretization, DgField, Quadrature, project
from .mesh import Mesh1D, Reflecting, Wavemaker, build_uniform_mesh
from .swe import PhysicsParams

SCENARIO_NAMES = ("soliton_flat", "shoaling_wall", "dingemans_bar",
                  "sumer_beach", "lake_at_rest")


@dataclass(frozen=True)
class SolitonParams:
    """Solitary-wave parameters and the derived decay rate and celerity."""

    H0: float
    a0: float
    x0: float
    g: float = 9.81

    def __post_init__(self):
        if not (self.H0 > 0 and self.a0 > 0 and self.g > 0):
            raise ValueError("soliton requires positive H0, a0, g")

    @property
    def kappa(self) -> float:
        return math.sqrt(3.0 * self.a0) / (2.0 * self.H0 * math.sqrt(self.H0 + self.a0))

    @property
    def c0(self) -> float:
        return math.sqrt(self.g * (self.H0 + self.a0))


def soliton_state(params: SolitonParams, x, t=0.0):
    """Exact solitary-wave state over a flat bottom (dispersion parameter 1).

    h = H0 + a0 sech^2(kappa (x - x0 - c0 t)),  hu = c0 (h - H0).
    """
    x = np.asarray(x, float)
    arg = params.kappa * (x - params.x0 - params.c0 * t)
    h = params.H0 + params.a0 / np.cosh(arg) ** 2
    hu = params.c0 * (h - params.H0)
    return h, hu


def trapezoid_bar_bed(x):
    """Submerged trapezoidal bar, elevation above the z = -0.4 m datum.

    Rises from 0 on a 1:20 slope between x = 6 and 12, crest 0.3 m for
    12 <= x < 14, drops on a 1:10 slope to 0 at x = 17.
    """
    x = np.asarray(x, float)
    b = np.zeros_like(x)
    up = (x > 6.0) & (x < 12.0)
    b[up] = (x[up] - 6.0) / 20.0
    crest = (x >= 12.0) & (x < 14.0)
    b[crest] = 0.3
    down = (x >= 14.0) & (x < 17.0)
    b[down] = 0.3 - (x[down] - 14.0) / 10.0
    return b


def beach_bed(x, slope=1.0 / 14.0, toe=0.0):
    """Plane beach rising shoreward of the toe."""
    x = np.asarray(x, float)
    return np.maximum(0.0, (x - toe) * slope)


def wall_slope_bed(x, slope=1.0 / 50.0, toe=0.0):
    """Flat bottom sloping up shoreward of the toe (shoaling case)."""
    x = np.asarray(x, float)
    return np.maximum(0.0, (x - toe) * slope)


@dataclass(eq=False)
class ScenarioCase:
    """A fully initialized run: mesh, discretization, fields, configuration."""

    mesh: Mesh1D
    disc: Discretization
    q0: DgField
    b0: DgField
    config: ScenarioConfig

    @property
    def physics(self) -> PhysicsParams:
        c = self.config
        return PhysicsParams(g=c.g, H0=c.H0, alpha=c.alpha, Cf=c.Cf,
                             friction_on=c.friction_on)


def default_config(name: str) -> ScenarioConfig:
    """Reference configuration of a built-in scenario."""
    if name == "soliton_flat":
        return ScenarioConfig(
            scenario=name, model="GN", x_min=0.0, x_max=20.0, n_elements=400,
            g=9.81, H0=0.5, alpha=1.0, Cf=0.0, friction_on=False,
            dt=1e-4, end_time=4.0, limiter_M=math.inf,
            a0=0.1, x0=5.0, gauges=(), output_every=1000)
    if name == "shoaling_wall":
        return ScenarioConfig(
            scenario=name, model="GN", x_min=-20.0, x_max=20.0, n_elements=160,
            g=9.81, H0=0.7, alpha=1.0, Cf=0.0, friction_on=False,
            dt=1e-3, end_time=20.0, limiter_M=math.inf,
            a0=0.07, x0=-10.0, gauges=(17.75,), output_every=100)
    if name == "dingemans_bar":
        return ScenarioConfig(
            scenario=name, model="GN", x_min=0.0, x_max=30.0, n_elements=600,
            g=9.81, H0=0.4, alpha=1.0, Cf=0.0, friction_on=False,
            dt=5e-3, end_time=40.0, limiter_M=math.inf,
            wavemaker_amplitude=0.01, wavemaker_period=2.2,
            gauges=(10.5, 13.5, 15.7, 17.3, 19.0), output_every=1)
    if name == "sumer_beach":
        toe = 0.0
        offsets = (4.63, 4.69, 4.87, 5.11, 5.35, 5.59, 5.65, 5.85)
        return ScenarioConfig(
            scenario=name, model="GN", x_min=-10.0, x_max=10.0, n_elements=400,
            g=9.81, H0=0.4, alpha=1.0, Cf=0.012, friction_on=True,
            dt=5e-3, end_time=150.0, waves=1, limiter_M=0.0,
            bed_update_every=1, law_A=4.75e-3, law_m=3.0,
            a0=0.071, x0=-5.0,
            gauges=(toe,) + tuple(toe + d for d in offsets), output_every=10)
    if name == "lake_at_rest":
        return ScenarioConfig(
            scenario=name, model="DecoupledGN", x_min=0.0, x_max=30.0,
            n_elements=600, g=9.81, H0=0.4, alpha=1.0, Cf=0.0,
            friction_on=False, dt=5e-3, end_time=5.0, limiter_M=0.0,
            law_A=4.75e-3, law_m=3.0, gauges=(10.0, 15.0), output_every=100)
    raise KeyError(f"unknown scenario {name!r}; known: {SCENARIO_NAMES}")


def _bed_function(name: str):
    if name in ("soliton_flat",):
        return lambda x: np.zeros_like(np.asarray(x, float))
    if name == "shoaling_wall":
        return wall_slope_bed
    if name in ("dingemans_bar", "lake_at_rest"):
        return trapezoid_bar_bed
    if name == "sumer_beach":
        return beach_bed
    raise KeyError(name)


def build_case(config: ScenarioConfig, order: int = 1) -> ScenarioCase:
    """Materialize a scenario from a resolved configuration."""
    name = config.scenario
    if name not in SCENARIO_NAMES:
        raise KeyError(f"unknown scenario {name!r}; known: {SCENARIO_NAMES}")

    if name == "dingemans_bar":
        wavemaker = Wavemaker(amplitude=config.wavemaker_amplitude,
                              period=config.wavemaker_period,
                              ramp_periods=config.wavemaker_ramp_periods)
        tags = (wavemaker, Reflecting())
    else:
        tags = (Reflecting(), Reflecting())

    mesh = build_uniform_mesh(config.x_min, config.x_max, config.n_elements, tags)
    basis = Basis(order)
    disc = Discretization(mesh, basis, Quadrature.for_order(order))

    bed_fn = _bed_function(name)
    b0 = project(disc, bed_fn)

    if name in ("soliton_flat", "shoaling_wall", "sumer_beach"):
        sol = SolitonParams(H0=config.H0, a0=config.a0, x0=config.x0, g=config.g)

        def h_fn(x):
            h_flat, _ = soliton_state(sol, x)
            return h_flat - bed_fn(x)

        def hu_fn(x):
            h_flat, hu = soliton_state(sol, x)
            return hu

        q0 = project(disc, [h_fn, hu_fn])
        # enforce the positive-depth floor over an initially dry beach
        from .stepper import wet_dry_fix
        q0, _, _ = wet_dry_fix(q0, b0, config.effective_h0_min)
    else:
        q0 = project(disc, [lambda x: config.H0 - bed_fn(x),
                            lambda x: np.zeros_like(np.asarray(x, float))])

    return ScenarioCase(mesh=mesh, disc=disc, q0=q0, b0=b0, config=config)


def build_scenario(name: str, overrides: dict | None = None, order: int = 1) -> ScenarioCase:
    """Build a named scenario, optionally overriding configuration fields."""
    config = default_config(name)
    if overrides:
        unknown = set(overrides) - set(config.__dataclass_fields__)
        if unknown:
            raise KeyError(f"unknown scenario overrides: {sorted(unknown)}")
        config = replace(config, **overrides)
    return build_case(config, order)


@dataclass(eq=False)
class GaugeRecord:
    """Point time series of surface elevation, depth, velocity, and bed."""

    x: float
    times: list = field(default_factory=list)
    zeta: list = field(default_factory=list)
    h: list = field(default_factory=list)
    u: list = field(default_factory=list)
    b: list = field(default_factory=list)

    def append(self, t, zeta, h, u, b):
        if self.times and t <= self.times[-1]:
            raise ValueError("gauge times must be strictly increasing")
        self.times.append(float(t))
        self.zeta.append(float(zeta))
        self.h.append(float(h))
        self.u.append(float(u))
        self.b.append(float(b))


def make_gauges(mesh: Mesh1D, positions) -> list[GaugeRecord]:
    records = []
    for x in positions:
        if x < mesh.x_min or x > mesh.x_max:
            raise ValueError(f"gauge at x={x} lies outside the domain")
        records.append(GaugeRecord(x=float(x)))
    return records


def record_gauges(q: DgField, b: DgField, gauges: list[GaugeRecord],
                  t: float, H0: float):
    """Append point samples at the gauge locations (left-element convention)."""
    for gauge in gauges:
        qv = q.eval_at_x(gauge.x)
        bv = float(b.eval_at_x(gauge.x))
        h = float(qv[0])
        u = float(qv[1]) / h if h > 0 else 0.0
        gauge.append(t, h + bv - H0, h, u, bv)


def error_norms(field: DgField, reference, t: float = 0.0, component: int = 0):
    """Quadrature L2 and max-norm of (field - reference(x, t)) for one component."""
    disc = field.disc
    vals = field.values_at_quad()[:, component]
    ref = np.asarray(reference(disc.x_quad, t), float)
    diff = vals - ref
    l2 = math.sqrt(float(np.sum(disc.jac[:, None] * disc.qw[None, :] * diff ** 2)))
    linf = float(np.max(np.abs(diff))) if diff.size else 0.0
    return l2, linf
