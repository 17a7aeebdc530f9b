"""1D DG solver for dispersive shallow-water waves over rigid and mobile beds.

The library couples a dispersive depth-averaged flow model with bed-load
morphodynamics.  Flow and bed can be advanced together by a
path-conservative operator or separately, and the dispersive correction is
applied through second-order operator splitting with wave-breaking and
wet/dry gating.
"""

from .config import ConfigError, ScenarioConfig, parse_config, serialize_config
from .coupled import (characteristic_speeds, coupled_interface_flux, coupled_rhs,
                      hll_flux, w_nc)
from .dg import (Basis, Discretization, DgField, Quadrature, TraceField,
                 element_mean, integrate, project, weak_derivative)
from .dispersive import (CondensedSystem, DispersiveSolution, compute_q1,
                         compute_source_s, condense, dispersive_rhs, solve_w1w2)
from .errors import SolverError, TraceSolveError
from .mesh import (BoundaryKind, Mesh1D, Reflecting, Wavemaker,
                   build_uniform_mesh, neighbors)
from .morpho import (GeneralPowerLaw, GrassLaw, SedimentLaw, exner_rhs,
                     roe_velocity, sediment_flux, upwind_bed_flux)
from .scenarios import (GaugeRecord, ScenarioCase, SolitonParams, SCENARIO_NAMES,
                        build_case, build_scenario, default_config, error_norms,
                        make_gauges, record_gauges, soliton_state)
from .simulate import RunResult, run
from .stepper import (MODELS, StepControls, Stepper, breaking_indicator,
                      breaking_indicators, limit_slopes, rk2_step, stable_dt,
                      wet_dry_fix)
from .swe import (PhysicsParams, boundary_trace, lambda_max, nswe_rhs,
                  physical_flux, solve_trace)

__version__ = "0.1.0"
