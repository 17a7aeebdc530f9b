"""Bed-load closures and the DG discretization of the bed-evolution equation.

The bed elevation b obeys db/dt + d(Q_b)/dx = 0 with an empirical magnitude
law |Q_b| = A(h,u) |u|^m directed with the flow.  Interface fluxes are
upwinded by the sign of the Roe-averaged velocity; the sediment flux is not
an explicit function of b, so no flux Jacobian exists and upwinding replaces
a Riemann solve.  No porosity factor is applied: the calibration constant A
absorbs it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .dg import DgField


@dataclass(frozen=True)
class GrassLaw:
    """|Q_b| = A |u|^m with constant calibration A (classically m = 3)."""

    A: float = 4.75e-3
    m: float = 3.0

    def __post_init__(self):
        if self.A < 0:
            raise ValueError("Grass coefficient A must be >= 0")
        if not 1.0 <= self.m <= 3.0:
            raise ValueError("exponent m must lie in [1, 3]")

    def flux(self, h, u):
        u = np.asarray(u, float)
        return self.A * u * np.abs(u) ** (self.m - 1.0)


@dataclass(frozen=True)
class GeneralPowerLaw:
    """|Q_b| = A(h, u) |u|^m with a user-supplied coefficient closure."""

    A: Callable[[np.ndarray, np.ndarray], np.ndarray]
    m: float = 3.0

    def __post_init__(self):
        if not 1.0 <= self.m <= 3.0:
            raise ValueError("exponent m must lie in [1, 3]")

    def flux(self, h, u):
        h = np.asarray(h, float)
        u = np.asarray(u, float)
        return self.A(h, u) * u * np.abs(u) ** (self.m - 1.0)


SedimentLaw = GrassLaw | GeneralPowerLaw


def sediment_flux(h, hu, law: SedimentLaw):
    """Signed 1D bed-load flux sign(u) A |u|^m from a hydrodynamic state."""
    h = np.asarray(h, float)
    if np.any(h <= 0):
        raise ValueError("sediment_flux requires positive depth")
    return law.flux(h, np.asarray(hu, float) / h)


def roe_velocity(h_plus, u_plus, h_minus, u_minus):
    """Depth-square-root weighted interface velocity.

    A convex combination of the side velocities with weights
    sqrt(h)/(sqrt(h+) + sqrt(h-)).
    """
    h_plus = np.asarray(h_plus, float)
    h_minus = np.asarray(h_minus, float)
    if np.any(h_plus <= 0) or np.any(h_minus <= 0):
        raise ValueError("roe_velocity requires positive depths")
    sp = np.sqrt(h_plus)
    sm = np.sqrt(h_minus)
    return (np.asarray(u_plus, float) * sp + np.asarray(u_minus, float) * sm) / (sp + sm)


def upwind_bed_flux(q_plus, q_minus, b_plus, b_minus, law: SedimentLaw, n):
    """Upwind interface sediment flux Q_b* (scalar value, not yet times n).

    Takes the interior-side flux when the Roe velocity satisfies u_hat·n >= 0,
    the exterior-side flux otherwise.  Superscript plus denotes the interior
    trace, minus the exterior one.
    """
    h_p, hu_p = q_plus
    h_m, hu_m = q_minus
    u_hat = roe_velocity(h_p, hu_p / h_p, h_m, hu_m / h_m)
    if u_hat * n >= 0.0:
        return float(sediment_flux(h_p, hu_p, law))
    return float(sediment_flux(h_m, hu_m, law))


def exner_rhs(q: DgField, b: DgField, law: SedimentLaw,
              wet_mask: np.ndarray | None = None) -> DgField:
    """Semi-discrete db/dt from the volume term and upwind interface fluxes.

    Reflecting boundaries and wet/dry fronts carry zero sediment flux; dry
    elements neither transport sediment nor change.
    """
    disc = q.disc
    ne = disc.n_elements
    if wet_mask is None:
        wet_mask = np.ones(ne, bool)

    vals = q.values_at_quad()
    h_q = np.maximum(vals[:, 0], 1e-300)
    u_q = np.where(wet_mask[:, None], vals[:, 1] / h_q, 0.0)
    Qb_q = law.flux(h_q, u_q)
    vol = Qb_q @ disc.dPw_T

    flux_r = np.zeros(ne)
    flux_l = np.zeros(ne)
    if ne > 1:
        qR = q.trace_right()
        qL = q.trace_left()
        both_wet = wet_mask[:-1] & wet_mask[1:]
        if both_wet.any():
            idx = np.nonzero(both_wet)[0]
            h_l = qR[idx, 0]
            h_r = qL[idx + 1, 0]
            u_l = qR[idx, 1] / h_l
            u_r = qL[idx + 1, 1] / h_r
            u_hat = roe_velocity(h_l, u_l, h_r, u_r)
            # single per-edge value from the left element's perspective (n=+1)
            q_star = np.where(u_hat >= 0.0, law.flux(h_l, u_l), law.flux(h_r, u_r))
            flux_r[idx] = q_star            # times n = +1
            flux_l[idx + 1] = -q_star       # times n = -1

    edge = (flux_r[:, None] * disc.at_right[None, :]
            + flux_l[:, None] * disc.at_left[None, :])
    rhs = vol - edge
    rhs[~wet_mask] = 0.0
    rhs *= disc.inv_mass
    return DgField._make(rhs[:, None, :], disc)
