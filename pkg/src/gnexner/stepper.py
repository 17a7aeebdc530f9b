"""Time integration: two-stage RK2, Strang splitting, wet/dry, breaking, limiting.

One Stepper instance drives one simulation (single writer); it invokes the
element-parallel module kernels stage by stage.  Model variants:

  NSWE         hyperbolic flow only, rigid bed
  GN           dispersive flow, rigid bed (split S1(dt/2) S2(dt) S1(dt/2))
  CoupledNSWE  flow + bed advanced together by the path-conservative operator
  CoupledGN    coupled flow + bed with the dispersive correction
  DecoupledGN  dispersive flow with periodic separate bed updates
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import coupled as cpl
from . import dispersive as dsp
from . import morpho
from . import swe
from .dg import DgField
from .errors import SolverError

MODELS = ("NSWE", "GN", "CoupledNSWE", "CoupledGN", "DecoupledGN")


@dataclass
class StepControls:
    """Step size policy, wet/dry floor, breaking gate, and limiter constants."""

    model: str = "GN"
    dt: float | None = None
    cfl: float | None = None
    h0_min: float = 1e-4
    breaking_threshold: float = 1.0
    breaking_relax_steps: int = 10
    limiter_M: float = 0.0
    bed_limiter_M: float = 0.0
    tau_hdg: float = 1.0
    bed_update_every: int = 1
    dispersive_min_depth: float | None = None   # default 10 * h0_min

    def __post_init__(self):
        if self.model not in MODELS:
            raise ValueError(f"unknown model {self.model!r}; choose from {MODELS}")
        if (self.dt is None) == (self.cfl is None):
            raise ValueError("exactly one of dt and cfl must be set")
        if self.dt is not None and not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.cfl is not None and not 0 < self.cfl <= 1:
            raise ValueError("cfl must lie in (0, 1]")
        if not self.h0_min > 0:
            raise ValueError("h0_min must be positive")
        if not self.breaking_threshold > 0:
            raise ValueError("breaking_threshold must be positive")
        if self.bed_update_every < 1:
            raise ValueError("bed_update_every must be >= 1")

    @property
    def s2_min_depth(self) -> float:
        if self.dispersive_min_depth is not None:
            return self.dispersive_min_depth
        return 10.0 * self.h0_min


def rk2_step(rhs, y, dt, t=0.0, post=None):
    """Heun two-stage second-order step.

    y* = y + dt R(y, t);  y_next = (y + y* + dt R(y*, t + dt)) / 2, with an
    optional postprocess (limiter, wet/dry fix) applied after each stage.
    """
    y1 = y + dt * rhs(y, t)
    if post is not None:
        y1 = post(y1)
    y2 = 0.5 * y + 0.5 * (y1 + dt * rhs(y1, t + dt))
    if post is not None:
        y2 = post(y2)
    return y2


def breaking_indicators(h: DgField, u: DgField) -> np.ndarray:
    """Scaled inflow-endpoint depth jumps for every element.

    In 1D the face integral reduces to the point jump and the inflow measure
    to the count of endpoints with u·n < 0 (n = -1 left, +1 right).  Domain
    boundary endpoints are never inflow faces.  Elements without inflow
    endpoints report 0.
    """
    disc = h.disc
    ne = disc.n_elements
    p = disc.basis.order
    hL = h.trace_left()[:, 0]
    hR = h.trace_right()[:, 0]
    uL = u.trace_left()[:, 0]
    uR = u.trace_right()[:, 0]

    # |h| sup over quadrature points and endpoints
    samples = np.abs(h.values_at_quad()[:, 0])
    h_sup = np.maximum(samples.max(axis=1), np.maximum(np.abs(hL), np.abs(hR)))
    h_sup = np.maximum(h_sup, 1e-300)

    jump_left = np.zeros(ne)
    jump_right = np.zeros(ne)
    jump_left[1:] = np.abs(hL[1:] - hR[:-1])
    jump_right[:-1] = np.abs(hR[:-1] - hL[1:])

    inflow_left = np.zeros(ne, bool)
    inflow_right = np.zeros(ne, bool)
    inflow_left[1:] = -uL[1:] < 0.0      # u·n with n = -1
    inflow_right[:-1] = uR[:-1] < 0.0    # u·n with n = +1

    total = np.where(inflow_left, jump_left, 0.0) + np.where(inflow_right, jump_right, 0.0)
    count = inflow_left.astype(float) + inflow_right.astype(float)
    scale = disc.dx ** (0.5 * (p + 1)) * np.maximum(count, 1.0) * h_sup
    return np.where(count > 0, total / scale, 0.0)


def breaking_indicator(h: DgField, u: DgField, element: int) -> float:
    """Indicator for a single element (see breaking_indicators)."""
    if not 0 <= element < h.disc.n_elements:
        raise IndexError(f"element index {element} out of range")
    return float(breaking_indicators(h, u)[element])


def wet_dry_fix(state: DgField, bed: DgField, h0_min: float):
    """Enforce the positive depth floor and classify elements wet/dry.

    Elements whose mean depth falls to or below h0_min become dry: their
    depth is set to h0_min (flat) and momentum zeroed.  In wet elements any
    pointwise endpoint value below h0_min is removed by scaling the higher
    modes toward the mean.  Returns (fixed state, wet mask, mass added by
    clipping).
    """
    if not h0_min > 0:
        raise ValueError("h0_min must be positive")
    disc = state.disc
    c = state.coeffs.copy()
    means = c[:, 0, 0]
    wet = means > h0_min

    added = 0.0
    dry = ~wet
    if dry.any():
        added = float(np.sum((h0_min - means[dry]) * disc.dx[dry]))
        c[dry, 0, :] = 0.0
        c[dry, 0, 0] = h0_min
        c[dry, 1, :] = 0.0

    if wet.any() and disc.n_modes > 1:
        hL = c[:, 0, :] @ disc.at_left
        hR = c[:, 0, :] @ disc.at_right
        h_min = np.minimum(hL, hR)
        need = wet & (h_min < h0_min)
        if need.any():
            theta = (c[need, 0, 0] - h0_min) / (c[need, 0, 0] - h_min[need])
            theta = np.clip(theta, 0.0, 1.0)
            c[need, 0, 1:] *= theta[:, None]
    return DgField(c, disc), wet, added


def limit_slopes(state: DgField, M: float = 0.0, components=None) -> DgField:
    """TVB-minmod slope limiter for piecewise-linear fields.

    Element means never change.  A slope is kept when |slope| <= M * dx^2
    and otherwise replaced by minmod(own slope, forward mean difference,
    backward mean difference).  Boundary elements keep their slopes.
    """
    disc = state.disc
    if disc.n_modes != 2:
        raise ValueError("slope limiter requires piecewise-linear fields (order 1)")
    ne = disc.n_elements
    if ne < 3:
        return state.copy()
    c = state.coeffs.copy()
    comps = range(state.n_components) if components is None else components
    thresh = M * disc.dx ** 2
    for k in comps:
        means = c[:, k, 0]
        slope = c[:, k, 1]
        fwd = means[2:] - means[1:-1]
        bwd = means[1:-1] - means[:-2]
        own = slope[1:-1]
        active = np.abs(own) > thresh[1:-1]
        same_sign = (np.sign(own) == np.sign(fwd)) & (np.sign(own) == np.sign(bwd))
        limited = np.where(same_sign,
                           np.sign(own) * np.minimum(np.abs(own),
                                                     np.minimum(np.abs(fwd), np.abs(bwd))),
                           0.0)
        slope[1:-1] = np.where(active, limited, own)
    return DgField(c, disc)


def stable_dt(state: DgField, cfl: float, g: float,
              wet_mask: np.ndarray | None = None) -> float:
    """cfl * min over wet elements of dx / lambda_max(element mean state)."""
    if not 0 < cfl <= 1:
        raise ValueError("cfl must lie in (0, 1]")
    disc = state.disc
    means = state.coeffs[:, :, 0]
    wet = np.ones(disc.n_elements, bool) if wet_mask is None else wet_mask
    if not wet.any():
        raise SolverError("stable_dt: no wet elements")
    h = means[wet, 0]
    u = means[wet, 1] / h
    lam = np.abs(u) + np.sqrt(g * h)
    return float(cfl * np.min(disc.dx[wet] / lam))


class Stepper:
    """Orchestrates one simulation: splitting, masks, limiting, audits."""

    def __init__(self, params: swe.PhysicsParams, controls: StepControls,
                 law: morpho.SedimentLaw | None = None):
        self.params = params
        self.controls = controls
        self.law = law
        if controls.model in ("CoupledNSWE", "CoupledGN", "DecoupledGN") and law is None:
            raise ValueError(f"model {controls.model} requires a sediment law")
        self.wet_mask: np.ndarray | None = None
        self.breaking_counter: np.ndarray | None = None
        self.step_count = 0
        self.clip_mass_total = 0.0
        self.clip_mass_last_step = 0.0
        self.breaking_first: tuple[float, float] | None = None   # (t, x_center)

    # ------------------------------------------------------------------
    def _ensure_state(self, q: DgField):
        ne = q.disc.n_elements
        if self.wet_mask is None:
            self.wet_mask = q.coeffs[:, 0, 0] > self.controls.h0_min
        if self.breaking_counter is None:
            self.breaking_counter = np.zeros(ne, int)

    def reset_transients(self):
        """Forget wet/dry and breaking state (used between scenario waves)."""
        self.wet_mask = None
        self.breaking_counter = None

    def _post_hydro(self, q: DgField) -> DgField:
        q = limit_slopes(q, self.controls.limiter_M, components=(0, 1))
        q, wet, added = wet_dry_fix(q, None, self.controls.h0_min)
        self.wet_mask = wet
        self.clip_mass_total += added
        self.clip_mass_last_step += added
        return q

    def _post_coupled(self, p: DgField) -> DgField:
        p = limit_slopes(p, self.controls.limiter_M, components=(0, 1))
        p = limit_slopes(p, self.controls.bed_limiter_M, components=(2,))
        p, wet, added = wet_dry_fix(p, None, self.controls.h0_min)
        self.wet_mask = wet
        self.clip_mass_total += added
        self.clip_mass_last_step += added
        return p

    # ------------------------------------------------------------------
    def update_breaking(self, q: DgField, t: float):
        """Evaluate the breaking detector and refresh the persistence counters.

        An element is flagged when the indicator exceeds the threshold in the
        element itself or an immediate neighbor; flags persist for the
        configured relaxation count to avoid flicker.
        """
        ctl = self.controls
        u = dsp.velocity_field(q, self.wet_mask)
        ind = breaking_indicators(q.component(0), u)
        trig = ind > ctl.breaking_threshold
        spread = trig.copy()
        spread[:-1] |= trig[1:]
        spread[1:] |= trig[:-1]
        self.breaking_counter = np.where(spread, ctl.breaking_relax_steps,
                                         np.maximum(self.breaking_counter - 1, 0))
        if self.breaking_first is None and trig.any():
            e = int(np.nonzero(trig)[0][0])
            self.breaking_first = (t, float(q.disc.mesh.centers[e]))

    @property
    def breaking_mask(self) -> np.ndarray:
        return self.breaking_counter > 0

    def s2_active_mask(self, q: DgField) -> np.ndarray:
        """Elements that receive the dispersive correction this step."""
        depth_ok = q.coeffs[:, 0, 0] >= self.controls.s2_min_depth
        return self.wet_mask & ~self.breaking_mask & depth_ok

    # ------------------------------------------------------------------
    def _s1_swe(self, q: DgField, b: DgField, t: float, dt: float) -> DgField:
        rhs = lambda y, tt: swe.nswe_rhs(y, b, self.params, tt, self.wet_mask)
        return rk2_step(rhs, q, dt, t, post=self._post_hydro)

    def _s1_coupled(self, p: DgField, t: float, dt: float) -> DgField:
        rhs = lambda y, tt: cpl.coupled_rhs(y, self.params, self.law, tt, self.wet_mask)
        return rk2_step(rhs, p, dt, t, post=self._post_coupled)

    def _s2_dispersive(self, q: DgField, b: DgField, t: float, dt: float) -> DgField:
        active = self.s2_active_mask(q)
        if not active.any():
            return q
        system = dsp.condense(q, b, self.controls.tau_hdg, self.params, active)

        def rhs(y, tt):
            s = dsp.compute_source_s(y, b, self.params, active)
            sol = system.solve(s)
            return dsp.dispersive_rhs(y, sol.w1, b, self.params, active)

        return rk2_step(rhs, q, dt, t)

    def _exner_update(self, q: DgField, b: DgField, t: float, dt: float) -> DgField:
        rhs = lambda y, tt: morpho.exner_rhs(q, y, self.law, self.wet_mask)
        post = lambda y: limit_slopes(y, self.controls.bed_limiter_M)
        return rk2_step(rhs, b, dt, t, post=post)

    # ------------------------------------------------------------------
    def strang_step(self, q: DgField, b: DgField, t: float, dt: float):
        """Advance one step of size dt; returns (q, b) at t + dt.

        Dispersive models apply S1(dt/2) S2(dt) S1(dt/2); plain hyperbolic
        models fall through to a single full S1 step.  DecoupledGN applies a
        separate bed update every `bed_update_every` steps with the current
        flow field.
        """
        self._ensure_state(q)
        self.clip_mass_last_step = 0.0
        ctl = self.controls
        model = ctl.model

        if model in ("GN", "CoupledGN", "DecoupledGN"):
            self.update_breaking(q, t)

        if model == "NSWE":
            q = self._s1_swe(q, b, t, dt)
        elif model == "CoupledNSWE":
            p = _join(q, b)
            p = self._s1_coupled(p, t, dt)
            q, b = _split(p)
        elif model == "GN":
            q = self._s1_swe(q, b, t, 0.5 * dt)
            q = self._s2_dispersive(q, b, t, dt)
            q = self._s1_swe(q, b, t + 0.5 * dt, 0.5 * dt)
        elif model == "CoupledGN":
            p = _join(q, b)
            p = self._s1_coupled(p, t, 0.5 * dt)
            q, b = _split(p)
            q = self._s2_dispersive(q, b, t, dt)
            p = _join(q, b)
            p = self._s1_coupled(p, t + 0.5 * dt, 0.5 * dt)
            q, b = _split(p)
        elif model == "DecoupledGN":
            q = self._s1_swe(q, b, t, 0.5 * dt)
            q = self._s2_dispersive(q, b, t, dt)
            q = self._s1_swe(q, b, t + 0.5 * dt, 0.5 * dt)
            if (self.step_count + 1) % ctl.bed_update_every == 0:
                b = self._exner_update(q, b, t, dt * ctl.bed_update_every)
        else:  # pragma: no cover - guarded by StepControls validation
            raise ValueError(f"unknown model {model!r}")

        self.step_count += 1
        return q, b


def _join(q: DgField, b: DgField) -> DgField:
    return DgField(np.concatenate([q.coeffs, b.coeffs], axis=1), q.disc)


def _split(p: DgField):
    return (DgField(p.coeffs[:, :2].copy(), p.disc),
            DgField(p.coeffs[:, 2:3].copy(), p.disc))
