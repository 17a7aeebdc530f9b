"""Nonlinear shallow water semi-discrete operator with trace-based interface fluxes.

The interface flux follows the hybridized-DG construction: a single-valued
numerical trace q_hat on the skeleton satisfies flux conservation across each
interior node, and each element sees F* = F(q_hat)·n + tau(q_hat)(q - q_hat)
with the local Lax-Friedrichs-motivated stabilization tau = |u·n| + sqrt(gh)
evaluated at the trace.  In 1D the conservation condition at a point face has
the arithmetic mean of the side states as its unique wet root; solve_trace
performs the Newton iteration on the literal 2x2 residual and the assembly
uses the closed-form root with a residual check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dg import DgField
from .errors import TraceSolveError
from .mesh import Reflecting, Wavemaker

_H_TINY = 1e-300


@dataclass(frozen=True)
class PhysicsParams:
    """Gravity, reference depth, dispersion tuning, and Chezy friction."""

    g: float = 9.81
    H0: float = 1.0
    alpha: float = 1.0
    Cf: float = 0.0
    friction_on: bool = False

    def __post_init__(self):
        if not self.g > 0:
            raise ValueError("g must be positive")
        if not self.H0 > 0:
            raise ValueError("H0 must be positive")
        if not 1.0 <= self.alpha <= 1.5:
            raise ValueError("alpha must lie in [1.0, 1.5]")


def physical_flux(h, hu, g):
    """Conservative flux (hu, hu^2/h + g h^2 / 2); requires h > 0."""
    h = np.asarray(h, float)
    hu = np.asarray(hu, float)
    if np.any(h <= 0):
        raise ValueError("physical_flux requires positive depth")
    return hu, hu * hu / h + 0.5 * g * h * h


def lambda_max(h, hu, n, g):
    """Largest wave speed |u·n| + sqrt(gh) of the normal flux Jacobian."""
    h = np.asarray(h, float)
    hu = np.asarray(hu, float)
    if np.any(h <= 0):
        raise ValueError("lambda_max requires positive depth")
    return np.abs(hu / h * n) + np.sqrt(g * h)


def trace_residual(q_hat, q_left, q_right, g):
    """Sum over both sides of F(q_hat)·n_side + tau(q_hat)(q_side - q_hat).

    The left element's outward normal at the shared node is +1, the right
    element's is -1.
    """
    h, hu = q_hat
    if h <= 0:
        raise ValueError("trace residual requires positive depth")
    f1, f2 = physical_flux(h, hu, g)
    tau = lambda_max(h, hu, 1.0, g)
    res = np.empty(2)
    # left side, n = +1
    res[0] = f1 + tau * (q_left[0] - h)
    res[1] = f2 + tau * (q_left[1] - hu)
    # right side, n = -1
    res[0] += -f1 + tau * (q_right[0] - h)
    res[1] += -f2 + tau * (q_right[1] - hu)
    return res


def solve_trace(q_left, q_right, g, tol=1e-12, max_iter=50):
    """Newton solve for the interface trace; initial guess is the side mean.

    Raises TraceSolveError on breakdown; callers fall back to a single
    Lax-Friedrichs evaluation (see lax_friedrichs_flux).
    """
    q_left = np.asarray(q_left, float)
    q_right = np.asarray(q_right, float)
    if q_left[0] <= 0 or q_right[0] <= 0:
        raise ValueError("solve_trace requires wet states on both sides")
    q_hat = 0.5 * (q_left + q_right)
    scale = max(1.0, abs(q_hat[0]), abs(q_hat[1]))
    for _ in range(max_iter):
        res = trace_residual(q_hat, q_left, q_right, g)
        if np.max(np.abs(res)) <= tol * scale:
            return q_hat
        # finite-difference Jacobian of the 2x2 residual
        jac = np.empty((2, 2))
        for k in range(2):
            dq = 1e-7 * max(abs(q_hat[k]), 1e-3)
            qp = q_hat.copy()
            qp[k] += dq
            if qp[0] <= 0:
                raise TraceSolveError("trace iterate left the wet region")
            jac[:, k] = (trace_residual(qp, q_left, q_right, g) - res) / dq
        try:
            step = np.linalg.solve(jac, res)
        except np.linalg.LinAlgError as exc:
            raise TraceSolveError("singular trace Jacobian") from exc
        q_hat = q_hat - step
        if not np.isfinite(q_hat).all() or q_hat[0] <= 0:
            raise TraceSolveError("trace iterate left the wet region")
    res = trace_residual(q_hat, q_left, q_right, g)
    if np.max(np.abs(res)) <= tol * scale:
        return q_hat
    raise TraceSolveError(f"trace Newton did not converge (residual {np.max(np.abs(res)):.3e})")


def lax_friedrichs_flux(q_in, q_out, n, g):
    """Robust fallback flux: central average plus maximal-speed dissipation."""
    f_in = physical_flux(q_in[0], q_in[1], g)
    f_out = physical_flux(q_out[0], q_out[1], g)
    lam = max(lambda_max(q_in[0], q_in[1], n, g), lambda_max(q_out[0], q_out[1], n, g))
    return np.array([0.5 * (f_in[0] + f_out[0]) * n + 0.5 * lam * (q_in[0] - q_out[0]),
                     0.5 * (f_in[1] + f_out[1]) * n + 0.5 * lam * (q_in[1] - q_out[1])])


def boundary_trace(q_interior, kind, t, params, b_here):
    """Numerical trace at a domain boundary node.

    Reflecting: keep the interior depth, zero the normal momentum.
    Wavemaker: prescribe h from the target surface elevation, copy the
    interior momentum.
    """
    h_i, hu_i = float(q_interior[0]), float(q_interior[1])
    if h_i <= 0:
        raise ValueError("boundary trace requires a wet interior state")
    if isinstance(kind, Reflecting):
        return np.array([h_i, 0.0])
    if isinstance(kind, Wavemaker):
        h = kind.elevation(t) + params.H0 - b_here
        if h <= 0:
            raise ValueError("wavemaker prescribes a non-positive depth")
        return np.array([h, hu_i])
    raise TypeError(f"unknown boundary kind {kind!r}")


def _hdg_side_flux(q_hat_h, q_hat_hu, q_side_h, q_side_hu, n, g):
    """F(q_hat)·n + tau(q_hat) (q_side - q_hat), vectorized over nodes."""
    f1, f2 = physical_flux(q_hat_h, q_hat_hu, g)
    tau = np.abs(q_hat_hu / q_hat_h) + np.sqrt(g * q_hat_h)
    return (f1 * n + tau * (q_side_h - q_hat_h),
            f2 * n + tau * (q_side_hu - q_hat_hu))


def interface_traces(q: DgField, wet_mask, b: DgField, params):
    """Classify interior nodes and compute the open-interface traces.

    Returns (open_mask over interior nodes, q_hat (n_interior, 2)).  An
    interior node is open when both sides are wet, or when exactly one side
    is wet and the wet-side surface elevation exceeds the dry-side bed
    elevation (mass may transfer toward the dry element); otherwise the node
    is closed and each wet side is treated as a reflecting wall.
    """
    qR = q.trace_right()   # (ne, 2): element values at right endpoints
    qL = q.trace_left()
    bR = b.trace_right()[:, 0]
    bL = b.trace_left()[:, 0]

    wl = wet_mask[:-1]     # wet state of the element left of each interior node
    wr = wet_mask[1:]
    hs_l = qR[:-1, 0]
    hs_r = qL[1:, 0]
    open_mask = wl & wr
    # wet->dry openings
    l_wet_only = wl & ~wr
    r_wet_only = wr & ~wl
    open_mask = open_mask | (l_wet_only & (hs_l + bR[:-1] > bL[1:]))
    open_mask = open_mask | (r_wet_only & (hs_r + bL[1:] > bR[:-1]))

    q_hat = 0.5 * (qR[:-1] + qL[1:])
    return open_mask, q_hat


def nswe_rhs(q: DgField, b: DgField, params: PhysicsParams, t: float = 0.0,
             wet_mask: np.ndarray | None = None) -> DgField:
    """Semi-discrete right-hand side dq/dt for the shallow water system.

    Volume flux and bathymetry/friction sources are integrated per element;
    interface fluxes use the skeleton trace.  Dry elements are frozen except
    for fluxes through open wet/dry interfaces; closed wet/dry interfaces act
    as reflecting walls for the wet side.
    """
    disc = q.disc
    mesh = disc.mesh
    ne = mesh.n_elements
    g = params.g
    if wet_mask is None:
        wet_mask = np.ones(ne, bool)

    vals = q.values_at_quad()
    h_q = vals[:, 0]
    hu_q = vals[:, 1]
    h_pos = np.maximum(h_q, _H_TINY)
    u_q = np.where(wet_mask[:, None], hu_q / h_pos, 0.0)

    F = np.empty_like(vals)
    F[:, 0] = hu_q
    F[:, 1] = hu_q * u_q + 0.5 * g * h_q * h_q
    vol = F @ disc.dPw_T

    # momentum source: -g h db/dx with the in-element polynomial derivative,
    # plus Chezy friction opposing the motion
    bx_q = (b.coeffs[:, 0, :] @ disc.dP) / disc.jac[:, None]
    S = -g * h_q * bx_q
    if params.friction_on and params.Cf != 0.0:
        S = S - params.Cf * np.abs(u_q) * u_q
    src = disc.jac[:, None] * (S @ disc.Pw_T)

    qR = q.trace_right()
    qL = q.trace_left()

    flux_r = np.zeros((ne, 2))     # flux each element sees at its right endpoint
    flux_l = np.zeros((ne, 2))

    if ne > 1:
        open_mask, q_hat = interface_traces(q, wet_mask, b, params)
        wl = wet_mask[:-1]
        wr = wet_mask[1:]

        if open_mask.any():
            m = open_mask
            hh = q_hat[m, 0]
            hq = q_hat[m, 1]
            f1r, f2r = _hdg_side_flux(hh, hq, qR[:-1][m, 0], qR[:-1][m, 1], +1.0, g)
            f1l, f2l = _hdg_side_flux(hh, hq, qL[1:][m, 0], qL[1:][m, 1], -1.0, g)
            idx = np.nonzero(m)[0]
            flux_r[idx, 0] = f1r
            flux_r[idx, 1] = f2r
            flux_l[idx + 1, 0] = f1l
            flux_l[idx + 1, 1] = f2l

        closed = ~open_mask
        # wet element left of a closed node: reflecting trace (h_side, 0)
        cl = closed & wl
        if cl.any():
            idx = np.nonzero(cl)[0]
            hh = qR[idx, 0]
            f1, f2 = _hdg_side_flux(hh, 0.0, qR[idx, 0], qR[idx, 1], +1.0, g)
            flux_r[idx, 0] = f1
            flux_r[idx, 1] = f2
        cr = closed & wr
        if cr.any():
            idx = np.nonzero(cr)[0]
            hh = qL[idx + 1, 0]
            f1, f2 = _hdg_side_flux(hh, 0.0, qL[idx + 1, 0], qL[idx + 1, 1], -1.0, g)
            flux_l[idx + 1, 0] = f1
            flux_l[idx + 1, 1] = f2

    # domain boundaries
    tag_l, tag_r = mesh.boundary_tags
    if wet_mask[0]:
        q_hat_b = boundary_trace(qL[0], tag_l, t, params, float(b.trace_left()[0, 0]))
        f1, f2 = _hdg_side_flux(q_hat_b[0], q_hat_b[1], qL[0, 0], qL[0, 1], -1.0, g)
        flux_l[0] = (f1, f2)
    if wet_mask[-1]:
        q_hat_b = boundary_trace(qR[-1], tag_r, t, params, float(b.trace_right()[-1, 0]))
        f1, f2 = _hdg_side_flux(q_hat_b[0], q_hat_b[1], qR[-1, 0], qR[-1, 1], +1.0, g)
        flux_r[-1] = (f1, f2)

    # frozen dry elements: no volume/source contribution
    dry = ~wet_mask
    if dry.any():
        vol[dry] = 0.0
        src[dry] = 0.0

    edge = (flux_r[:, :, None] * disc.at_right[None, None, :]
            + flux_l[:, :, None] * disc.at_left[None, None, :])
    rhs = vol - edge
    rhs[:, 1, :] += src
    rhs *= disc.inv_mass[:, None, :]
    return DgField._make(rhs, disc)
