"""Path-conservative DG operator for the simultaneously coupled flow + bed system.

State per point is p = (h, hu, b).  The momentum bathymetry term -g h db/dx
is a nonconservative product; its interface contribution is the linear-path
integral w_nc = (0, g (hL+hR)(bL-bR) nL / 2), single valued over each edge.
The conservative part uses a three-branch flux built on truncated
characteristic speeds and the Harten-Lax-van Leer middle state; the bed
component is upwinded by the Roe velocity as in the decoupled scheme.
"""

from __future__ import annotations

import numpy as np

from .dg import DgField
from .errors import SolverError
from .mesh import Reflecting, Wavemaker
from .morpho import SedimentLaw, roe_velocity
from .swe import PhysicsParams, boundary_trace, physical_flux


def w_nc(p_left, p_right, n_left, g):
    """Linear-path interface correction (0, g (hL+hR)(bL-bR) nL / 2).

    Swapping sides while flipping n_left leaves the value unchanged (the
    product (bL-bR)·nL is antisymmetric in each argument separately).
    """
    h_l, _, b_l = p_left
    h_r, _, b_r = p_right
    return np.array([0.0, 0.5 * g * (h_l + h_r) * (b_l - b_r) * n_left])


def characteristic_speeds(q_plus, q_minus, n, g):
    """Truncated speeds (S_plus, S_minus) with S_plus <= S_minus.

    S_plus = min over sides of u·n - sqrt(gh); S_minus = max of u·n + sqrt(gh).
    """
    h_p, hu_p = q_plus
    h_m, hu_m = q_minus
    if h_p <= 0 or h_m <= 0:
        raise ValueError("characteristic speeds require positive depths")
    un_p = hu_p / h_p * n
    un_m = hu_m / h_m * n
    c_p = np.sqrt(g * h_p)
    c_m = np.sqrt(g * h_m)
    return min(un_p - c_p, un_m - c_m), max(un_p + c_p, un_m + c_m)


def hll_flux(q_plus, q_minus, n, g, speeds=None):
    """Harten-Lax-van Leer flux for the middle branch S_plus <= 0 <= S_minus."""
    if speeds is None:
        speeds = characteristic_speeds(q_plus, q_minus, n, g)
    s_p, s_m = speeds
    if s_m == s_p:
        raise SolverError("degenerate characteristic speeds in HLL flux")
    f_p = np.array(physical_flux(q_plus[0], q_plus[1], g))
    f_m = np.array(physical_flux(q_minus[0], q_minus[1], g))
    dq = np.array([q_plus[0] - q_minus[0], q_plus[1] - q_minus[1]])
    return ((s_m * f_p - s_p * f_m) * n - s_p * s_m * dq) / (s_m - s_p)


def coupled_interface_flux(p_plus, p_minus, n, g, law: SedimentLaw):
    """Three-branch flow flux with the nonconservative correction, plus bed flux.

    Returns (flux 2-vector for (h, hu), upwind bed flux scalar).  Superscript
    plus denotes the interior trace with respect to the normal n.
    """
    q_p = (p_plus[0], p_plus[1])
    q_m = (p_minus[0], p_minus[1])
    s_p, s_m = characteristic_speeds(q_p, q_m, n, g)
    wnc = w_nc(p_plus, p_minus, n, g) if n > 0 else w_nc(p_minus, p_plus, -n, g)
    if s_p > 0.0:
        flow = np.array(physical_flux(q_p[0], q_p[1], g)) * n - 0.5 * wnc
    elif s_m < 0.0:
        flow = np.array(physical_flux(q_m[0], q_m[1], g)) * n + 0.5 * wnc
    else:
        flow = hll_flux(q_p, q_m, n, g, (s_p, s_m))
        flow = flow - (s_p + s_m) / (2.0 * (s_m - s_p)) * wnc

    u_hat = roe_velocity(q_p[0], q_p[1] / q_p[0], q_m[0], q_m[1] / q_m[0])
    if u_hat * n >= 0.0:
        bed = float(law.flux(q_p[0], q_p[1] / q_p[0]))
    else:
        bed = float(law.flux(q_m[0], q_m[1] / q_m[0]))
    return flow, bed


def _speeds_vec(h_l, u_l, h_r, u_r, g):
    """Vectorized truncated speeds seen from the left element (n = +1)."""
    c_l = np.sqrt(g * h_l)
    c_r = np.sqrt(g * h_r)
    s_p = np.minimum(u_l - c_l, u_r - c_r)
    s_m = np.maximum(u_l + c_l, u_r + c_r)
    return s_p, s_m


def _branch_flux_vec(h_l, hu_l, h_r, hu_r, wnc_mom, g):
    """Per-edge flow flux from the left element's perspective, vectorized.

    The right element receives the negation: the +-half w_nc terms of the
    outer branches and the speed-weighted middle term encode the transfer of
    the nonconservative product so that the pairing is exactly antisymmetric.
    """
    u_l = hu_l / h_l
    u_r = hu_r / h_r
    s_p, s_m = _speeds_vec(h_l, u_l, h_r, u_r, g)
    if np.any(s_m == s_p):
        raise SolverError("degenerate characteristic speeds at an interface")

    f1_l, f2_l = physical_flux(h_l, hu_l, g)
    f1_r, f2_r = physical_flux(h_r, hu_r, g)

    den = s_m - s_p
    hll1 = (s_m * f1_l - s_p * f1_r - s_p * s_m * (h_l - h_r)) / den
    hll2 = (s_m * f2_l - s_p * f2_r - s_p * s_m * (hu_l - hu_r)) / den
    mid_w = (s_p + s_m) / (2.0 * den)

    flux1 = np.where(s_p > 0.0, f1_l, np.where(s_m < 0.0, f1_r, hll1))
    flux2 = np.where(s_p > 0.0, f2_l - 0.5 * wnc_mom,
                     np.where(s_m < 0.0, f2_r + 0.5 * wnc_mom, hll2 - mid_w * wnc_mom))
    return flux1, flux2


def coupled_rhs(p: DgField, params: PhysicsParams, law: SedimentLaw,
                t: float = 0.0, wet_mask: np.ndarray | None = None) -> DgField:
    """Semi-discrete d(h, hu, b)/dt for the coupled system.

    Volume terms carry the conservative fluxes, the in-element
    nonconservative product -g h db/dx, and friction; interior edges carry
    the three-branch flux, the half-weighted w_nc edge term tested against
    the side average, and the upwind bed flux.  Boundary edges omit the
    nonconservative edge term; reflecting walls use a mirrored exterior
    state, wavemakers a prescribed-depth exterior state.  Wet/dry interface
    policy matches the decoupled operator.
    """
    disc = p.disc
    mesh = disc.mesh
    ne = mesh.n_elements
    g = params.g
    if wet_mask is None:
        wet_mask = np.ones(ne, bool)

    vals = p.values_at_quad()
    h_q = vals[:, 0]
    hu_q = vals[:, 1]
    h_pos = np.maximum(h_q, 1e-300)
    u_q = np.where(wet_mask[:, None], hu_q / h_pos, 0.0)

    F = np.empty_like(vals)
    F[:, 0] = hu_q
    F[:, 1] = hu_q * u_q + 0.5 * g * h_q * h_q
    F[:, 2] = law.flux(h_q, u_q)
    vol = F @ disc.dPw_T

    bx_q = (p.coeffs[:, 2, :] @ disc.dP) / disc.jac[:, None]
    S = -g * h_q * bx_q
    if params.friction_on and params.Cf != 0.0:
        S = S - params.Cf * np.abs(u_q) * u_q
    src = disc.jac[:, None] * (S @ disc.Pw_T)

    pR = p.trace_right()   # (ne, 3)
    pL = p.trace_left()

    flux_r = np.zeros((ne, 3))
    flux_l = np.zeros((ne, 3))
    wnc_r = np.zeros(ne)    # half w_nc received at the element's right endpoint
    wnc_l = np.zeros(ne)

    if ne > 1:
        wl = wet_mask[:-1]
        wr = wet_mask[1:]
        hs_l = pR[:-1, 0]
        hs_r = pL[1:, 0]
        b_l = pR[:-1, 2]
        b_r = pL[1:, 2]
        open_mask = (wl & wr) \
            | (wl & ~wr & (hs_l + b_l > b_r)) \
            | (wr & ~wl & (hs_r + b_r > b_l))

        if open_mask.any():
            idx = np.nonzero(open_mask)[0]
            h_l = pR[idx, 0]
            hu_l = pR[idx, 1]
            h_r = pL[idx + 1, 0]
            hu_r = pL[idx + 1, 1]
            wnc_mom = 0.5 * g * (h_l + h_r) * (b_l[idx] - b_r[idx])   # n_left = +1
            f1, f2 = _branch_flux_vec(h_l, hu_l, h_r, hu_r, wnc_mom, g)
            flux_r[idx, 0] = f1
            flux_r[idx, 1] = f2
            flux_l[idx + 1, 0] = -f1
            flux_l[idx + 1, 1] = -f2
            wnc_r[idx] = 0.5 * wnc_mom
            wnc_l[idx + 1] = 0.5 * wnc_mom

            u_l = hu_l / h_l
            u_r = hu_r / h_r
            u_hat = roe_velocity(h_l, u_l, h_r, u_r)
            q_star = np.where(u_hat >= 0.0, law.flux(h_l, u_l), law.flux(h_r, u_r))
            # zero bed transfer through a wet/dry opening: no water on one side
            q_star = np.where(wl[idx] & wr[idx], q_star, 0.0)
            flux_r[idx, 2] = q_star
            flux_l[idx + 1, 2] = -q_star

        closed = ~open_mask
        cl = closed & wl
        if cl.any():
            idx = np.nonzero(cl)[0]
            h_w = pR[idx, 0]
            hu_w = pR[idx, 1]
            f1, f2 = _branch_flux_vec(h_w, hu_w, h_w, -hu_w, np.zeros(idx.size), g)
            flux_r[idx, 0] = f1
            flux_r[idx, 1] = f2
        cr = closed & wr
        if cr.any():
            idx = np.nonzero(cr)[0]
            h_w = pL[idx + 1, 0]
            hu_w = pL[idx + 1, 1]
            # mirrored state seen with n = +1 from the wet (right) element
            f1, f2 = _branch_flux_vec(h_w, -hu_w, h_w, hu_w, np.zeros(idx.size), g)
            flux_l[idx + 1, 0] = -f1
            flux_l[idx + 1, 1] = -f2

    # domain boundaries: ghost exterior state, no w_nc, no bed flux
    tag_l, tag_r = mesh.boundary_tags
    if wet_mask[0]:
        ghost = _boundary_ghost(pL[0], tag_l, t, params)
        f1, f2 = _branch_flux_vec(np.array([ghost[0]]), np.array([ghost[1]]),
                                  np.array([pL[0, 0]]), np.array([pL[0, 1]]),
                                  np.zeros(1), g)
        flux_l[0, 0] = -f1[0]
        flux_l[0, 1] = -f2[0]
    if wet_mask[-1]:
        ghost = _boundary_ghost(pR[-1], tag_r, t, params)
        f1, f2 = _branch_flux_vec(np.array([pR[-1, 0]]), np.array([pR[-1, 1]]),
                                  np.array([ghost[0]]), np.array([ghost[1]]),
                                  np.zeros(1), g)
        flux_r[-1, 0] = f1[0]
        flux_r[-1, 1] = f2[0]

    dry = ~wet_mask
    if dry.any():
        vol[dry] = 0.0
        src[dry] = 0.0

    edge = (flux_r[:, :, None] * disc.at_right[None, None, :]
            + flux_l[:, :, None] * disc.at_left[None, None, :])
    rhs = vol - edge
    rhs[:, 1, :] += src
    rhs[:, 1, :] += (wnc_r[:, None] * disc.at_right[None, :]
                     + wnc_l[:, None] * disc.at_left[None, :])
    rhs *= disc.inv_mass[:, None, :]
    return DgField._make(rhs, disc)


def _boundary_ghost(p_int, kind, t, params):
    """Exterior ghost state (h, hu) for the coupled boundary flux."""
    if isinstance(kind, Reflecting):
        return np.array([p_int[0], -p_int[1]])
    if isinstance(kind, Wavemaker):
        q_hat = boundary_trace(p_int[:2], kind, t, params, float(p_int[2]))
        return q_hat
    raise TypeError(f"unknown boundary kind {kind!r}")
