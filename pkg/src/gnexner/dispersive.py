"""Dispersive-correction operator: HDG solve for (w1, w2) and the momentum update.

The dispersive forcing w1 solves an elliptic problem written as a first-order
system: d/dx (w1/h) = w2/h^3 together with

    w1 - (1/3) dw2/dx - (1/2) (w2/h) db/dx
       + (1/2) d/dx (h db/dx w1) + (db/dx)^2 w1 = s(q),

    s(q) = g h dzeta/dx / alpha + h Q1(u).

Element-local weak forms couple (w1, w2) to a single-valued skeleton trace
w1_hat through the stabilized flux w2* = w2 n + tau (w1 - w1_hat); requiring
w2* to be conserved across interior nodes yields, after static condensation
of the element unknowns, a tridiagonal system over the skeleton.  The trace
satisfies w1_hat·n = 0 at domain boundaries, at dry or breaking fronts, and
the affected elements are removed from the active set.  The momentum update
is dq/dt = (0, -(w1 - g h dzeta/dx / alpha)); the mass component is
identically zero, so this stage never changes the water depth.

Assembly and recovery are element-parallel (batched); the condensed solve is
one banded direct factorization per call.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

from .dg import DgField, TraceField, _weak_derivative_raw
from .errors import SolverError
from .swe import PhysicsParams


@dataclass(eq=False)
class DispersiveSolution:
    """Element fields (w1, w2) and the skeleton trace of w1."""

    w1: DgField
    w2: DgField
    w1_hat: TraceField


def _bed_derivative_values(b: DgField):
    """(db/dx, d2b/dx2) weak derivatives: quad values and modal db coefficients."""
    disc = b.disc
    db_modal = _weak_derivative_raw(disc, b.coeffs[:, 0, :])
    bx_q = db_modal @ disc.P
    bxx_q = _weak_derivative_raw(disc, db_modal) @ disc.P
    return db_modal, bx_q, bxx_q


def _q1_values(u_modal, b: DgField, h_q, bed_cache=None, active=None):
    """Quadrature-point values of Q1(u) = -2 R1((du/dx)^2) + R2(u^2 d2b/dx2).

    R1(w) = -(1/(3h)) d(h^3 w)/dx - (h/2) w db/dx,
    R2(w) =  (1/(2h)) d(h^2 w)/dx + w db/dx.

    All derivatives are weak (centered-flux) DG derivatives; products are
    formed pointwise at the quadrature points and re-projected.
    """
    disc = b.disc
    _, bx_q, bxx_q = bed_cache if bed_cache is not None else _bed_derivative_values(b)
    u_q = u_modal @ disc.P
    du_q = _weak_derivative_raw(disc, u_modal, active) @ disc.P

    w_q = du_q * du_q
    dz_q = _weak_derivative_raw(disc, (h_q ** 3 * w_q) @ disc.proj_T, active) @ disc.P
    r1_q = -dz_q / (3.0 * h_q) - 0.5 * h_q * w_q * bx_q

    v_q = u_q * u_q * bxx_q
    dw_q = _weak_derivative_raw(disc, (h_q ** 2 * v_q) @ disc.proj_T, active) @ disc.P
    r2_q = dw_q / (2.0 * h_q) + v_q * bx_q
    return -2.0 * r1_q + r2_q


def compute_q1(u: DgField, b: DgField, h: DgField) -> DgField:
    """Nonlinear dispersive forcing Q1(u); see _q1_values for the formulas."""
    h_q = h.values_at_quad()[:, 0]
    if np.any(h_q <= 0.0):
        raise ValueError("compute_q1 requires positive depth")
    return DgField.from_quad_values(u.disc, _q1_values(u.coeffs[:, 0, :], b, h_q))


def velocity_field(q: DgField, wet_mask: np.ndarray | None = None) -> DgField:
    """L2 projection of hu/h; zero on elements marked dry."""
    disc = q.disc
    vals = q.values_at_quad()
    h_q = np.maximum(vals[:, 0], 1e-300)
    u_q = vals[:, 1] / h_q
    if wet_mask is not None:
        u_q = np.where(wet_mask[:, None], u_q, 0.0)
    return DgField.from_quad_values(disc, u_q)


def _source_values(q: DgField, b: DgField, params: PhysicsParams,
                   active=None, bed_cache=None):
    """Quadrature-point values of s = g h dzeta/dx / alpha + h Q1(u)."""
    disc = q.disc
    vals = q.values_at_quad()
    h_q = vals[:, 0]
    if np.any(h_q <= 0.0):
        raise ValueError("compute_source_s requires positive depth")
    zx_q = _weak_derivative_raw(disc, q.coeffs[:, 0, :] + b.coeffs[:, 0, :], active) @ disc.P
    u_q = vals[:, 1] / h_q
    if active is not None:
        u_q = np.where(active[:, None], u_q, 0.0)
    u_modal = u_q @ disc.proj_T
    q1_q = _q1_values(u_modal, b, h_q, bed_cache, active)
    return params.g / params.alpha * h_q * zx_q + h_q * q1_q


def compute_source_s(q: DgField, b: DgField, params: PhysicsParams,
                     active: np.ndarray | None = None) -> DgField:
    """Dispersive source s = g h dzeta/dx / alpha + h Q1(u).

    With an `active` mask, front nodes use one-sided derivative traces and
    the velocity is zeroed outside the active set, so inactive (dry or
    breaking) values never contaminate the source.
    """
    return DgField.from_quad_values(q.disc, _source_values(q, b, params, active))


@dataclass(eq=False)
class CondensedSystem:
    """Statically condensed skeleton system with retained local factors.

    The banded matrix couples the trace unknowns on interior skeleton nodes
    whose two neighbor elements are both active; all other nodes carry the
    homogeneous condition w1_hat = 0.  Local inverses are kept so element
    unknowns can be recovered for any right-hand side.
    """

    disc: object
    active: np.ndarray            # (ne,) bool
    unknown_nodes: np.ndarray     # node indices carrying trace unknowns
    banded: np.ndarray            # (3, K) matrix in solve_banded layout
    a_inv: np.ndarray             # (na, L, L) local inverses
    a_inv_b: np.ndarray           # (na, L, 2) condensation blocks
    c_left: np.ndarray            # (L,) left-element row in the flux condition
    c_right: np.ndarray
    tau: float
    rhs: np.ndarray | None = None  # skeleton right-hand side of the last solve

    def solve(self, s: DgField) -> DispersiveSolution:
        """Solve for (w1, w2, w1_hat) given the source field s."""
        disc = self.disc
        nm = disc.n_modes
        mesh = disc.mesh
        act_idx = np.nonzero(self.active)[0]
        na = act_idx.size

        s_q = s.values_at_quad()[act_idx, 0]
        r_local = np.zeros((na, 2 * nm))
        r_local[:, nm:] = disc.jac[act_idx, None] * (s_q @ disc.Pw_T)
        a_inv_r = np.matmul(self.a_inv, r_local[:, :, None])[:, :, 0]

        w_hat = np.zeros(mesh.n_nodes)
        K = self.unknown_nodes.size
        if K > 0:
            cl_r = a_inv_r @ self.c_left       # (na,)
            cr_r = a_inv_r @ self.c_right
            pos = np.full(mesh.n_elements, -1)
            pos[act_idx] = np.arange(na)
            e_left = pos[self.unknown_nodes - 1]
            e_right = pos[self.unknown_nodes]
            rhs = cl_r[e_left] + cr_r[e_right]
            self.rhs = rhs
            try:
                sol = solve_banded((1, 1), self.banded, rhs)
            except np.linalg.LinAlgError as exc:
                raise SolverError("singular condensed dispersive system") from exc
            if not np.all(np.isfinite(sol)):
                raise SolverError("condensed dispersive solve produced non-finite trace")
            w_hat[self.unknown_nodes] = sol

        # recovery: X = Ainv R - (Ainv B) w_hat_pair
        pair = np.column_stack([w_hat[act_idx], w_hat[act_idx + 1]])
        x = a_inv_r - np.matmul(self.a_inv_b, pair[:, :, None])[:, :, 0]

        w1 = DgField.zeros(disc, 1)
        w2 = DgField.zeros(disc, 1)
        w1.coeffs[act_idx, 0] = x[:, :nm]
        w2.coeffs[act_idx, 0] = x[:, nm:]
        return DispersiveSolution(w1=w1, w2=w2, w1_hat=TraceField(w_hat))


def condense(q: DgField, b: DgField, tau: float, params: PhysicsParams,
             active: np.ndarray | None = None) -> CondensedSystem:
    """Assemble the local systems and condense them onto the skeleton trace."""
    disc = q.disc
    mesh = disc.mesh
    ne = mesh.n_elements
    nm = disc.n_modes
    if active is None:
        active = np.ones(ne, bool)
    active = np.asarray(active, bool)
    if not active.any():
        raise SolverError("dispersive solve requested with an empty active set")
    act_idx = np.nonzero(active)[0]
    na = act_idx.size

    h_q = q.values_at_quad()[act_idx, 0]
    if np.any(h_q <= 0.0):
        raise ValueError("dispersive solve requires positive depth on active elements")
    inv_h = 1.0 / h_q
    inv_h3 = inv_h ** 3

    db_modal = _weak_derivative_raw(disc, b.coeffs[:, 0, :])
    bx_q = (db_modal @ disc.P)[act_idx]

    # single-valued h and db/dx traces on each active element's endpoints,
    # one-sided at fronts and domain boundaries
    hL = q.coeffs[:, 0, :] @ disc.at_left
    hR = q.coeffs[:, 0, :] @ disc.at_right
    dbL = db_modal @ disc.at_left
    dbR = db_modal @ disc.at_right
    left_act = np.zeros(ne, bool)
    left_act[1:] = active[:-1]
    right_act = np.zeros(ne, bool)
    right_act[:-1] = active[1:]

    h_hat_l = np.where(left_act, 0.5 * (np.roll(hR, 1) + hL), hL)[act_idx]
    h_hat_r = np.where(right_act, 0.5 * (hR + np.roll(hL, -1)), hR)[act_idx]
    bx_hat_l = np.where(left_act, 0.5 * (np.roll(dbR, 1) + dbL), dbL)[act_idx]
    bx_hat_r = np.where(right_act, 0.5 * (dbR + np.roll(dbL, -1)), dbR)[act_idx]
    if np.any(h_hat_l <= 0.0) or np.any(h_hat_r <= 0.0):
        raise ValueError("dispersive solve requires positive trace depths")

    J = disc.jac[act_idx]
    P, dP, qw = disc.P, disc.dP, disc.qw
    alt = disc.at_left          # (-1)^i

    L = 2 * nm
    Pq = P[None, :, :]            # (1, nm, nq), broadcast over elements
    dPq = dP[None, :, :]

    def mixed(test, weight, trial_T):
        # [e, i, j] = sum_q weight[e, q] * test[i, q] * trial[j, q]
        return (test * weight[:, None, :]) @ trial_T

    A = np.zeros((na, L, L))
    # first equation: mixed relation between w1 and w2
    A[:, :nm, :nm] = mixed(dPq, qw * inv_h, P.T)
    A[:, :nm, nm:] = J[:, None, None] * mixed(Pq, qw * inv_h3, P.T)
    # second equation: elliptic balance for w1
    mass = (P * qw) @ P.T                                # = diag(2/(2i+1))
    edge_a = (tau / 3.0) * (np.ones((nm, nm)) + np.outer(alt, alt))
    edge_b = (1.0 / 3.0) * (np.ones((nm, nm)) - np.outer(alt, alt))
    A[:, nm:, :nm] = (J[:, None, None] * (mass[None] + mixed(Pq, qw * bx_q * bx_q, P.T))
                      - 0.5 * mixed(dPq, qw * h_q * bx_q, P.T)
                      - edge_a[None])
    A[:, nm:, nm:] = ((1.0 / 3.0) * ((dP * qw) @ P.T)[None]
                      - 0.5 * J[:, None, None] * mixed(Pq, qw * inv_h * bx_q, P.T)
                      - edge_b[None])

    B = np.zeros((na, L, 2))
    B[:, :nm, 0] = alt[None, :] / h_hat_l[:, None]
    B[:, :nm, 1] = -1.0 / h_hat_r[:, None]
    B[:, nm:, 0] = alt[None, :] * (tau / 3.0 - 0.5 * h_hat_l * bx_hat_l)[:, None]
    B[:, nm:, 1] = (tau / 3.0 + 0.5 * h_hat_r * bx_hat_r)[:, None]

    try:
        a_inv = np.linalg.inv(A)
    except np.linalg.LinAlgError as exc:
        raise SolverError("singular local dispersive system "
                          "(too shallow or degenerate configuration)") from exc
    a_inv_b = a_inv @ B

    c_left = np.concatenate([tau * np.ones(nm), np.ones(nm)])
    c_right = np.concatenate([tau * alt, -alt])

    unknown_nodes = np.nonzero(active[:-1] & active[1:])[0] + 1
    K = unknown_nodes.size
    banded = np.zeros((3, max(K, 1)))
    if K > 0:
        pos = np.full(ne, -1)
        pos[act_idx] = np.arange(na)
        e_left = pos[unknown_nodes - 1]
        e_right = pos[unknown_nodes]
        cl_b = c_left @ a_inv_b      # (na, 2)
        cr_b = c_right @ a_inv_b
        banded[1] = cl_b[e_left, 1] + cr_b[e_right, 0] + 2.0 * tau
        adjacent = np.diff(unknown_nodes) == 1
        # upper diagonal entries a[k, k+1] stored at ab[0, k+1]
        banded[0, 1:][adjacent] = cr_b[e_right[:-1], 1][adjacent]
        # lower diagonal entries a[k+1, k] stored at ab[2, k]
        banded[2, :-1][adjacent] = cl_b[e_left[1:], 0][adjacent]

    return CondensedSystem(disc=disc, active=active, unknown_nodes=unknown_nodes,
                           banded=banded, a_inv=a_inv, a_inv_b=a_inv_b,
                           c_left=c_left, c_right=c_right, tau=tau)


def solve_w1w2(q: DgField, b: DgField, s: DgField, tau: float,
               params: PhysicsParams, active: np.ndarray | None = None,
               ) -> DispersiveSolution:
    """Assemble, condense, and solve the dispersive system for a given source."""
    return condense(q, b, tau, params, active).solve(s)


def dispersive_rhs(q: DgField, w1: DgField, b: DgField, params: PhysicsParams,
                   active: np.ndarray | None = None) -> DgField:
    """Momentum correction -(w1 - g h dzeta/dx / alpha); zero mass component.

    Elements outside the active set (breaking or dry) are left untouched.
    """
    disc = q.disc
    h_q = q.values_at_quad()[:, 0]
    act = None if active is None else np.asarray(active, bool)
    zx_q = _weak_derivative_raw(disc, q.coeffs[:, 0, :] + b.coeffs[:, 0, :], act) @ disc.P
    w1_q = w1.values_at_quad()[:, 0]
    mom_q = -(w1_q - params.g / params.alpha * h_q * zx_q)
    rhs = DgField.zeros(disc, 2)
    rhs.coeffs[:, 1, :] = mom_q @ disc.proj_T
    if act is not None:
        rhs.coeffs[~act] = 0.0
    return rhs
