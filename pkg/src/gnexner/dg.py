"""Modal Legendre DG core: basis, quadrature, fields, projection, weak derivatives.

Fields are stored as modal Legendre coefficients per element, one coefficient
row per unknown component.  The Legendre basis is L2-orthogonal on [-1, 1],
so element mass matrices are diagonal and the element mean is the leading
coefficient.  All operations here are pure; element loops are expressed as
vectorized numpy operations with no shared mutation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import legendre as npleg

from .mesh import Mesh1D


def _legendre_table(order: int, points: np.ndarray) -> np.ndarray:
    """P_j(points) for j = 0..order, shape (order+1, n_points)."""
    points = np.asarray(points, float)
    out = np.empty((order + 1, points.size))
    for j in range(order + 1):
        c = np.zeros(j + 1)
        c[j] = 1.0
        out[j] = npleg.legval(points, c)
    return out


def _legendre_deriv_table(order: int, points: np.ndarray) -> np.ndarray:
    points = np.asarray(points, float)
    out = np.empty((order + 1, points.size))
    for j in range(order + 1):
        c = np.zeros(j + 1)
        c[j] = 1.0
        out[j] = npleg.legval(points, npleg.legder(c)) if j > 0 else 0.0
    return out


@dataclass(frozen=True, eq=False)
class Basis:
    """Modal Legendre basis of degree `order` on the reference interval [-1, 1]."""

    order: int

    def __post_init__(self):
        if self.order < 0:
            raise ValueError("basis order must be >= 0")

    @property
    def n_modes(self) -> int:
        return self.order + 1

    def eval(self, ref_points) -> np.ndarray:
        """Basis values, shape (n_modes, n_points)."""
        return _legendre_table(self.order, np.atleast_1d(ref_points))

    def eval_deriv(self, ref_points) -> np.ndarray:
        """Reference-coordinate derivatives, shape (n_modes, n_points)."""
        return _legendre_deriv_table(self.order, np.atleast_1d(ref_points))

    @property
    def at_left(self) -> np.ndarray:
        """P_j(-1) = (-1)^j."""
        return (-1.0) ** np.arange(self.n_modes)

    @property
    def at_right(self) -> np.ndarray:
        """P_j(+1) = 1."""
        return np.ones(self.n_modes)

    @property
    def norms(self) -> np.ndarray:
        """Reference-interval L2 norms squared: 2/(2j+1)."""
        return 2.0 / (2.0 * np.arange(self.n_modes) + 1.0)


@dataclass(frozen=True, eq=False)
class Quadrature:
    """Gauss-Legendre rule on [-1, 1] with a stated polynomial exactness degree."""

    points: np.ndarray
    weights: np.ndarray
    exactness: int

    @classmethod
    def gauss(cls, n_points: int) -> "Quadrature":
        if n_points < 1:
            raise ValueError("quadrature needs at least one point")
        x, w = npleg.leggauss(n_points)
        return cls(points=x, weights=w, exactness=2 * n_points - 1)

    @classmethod
    def for_order(cls, order: int, exactness: int | None = None) -> "Quadrature":
        """Default rule for basis degree `order`.

        Exactness 2p+3 by default: products like h^3 * w appearing under
        volume integrals are cubic in the solution and alias badly with
        minimal rules.
        """
        if exactness is None:
            exactness = 2 * order + 3
        n = exactness // 2 + 1
        return cls.gauss(n)

    def __post_init__(self):
        if np.any(self.weights <= 0):
            raise ValueError("quadrature weights must be positive")


class Discretization:
    """Mesh + basis + quadrature bundle with cached evaluation tables."""

    def __init__(self, mesh: Mesh1D, basis: Basis | int = 1,
                 quadrature: Quadrature | None = None):
        if isinstance(basis, int):
            basis = Basis(basis)
        if quadrature is None:
            quadrature = Quadrature.for_order(basis.order)
        self.mesh = mesh
        self.basis = basis
        self.quadrature = quadrature

        self.qp = quadrature.points                     # (nq,)
        self.qw = quadrature.weights                    # (nq,)
        self.P = basis.eval(self.qp)                    # (nm, nq)
        self.dP = basis.eval_deriv(self.qp)             # (nm, nq)
        self.at_left = basis.at_left                    # (nm,)
        self.at_right = basis.at_right                  # (nm,)
        self.dx = mesh.dx                               # (ne,)
        self.jac = 0.5 * self.dx                        # (ne,)
        # physical quadrature coordinates, (ne, nq)
        self.x_quad = mesh.centers[:, None] + self.jac[:, None] * self.qp[None, :]
        # inverse diagonal mass: M_jj = dx/(2j+1)  =>  M^-1 = (2j+1)/dx
        mode_scale = 2.0 * np.arange(basis.n_modes) + 1.0
        self.inv_mass = mode_scale[None, :] / self.dx[:, None]   # (ne, nm)
        # projection weights: c_j = (2j+1)/2 * sum_q w_q f(xi_q) P_j(xi_q)
        self.proj = 0.5 * mode_scale[:, None] * (self.P * self.qw[None, :])  # (nm, nq)
        # matmul-ready tables for the hot assembly paths
        self.proj_T = np.ascontiguousarray(self.proj.T)          # (nq, nm)
        self.Pw_T = np.ascontiguousarray((self.P * self.qw).T)   # (nq, nm)
        self.dPw_T = np.ascontiguousarray((self.dP * self.qw).T)  # (nq, nm)

    @property
    def n_elements(self) -> int:
        return self.mesh.n_elements

    @property
    def n_modes(self) -> int:
        return self.basis.n_modes


@dataclass(eq=False)
class TraceField:
    """Single-valued nodal values on the mesh skeleton plus boundary nodes.

    values has shape (n_nodes, n_components) or (n_nodes,) for scalars.
    """

    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, float)


@dataclass(eq=False)
class DgField:
    """Piecewise-polynomial field: modal coefficients (n_elements, n_components, n_modes)."""

    coeffs: np.ndarray
    disc: Discretization

    def __post_init__(self):
        c = np.asarray(self.coeffs, float)
        if c.ndim == 2:
            c = c[:, None, :]
        if c.ndim != 3:
            raise ValueError("coefficients must have shape (n_elements, n_components, n_modes)")
        if c.shape[0] != self.disc.n_elements or c.shape[2] != self.disc.n_modes:
            raise ValueError(
                f"coefficient shape {c.shape} inconsistent with mesh/basis "
                f"({self.disc.n_elements} elements, {self.disc.n_modes} modes)")
        self.coeffs = c

    # --- constructors -------------------------------------------------
    @classmethod
    def _make(cls, coeffs: np.ndarray, disc: Discretization) -> "DgField":
        """Internal fast constructor: trusts the coefficient shape."""
        obj = object.__new__(cls)
        obj.coeffs = coeffs
        obj.disc = disc
        return obj

    @classmethod
    def zeros(cls, disc: Discretization, n_components: int = 1) -> "DgField":
        return cls._make(np.zeros((disc.n_elements, n_components, disc.n_modes)), disc)

    @classmethod
    def from_quad_values(cls, disc: Discretization, values: np.ndarray) -> "DgField":
        """L2 projection from values at the quadrature points, (ne, nc, nq) or (ne, nq)."""
        v = np.asarray(values, float)
        if v.ndim == 2:
            v = v[:, None, :]
        return cls._make(v @ disc.proj_T, disc)

    # --- properties and evaluation -------------------------------------
    @property
    def n_components(self) -> int:
        return self.coeffs.shape[1]

    def values_at_quad(self) -> np.ndarray:
        """(ne, nc, nq) values at the quadrature points."""
        return self.coeffs @ self.disc.P

    def deriv_values_at_quad(self) -> np.ndarray:
        """In-element polynomial derivative at the quadrature points, (ne, nc, nq)."""
        return (self.coeffs @ self.disc.dP) / self.disc.jac[:, None, None]

    def trace_left(self) -> np.ndarray:
        """(ne, nc) values at each element's left endpoint."""
        return self.coeffs @ self.disc.at_left

    def trace_right(self) -> np.ndarray:
        return self.coeffs @ self.disc.at_right

    def eval(self, element: int, ref_points) -> np.ndarray:
        """Evaluate within one element at reference coordinates in [-1, 1]."""
        if not 0 <= element < self.disc.n_elements:
            raise IndexError(f"element index {element} out of range")
        ref = np.atleast_1d(np.asarray(ref_points, float))
        if np.any(np.abs(ref) > 1.0 + 1e-12):
            raise ValueError("reference points must lie in [-1, 1]")
        vals = self.coeffs[element] @ self.disc.basis.eval(ref)
        return vals[0] if self.n_components == 1 else vals

    def eval_at_x(self, x: float) -> np.ndarray:
        """Evaluate at a physical coordinate (left-element convention at nodes)."""
        e = self.disc.mesh.element_containing(x)
        xi = 2.0 * (x - self.disc.mesh.centers[e]) / self.disc.dx[e]
        xi = min(1.0, max(-1.0, xi))
        return self.eval(e, xi)

    def element_means(self) -> np.ndarray:
        """(ne, nc) L2 averages; for modal Legendre this is the leading coefficient."""
        return self.coeffs[:, :, 0].copy()

    def component(self, c: int) -> "DgField":
        return DgField(self.coeffs[:, c:c + 1, :].copy(), self.disc)

    def copy(self) -> "DgField":
        return DgField(self.coeffs.copy(), self.disc)

    # --- arithmetic used by time integration ---------------------------
    def __add__(self, other: "DgField") -> "DgField":
        return DgField._make(self.coeffs + other.coeffs, self.disc)

    def __sub__(self, other: "DgField") -> "DgField":
        return DgField._make(self.coeffs - other.coeffs, self.disc)

    def __mul__(self, a: float) -> "DgField":
        return DgField._make(self.coeffs * a, self.disc)

    __rmul__ = __mul__


def project(disc: Discretization, f, n_components: int | None = None) -> DgField:
    """Element-wise L2 projection of pointwise functions onto the DG space.

    f is a callable x -> values, or a sequence of callables (one per
    component).  Exact for polynomial f of degree <= basis order.
    """
    funcs = list(f) if isinstance(f, (list, tuple)) else [f]
    if n_components is not None and n_components != len(funcs):
        raise ValueError("n_components inconsistent with the callables supplied")
    vals = np.empty((disc.n_elements, len(funcs), disc.qp.size))
    for c, fn in enumerate(funcs):
        v = np.asarray(fn(disc.x_quad), float)
        if v.shape != disc.x_quad.shape:
            v = np.broadcast_to(v, disc.x_quad.shape)
        vals[:, c, :] = v
    if not np.all(np.isfinite(vals)):
        raise ValueError("projection samples must be finite")
    return DgField.from_quad_values(disc, vals)


def element_mean(field: DgField, element: int) -> np.ndarray:
    """L2 average of the field over one element."""
    if not 0 <= element < field.disc.n_elements:
        raise IndexError(f"element index {element} out of range")
    m = field.coeffs[element, :, 0]
    return float(m[0]) if field.n_components == 1 else m.copy()


def single_valued_trace(field: DgField) -> np.ndarray:
    """Arithmetic-mean (centered) trace on all mesh nodes, (n_nodes, nc).

    Interior nodes average the two one-sided element traces; boundary nodes
    take the one-sided interior value.
    """
    tl = field.trace_left()
    tr = field.trace_right()
    n_nodes = field.disc.mesh.n_nodes
    out = np.empty((n_nodes, field.n_components))
    out[1:-1] = 0.5 * (tr[:-1] + tl[1:])
    out[0] = tl[0]
    out[-1] = tr[-1]
    return out


def _weak_derivative_raw(disc: Discretization, coeffs: np.ndarray,
                         active: np.ndarray | None = None) -> np.ndarray:
    """weak_derivative on a raw scalar coefficient array (ne, nm).

    With an element `active` mask, nodes bordering an inactive element take
    the one-sided active value, like a domain boundary: values inside the
    inactive region never leak across the front.
    """
    vals = coeffs @ disc.P
    tr = coeffs @ disc.at_right
    tl = coeffs @ disc.at_left
    uhat = np.empty(disc.n_elements + 1)
    uhat[1:-1] = 0.5 * (tr[:-1] + tl[1:])
    uhat[0] = tl[0]
    uhat[-1] = tr[-1]
    if active is not None:
        la = active[:-1]
        ra = active[1:]
        uhat[1:-1] = np.where(la & ~ra, tr[:-1], uhat[1:-1])
        uhat[1:-1] = np.where(ra & ~la, tl[1:], uhat[1:-1])
    edge = (uhat[1:, None] * disc.at_right[None, :]
            - uhat[:-1, None] * disc.at_left[None, :])
    return disc.inv_mass * (edge - vals @ disc.dPw_T)


def weak_derivative(field: DgField) -> DgField:
    """DG spatial derivative with centered (arithmetic mean) interface values.

    Element-wise integration by parts against the basis; interface values are
    the average of the one-sided traces, one-sided at the domain boundary.
    Exact for globally continuous piecewise polynomials of basis degree.
    """
    disc = field.disc
    uhat = single_valued_trace(field)                  # (n_nodes, nc)
    vol = field.values_at_quad() @ disc.dPw_T
    edge = (uhat[1:, :, None] * disc.at_right[None, None, :]
            - uhat[:-1, :, None] * disc.at_left[None, None, :])
    coeffs = disc.inv_mass[:, None, :] * (edge - vol)
    return DgField._make(coeffs, disc)


def integrate(field: DgField) -> np.ndarray:
    """Domain integral of each component (sum of element means times lengths)."""
    return (field.coeffs[:, :, 0] * field.disc.dx[:, None]).sum(axis=0)
