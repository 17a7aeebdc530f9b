"""1D interval meshes: elements, skeleton topology, boundary condition tags.

Elements are the intervals between consecutive nodes.  The mesh skeleton is
the set of interior nodes (shared element endpoints); in 1D every "face" is a
point, and the unit outward normal of an element at its left/right endpoint
is -1/+1.  Meshes are immutable after construction and safe to share between
concurrent simulations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Reflecting:
    """Solid-wall boundary: zero normal momentum."""


@dataclass(frozen=True, eq=False)
class Wavemaker:
    """Prescribed free-surface boundary, periodic or from a sampled series.

    Periodic form: zeta(t) = amplitude * sin(2*pi*t/period), with the
    amplitude ramped linearly over the first `ramp_periods` periods to
    suppress startup transients.  Alternatively `times`/`elevations` give a
    sampled series that is linearly interpolated.
    """

    amplitude: float = 0.0
    period: float = 0.0
    ramp_periods: float = 2.0
    times: np.ndarray | None = None
    elevations: np.ndarray | None = None

    def __post_init__(self):
        if self.times is None:
            if not (self.amplitude > 0.0):
                raise ValueError("periodic wavemaker requires amplitude > 0")
            if not (self.period > 0.0):
                raise ValueError("periodic wavemaker requires period > 0")
        else:
            t = np.asarray(self.times, float)
            z = np.asarray(self.elevations, float)
            if t.ndim != 1 or t.shape != z.shape or t.size < 2:
                raise ValueError("wavemaker series needs matching 1D times/elevations")
            if np.any(np.diff(t) <= 0):
                raise ValueError("wavemaker series times must be strictly increasing")
            object.__setattr__(self, "times", t)
            object.__setattr__(self, "elevations", z)

    def elevation(self, t: float) -> float:
        """Prescribed surface elevation above still water at time t."""
        if self.times is not None:
            return float(np.interp(t, self.times, self.elevations))
        ramp = 1.0
        if self.ramp_periods > 0.0:
            ramp = min(1.0, t / (self.ramp_periods * self.period))
        return self.amplitude * ramp * math.sin(2.0 * math.pi * t / self.period)


BoundaryKind = Reflecting | Wavemaker


@dataclass(frozen=True, eq=False)
class Mesh1D:
    """Ordered interval elements with skeleton topology and boundary tags.

    nodes: strictly increasing x coordinates, shape (n_elements + 1,).
    elements: (left node index, right node index) per element.
    skeleton: interior node indices (each shared by exactly two elements).
    boundary_tags: (left BoundaryKind, right BoundaryKind).
    """

    nodes: np.ndarray
    boundary_tags: tuple[BoundaryKind, BoundaryKind] = (Reflecting(), Reflecting())
    elements: np.ndarray = field(init=False)
    skeleton: np.ndarray = field(init=False)

    def __post_init__(self):
        nodes = np.asarray(self.nodes, float)
        if nodes.ndim != 1 or nodes.size < 2:
            raise ValueError("mesh requires at least two nodes (one element)")
        if not np.all(np.isfinite(nodes)):
            raise ValueError("mesh nodes must be finite")
        if np.any(np.diff(nodes) <= 0):
            raise ValueError("mesh nodes must be strictly increasing")
        object.__setattr__(self, "nodes", nodes)
        n = nodes.size - 1
        elems = np.column_stack([np.arange(n), np.arange(1, n + 1)])
        object.__setattr__(self, "elements", elems)
        object.__setattr__(self, "skeleton", np.arange(1, n))

    @property
    def n_elements(self) -> int:
        return self.nodes.size - 1

    @property
    def n_nodes(self) -> int:
        return self.nodes.size

    @property
    def dx(self) -> np.ndarray:
        """Element lengths (the element diameters in 1D)."""
        return np.diff(self.nodes)

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.nodes[:-1] + self.nodes[1:])

    @property
    def x_min(self) -> float:
        return float(self.nodes[0])

    @property
    def x_max(self) -> float:
        return float(self.nodes[-1])

    def element_containing(self, x: float) -> int:
        """Element index whose interval contains x; ties at an interior node
        resolve to the left element."""
        if x < self.nodes[0] or x > self.nodes[-1]:
            raise ValueError(f"x={x} outside domain [{self.nodes[0]}, {self.nodes[-1]}]")
        e = int(np.searchsorted(self.nodes, x, side="left")) - 1
        return min(max(e, 0), self.n_elements - 1)


def build_uniform_mesh(x_min: float, x_max: float, n_elements: int,
                       tags: tuple[BoundaryKind, BoundaryKind] = (Reflecting(), Reflecting()),
                       ) -> Mesh1D:
    """Uniform mesh of n_elements intervals on [x_min, x_max]."""
    if not (math.isfinite(x_min) and math.isfinite(x_max)):
        raise ValueError("mesh bounds must be finite")
    if not x_min < x_max:
        raise ValueError("x_min must be < x_max")
    if n_elements < 1:
        raise ValueError("n_elements must be >= 1")
    nodes = np.linspace(x_min, x_max, n_elements + 1)
    return Mesh1D(nodes, tags)


def neighbors(mesh: Mesh1D, node: int) -> tuple[int | None, int | None]:
    """Elements adjacent to a node: (element to the left, element to the right)."""
    if not 0 <= node < mesh.n_nodes:
        raise IndexError(f"node index {node} out of range")
    left = node - 1 if node > 0 else None
    right = node if node < mesh.n_elements else None
    return left, right
