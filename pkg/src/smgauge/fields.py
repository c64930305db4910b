"""Radial grids and sampled equivariant field profiles.

Every profile in this package is a function of the radius r sampled on a
cell-centered uniform grid

    r_i = (i + 1/2) h,   i = 0 .. n-1,   h = r_max / n,

and all integrals are taken against the two-dimensional radial measure
r dr, discretized by the weights w_i = r_i * h.  Cell centering keeps
every sample strictly away from r = 0, so the 1/r and 1/r^2 factors that
pervade the equivariant calculus stay finite without special-casing the
origin.

The module also provides the cumulative quadratures used by the weighted
antiderivative operators:

* ``cumint_power_rdr`` integrates f(s) s^m ds from 0 to each node,
* ``tail_int_over_s``  integrates f(s)/s ds from each node to infinity
  (zero tail beyond the grid).

Both rules treat the integrand samples as cell values (midpoint rule,
second order) and are built so that the exact discrete Fubini identity

    sum_i w_i * tail_int_over_s(f)_i = 1/2 * sum_j w_j f_j

holds to round-off.  That identity is what makes the temporal gauge
potential integrate to zero exactly on the grid; see
:func:`smgauge.gauge.compute_a0`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, GridMismatchError

__all__ = [
    "RadialGrid",
    "RadialField",
    "cumint_power_rdr",
    "tail_int_over_s",
    "radial_derivative",
]


class RadialGrid:
    """Cell-centered uniform grid on (0, r_max] with r dr weights.

    Parameters
    ----------
    r_max : float
        Truncation radius.  The outermost cell face sits exactly at r_max.
    n : int
        Number of cells (= sample points).

    Attributes
    ----------
    nodes : ndarray
        Cell centers r_i = (i + 1/2) h.
    weights : ndarray
        Quadrature weights w_i = r_i h for integrals against r dr.
    faces_low : ndarray
        Lower cell faces i*h; faces_low[0] is exactly 0.
    """

    __slots__ = ("n", "h", "r_max", "nodes", "weights", "faces_low")

    def __init__(self, r_max: float, n: int):
        if not (np.isfinite(r_max) and r_max > 0):
            raise DomainError(f"r_max must be positive and finite, got {r_max}")
        if n < 4:
            raise DomainError(f"grid needs at least 4 cells, got {n}")
        self.n = int(n)
        self.r_max = float(r_max)
        self.h = self.r_max / self.n
        idx = np.arange(self.n, dtype=float)
        self.nodes = (idx + 0.5) * self.h
        self.weights = self.nodes * self.h
        self.faces_low = idx * self.h
        for a in (self.nodes, self.weights, self.faces_low):
            a.flags.writeable = False

    def integrate(self, values: np.ndarray) -> float | complex:
        """Integral of a sampled profile against r dr."""
        return np.sum(self.weights * values)

    def same_as(self, other: "RadialGrid") -> bool:
        return self.n == other.n and self.r_max == other.r_max

    def __eq__(self, other):
        return isinstance(other, RadialGrid) and self.same_as(other)

    def __hash__(self):
        return hash((self.n, self.r_max))

    def __repr__(self):
        return f"RadialGrid(r_max={self.r_max}, n={self.n})"


@dataclass(frozen=True)
class RadialField:
    """Samples of one equivariant field component.

    ``order`` is the angular order k of the two-dimensional extension
    e^{i k theta} f(r); it decides which radial operator H_k the field
    pairs with and how it must vanish at the origin.
    """

    grid: RadialGrid
    order: int
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.shape != (self.grid.n,):
            raise GridMismatchError(
                f"field has {v.shape} samples for a grid of {self.grid.n} nodes")
        if v.dtype not in (np.float64, np.complex128):
            v = v.astype(np.complex128)
        v = v.copy()
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    def with_values(self, values: np.ndarray, order: int | None = None) -> "RadialField":
        """A new field on the same grid with replaced samples."""
        return RadialField(self.grid, self.order if order is None else order, values)

    def require_same_grid(self, other: "RadialField") -> None:
        if not self.grid.same_as(other.grid):
            raise GridMismatchError(f"grids differ: {self.grid} vs {other.grid}")

    def __add__(self, other: "RadialField") -> "RadialField":
        self.require_same_grid(other)
        return RadialField(self.grid, self.order, self.values + other.values)

    def __sub__(self, other: "RadialField") -> "RadialField":
        self.require_same_grid(other)
        return RadialField(self.grid, self.order, self.values - other.values)

    def __mul__(self, c) -> "RadialField":
        return RadialField(self.grid, self.order, self.values * c)

    __rmul__ = __mul__


def radial_derivative(values: np.ndarray, grid: RadialGrid) -> np.ndarray:
    """Second-order d/dr: centered in the interior, one-sided at the ends."""
    return np.gradient(values, grid.h, edge_order=2)


def cumint_power_rdr(values: np.ndarray, grid: RadialGrid, m: int = 1) -> np.ndarray:
    """Cumulative integral of f(s) s^m ds from 0 to each node.

    Treats f as constant on each cell (value at the cell center) and
    integrates the s^m weight exactly over full cells below node i plus
    the lower half of cell i.  Second-order accurate; contributions from
    below the first face (s < 0) are identically zero because the first
    face sits at s = 0.
    """
    if m < 0:
        raise DomainError("power weight must have m >= 0")
    r = grid.nodes
    lo = grid.faces_low
    hi = lo + grid.h
    p = m + 1
    cell = (hi**p - lo**p) / p          # integral of s^m over cell j
    half = (r**p - lo**p) / p           # ... over the lower half of cell i
    full_below = np.concatenate(([0.0], np.cumsum(values[:-1] * cell[:-1])))
    return full_below + values * half


def tail_int_over_s(values: np.ndarray, grid: RadialGrid) -> np.ndarray:
    """Integral of f(s)/s ds from each node to infinity (zero tail).

    Implemented as the r dr quadrature of (f/s^2) * s ds so that the
    discrete Fubini identity

        sum_i w_i T_i = 1/2 sum_j w_j f_j

    holds exactly: full cells above node i carry their r dr weight, and
    the own-cell contribution uses the lower half-cell area
    (r_i^2 - faces_low_i^2)/2.  Second-order accurate.
    """
    r = grid.nodes
    q = values / r**2
    qw = q * grid.weights
    above = np.concatenate((np.cumsum(qw[::-1])[::-1][1:], [0.0]))
    half = (r**2 - grid.faces_low**2) / 2.0
    return above + q * half
