"""Field algebra of the Coulomb gauge.

A state of the gauged flow is the pair (psi_plus, psi_minus) of
diagonalizing variables; everything else is derived from it:

    psi1       = (psi_plus + psi_minus) / 2
    psi2 / r   = (psi_plus - psi_minus) / (2i)
    A2(r)      = -mu*m + mu * int_0^r (|psi_plus|^2 - |psi_minus|^2)/4  s ds
    A0         = -(mu/2) Re(conj(psi_plus) psi_minus)
                 - mu * [r d/dr]^{-1} Re(conj(psi_plus) psi_minus)

with [r d/dr]^{-1} f (r) = -int_r^inf f(s)/s ds.  The temporal potential
A0 integrates to zero against r dr; the discrete quadratures in
:mod:`smgauge.fields` are built so this holds to round-off on the grid,
not merely to discretization order.

psi2 itself is never stored: psi2/r is the well-behaved variable, and
r * (psi2/r) is formed where the bare psi2 is needed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import GridMismatchError
from .fields import RadialField, RadialGrid, cumint_power_rdr, radial_derivative, tail_int_over_s

__all__ = [
    "GaugeState",
    "DiagnosticsRecord",
    "mass",
    "derived_pair",
    "r_dr_inverse",
    "compute_a2",
    "compute_a0",
    "compatibility_residual",
    "conservation_residual",
    "conservation_residual_profiles",
    "lp_norm",
]


def mass(f: RadialField) -> float:
    """M(f) = integral of |f|^2 r dr."""
    return float(np.sum(f.grid.weights * np.abs(f.values) ** 2))


def lp_norm(f: RadialField, p: float) -> float:
    """L^p(r dr) norm of a sampled field."""
    return float(np.sum(f.grid.weights * np.abs(f.values) ** p) ** (1.0 / p))


def r_dr_inverse(f: RadialField) -> RadialField:
    """[r d/dr]^{-1} f (r) = -int_r^inf f(s)/s ds, zero tail beyond the grid.

    Bounded on L^2(r dr) with norm 1 in the continuum; the discrete
    operator norm is pinned by a regression test.
    """
    return f.with_values(-tail_int_over_s(f.values, f.grid))


@dataclass
class GaugeState:
    """The gauge pair (psi_plus, psi_minus) at one time.

    psi_minus has angular order m-1 and psi_plus order m+1 (hyperbolic
    target layout).  Derived profiles A2, A0, psi1, psi2/r are computed
    on first access and cached; states are treated as immutable
    snapshots, so the cache is written at most once per profile (safe
    concurrent reads after first materialization).
    """

    t: float
    m: int
    psi_plus: RadialField
    psi_minus: RadialField
    mu: int = -1
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.m < 1:
            raise GridMismatchError(f"equivariance index must be >= 1, got {self.m}")
        if self.mu not in (-1, 1):
            raise GridMismatchError(f"mu must be +-1, got {self.mu}")
        self.psi_plus.require_same_grid(self.psi_minus)
        if self.psi_minus.order != self.m - 1 or self.psi_plus.order != self.m + 1:
            raise GridMismatchError(
                f"component orders ({self.psi_plus.order}, {self.psi_minus.order}) "
                f"do not match (m+1, m-1) = ({self.m + 1}, {self.m - 1})")

    @property
    def grid(self) -> RadialGrid:
        return self.psi_minus.grid

    def _derived(self, key, fn):
        if key not in self._cache:
            self._cache[key] = fn()
        return self._cache[key]

    @property
    def psi1(self) -> RadialField:
        return self._derived("psi1", lambda: RadialField(
            self.grid, self.m, (self.psi_plus.values + self.psi_minus.values) / 2.0))

    @property
    def psi2_over_r(self) -> RadialField:
        return self._derived("psi2_over_r", lambda: RadialField(
            self.grid, self.m, (self.psi_plus.values - self.psi_minus.values) / 2.0j))

    @property
    def a2(self) -> RadialField:
        return self._derived("a2", lambda: compute_a2(self))

    @property
    def a0(self) -> RadialField:
        return self._derived("a0", lambda: compute_a0(self))

    def psi2_values(self) -> np.ndarray:
        """Samples of the bare psi2 = r * (psi2 / r)."""
        return self.grid.nodes * self.psi2_over_r.values


def derived_pair(state: GaugeState) -> tuple[RadialField, RadialField]:
    """(psi1, psi2/r) recovered from the diagonalizing pair."""
    return state.psi1, state.psi2_over_r


def compute_a2(state: GaugeState) -> RadialField:
    """Angular connection coefficient A2 from the cumulative mass imbalance.

    A2(r) = -mu*m + mu * int_0^r (|psi_plus|^2 - |psi_minus|^2)/4  s ds,
    so that d/dr A2 = mu * Im(psi1 conj(psi2)), which is the curvature
    relation behind the compatibility condition; for mu = -1 this is
    m minus the cumulative imbalance integral.  Real-valued.  For a map
    on the hyperbolic target A2 = m * u3 >= m, so the cumulative mass of
    psi_minus dominates that of psi_plus at every radius.
    """
    diff = (np.abs(state.psi_plus.values) ** 2 - np.abs(state.psi_minus.values) ** 2) / 4.0
    integral = cumint_power_rdr(diff, state.grid, m=1)
    values = -state.mu * state.m + state.mu * integral
    return RadialField(state.grid, 0, values)


def compute_a0(state: GaugeState) -> RadialField:
    """Temporal gauge potential A0; integrates to zero against r dr.

    A0 = -(mu/2) g - mu [r d/dr]^{-1} g with g = Re(conj(psi_plus) psi_minus).
    The discrete tail quadrature satisfies the exact Fubini identity, so
    sum_i w_i A0_i vanishes to round-off.
    """
    g = np.real(np.conjugate(state.psi_plus.values) * state.psi_minus.values)
    tail = -tail_int_over_s(g, state.grid)  # [r d/dr]^{-1} g
    return RadialField(state.grid, 0, -0.5 * state.mu * g - state.mu * tail)


def compatibility_residual(state: GaugeState) -> tuple[RadialField, float]:
    """Pointwise defect of d/dr[ r (psi_plus - psi_minus) ] + A2 (psi_plus + psi_minus).

    Vanishes exactly when the pair comes from an actual map.  The
    reported norm is the L2(r dr) norm of residual / r, the variable in
    which the defect propagates under the flow.
    """
    r = state.grid.nodes
    diff = r * (state.psi_plus.values - state.psi_minus.values)
    res = radial_derivative(diff, state.grid) + state.a2.values * (
        state.psi_plus.values + state.psi_minus.values)
    resf = RadialField(state.grid, state.m, res)
    norm = float(np.sqrt(np.sum(state.grid.weights * np.abs(res / r) ** 2)))
    return resf, norm


def conservation_residual_profiles(a2: np.ndarray, psi2: np.ndarray, m: int, mu: int) -> float:
    """sup_r | mu A2^2 + |psi2|^2 - mu m^2 | for given profiles."""
    return float(np.max(np.abs(mu * np.real(a2) ** 2 + np.abs(psi2) ** 2 - mu * m**2)))


def conservation_residual(state: GaugeState) -> float:
    """Pointwise conservation-law defect of the state's own (A2, psi2).

    For states evolved from compatible data this measures scheme drift;
    it is monitored, never re-imposed.
    """
    return conservation_residual_profiles(
        state.a2.values, state.psi2_values(), state.m, state.mu)


@dataclass
class DiagnosticsRecord:
    """One time slice of every monitored quantity."""

    t: float
    mass_plus: float
    mass_minus: float
    energy: float
    compat_l2: float
    cons_sup: float
    a0_mean: float
    s4_plus: float
    s4_minus: float
    strichartz_increment: float = 0.0
    vir1_res: float = 0.0
    vir3_res: float = 0.0

    def finite(self) -> bool:
        return all(np.isfinite(v) for v in (
            self.t, self.mass_plus, self.mass_minus, self.energy, self.compat_l2,
            self.cons_sup, self.a0_mean, self.s4_plus, self.s4_minus,
            self.strichartz_increment, self.vir1_res, self.vir3_res))


def snapshot_diagnostics(state: GaugeState) -> DiagnosticsRecord:
    """Instantaneous diagnostics of a state (no trajectory context)."""
    mp, mm = mass(state.psi_plus), mass(state.psi_minus)
    _, compat = compatibility_residual(state)
    w = state.grid.weights
    return DiagnosticsRecord(
        t=state.t,
        mass_plus=mp,
        mass_minus=mm,
        energy=np.pi * mm,
        compat_l2=compat,
        cons_sup=conservation_residual(state),
        a0_mean=float(np.sum(w * np.real(state.a0.values))),
        s4_plus=float(np.sum(w * np.abs(state.psi_plus.values) ** 4)),
        s4_minus=float(np.sum(w * np.abs(state.psi_minus.values) ** 4)),
    )
