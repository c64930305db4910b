"""Momentum densities, virial balances, and norm trackers.

The two momenta of a compatible state are

    M1 = Re(psi1 conj(psi2)) / (A2 + m)      (radial)
    M0 = Re(psi0 conj(psi2)) / (A2 + m)      (temporal)

with the auxiliary field psi0 = i (d/dr psi1 + psi1/r + i A2 psi2/r^2).
M0 also has an expanded form

    M0 = Lap ln(A2+m) + (dA2/dr / (A2+m))^2
         - A2/(A2+m) (|psi1|^2 + |psi2|^2/r^2),

and the discrepancy between the two discretizations is a joint test of
psi0, A2 and the difference operators.  The positive density

    G = -(dA2/dr / (A2+m))^2 + A2/(A2+m) (|psi1|^2 + |psi2|^2/r^2)

is evaluated in its conservation-law form (A2 = sqrt(m^2 + |psi2|^2),
dA2/dr = -Im(psi1 conj(psi2))), for which the pointwise lower bound

    G >= m/(A2+m) |psi1|^2 + A2/(A2+m) |psi2/r|^2

is exact algebra, so the positivity margin is clean of discretization
noise.

Integral measures: the virial identities mix the r dr and plain dr
measures; each quadrature below is labeled.  Weight profiles a(r) use a
C^2 quintic transition between 1 on [0, R] and 0 on [2R, inf).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, UnsupportedTargetError
from .fields import RadialField, RadialGrid, radial_derivative
from .gauge import GaugeState, mass

__all__ = [
    "VirialWeights",
    "MomentumSlice",
    "psi0",
    "momenta",
    "g_positivity_margin",
    "vir1_residual",
    "vir3_series",
    "vir3_balance",
    "he_norm",
    "strichartz_accumulate",
]


def _phi(x: np.ndarray):
    """C^2 cutoff: 1 on [0,1], 0 on [2,inf), unique quintic between."""
    x = np.asarray(x, dtype=float)
    s = np.clip(x - 1.0, 0.0, 1.0)
    val = 1.0 - s**3 * (10.0 - 15.0 * s + 6.0 * s**2)
    dval = -30.0 * s**2 * (1.0 - s) ** 2
    d2val = -60.0 * s * (1.0 - s) * (1.0 - 2.0 * s)
    return val, dval, d2val


@dataclass(frozen=True)
class VirialWeights:
    """Weight profile a(r) for the virial integrals.

    kind = "cutoff"       : a = phi(r/R)
    kind = "localized_r2" : a = r^2 phi(r/R)
    """

    kind: str
    R: float

    def __post_init__(self):
        if self.kind not in ("cutoff", "localized_r2"):
            raise DomainError(f"unknown weight kind {self.kind!r}")
        if not (np.isfinite(self.R) and self.R > 0):
            raise DomainError(f"weight radius must be positive, got {self.R}")

    def profiles(self, r: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(a, da/dr, d2a/dr2) sampled at radii r (analytic derivatives)."""
        p, dp, d2p = _phi(np.asarray(r, dtype=float) / self.R)
        if self.kind == "cutoff":
            return p, dp / self.R, d2p / self.R**2
        r = np.asarray(r, dtype=float)
        a = r**2 * p
        da = 2.0 * r * p + r**2 * dp / self.R
        d2a = 2.0 * p + 4.0 * r * dp / self.R + r**2 * d2p / self.R**2
        return a, da, d2a

    def a0_value(self) -> float:
        """a(0): nonzero only for the plain cutoff."""
        return 1.0 if self.kind == "cutoff" else 0.0

    def bound_report(self, grid: RadialGrid) -> dict:
        """sup over the grid of a, (r d/dr) a, (r d/dr)^2 a, da/r, d2a."""
        r = grid.nodes
        a, da, d2a = self.profiles(r)
        return {
            "a": float(np.max(np.abs(a))),
            "r_da": float(np.max(np.abs(r * da))),
            "r_dr_sq": float(np.max(np.abs(r * da + r**2 * d2a))),
            "da_over_r": float(np.max(np.abs(da / r))),
            "d2a": float(np.max(np.abs(d2a))),
        }


def psi0(state: GaugeState) -> RadialField:
    """Auxiliary temporal field i (d/dr psi1 + psi1/r + i A2 psi2/r^2)."""
    r = state.grid.nodes
    p1 = state.psi1.values
    p2r = state.psi2_over_r.values
    a2 = np.real(state.a2.values)
    val = 1j * (radial_derivative(p1, state.grid) + p1 / r + 1j * a2 * p2r / r)
    return RadialField(state.grid, state.m, val)


@dataclass
class MomentumSlice:
    """One time slice of the momentum densities."""

    grid: RadialGrid
    m0: np.ndarray = field(repr=False)
    m1: np.ndarray = field(repr=False)
    g: np.ndarray = field(repr=False)
    a0: np.ndarray = field(repr=False)
    m0_expanded: np.ndarray = field(repr=False)
    m0_discrepancy: float = 0.0


def momenta(state: GaugeState) -> MomentumSlice:
    """Momentum densities of a compatible state (hyperbolic target only).

    M0 is computed both from psi0 (definitional) and in expanded form;
    `m0_discrepancy` is their relative L2(r dr) distance.  G uses the
    conservation-law closure so its positivity is exact pointwise.
    """
    if state.mu != -1:
        raise UnsupportedTargetError("momenta are defined for mu = -1 only "
                                     "(the denominator A2 + m may vanish otherwise)")
    grid, m = state.grid, state.m
    r, w = grid.nodes, grid.weights
    p1 = state.psi1.values
    p2r = state.psi2_over_r.values
    psi2 = r * p2r
    a2 = np.real(state.a2.values)
    den = a2 + m

    m1 = np.real(p1 * np.conjugate(psi2)) / den
    m0 = np.real(psi0(state).values * np.conjugate(psi2)) / den

    logden = np.log(den)
    dlog = radial_derivative(logden, grid)
    lap_log = radial_derivative(dlog, grid) + dlog / r
    da2 = radial_derivative(a2, grid)
    amp = np.abs(p1) ** 2 + np.abs(p2r) ** 2
    m0_exp = lap_log + (da2 / den) ** 2 - (a2 / den) * amp

    scale = np.sqrt(np.sum(w * m0**2))
    disc = np.sqrt(np.sum(w * (m0 - m0_exp) ** 2)) / scale if scale > 0 else 0.0

    a2c = np.sqrt(m**2 + np.abs(psi2) ** 2)
    denc = a2c + m
    da2c = -np.imag(p1 * np.conjugate(psi2))
    g = -((da2c / denc) ** 2) + (a2c / denc) * amp

    return MomentumSlice(grid=grid, m0=m0, m1=m1, g=g,
                         a0=np.real(state.a0.values), m0_expanded=m0_exp,
                         m0_discrepancy=float(disc))


def g_positivity_margin(state: GaugeState, slice_: MomentumSlice | None = None) -> float:
    """min over the grid of G - m/(m + sup A2) |psi1|^2 - 1/2 |psi2/r|^2.

    Nonnegative up to round-off: with the conservation closure the bound
    holds pointwise as exact algebra for any A2 >= m.
    """
    sl = momenta(state) if slice_ is None else slice_
    m = state.m
    p1 = state.psi1.values
    p2r = state.psi2_over_r.values
    a2c = np.sqrt(m**2 + np.abs(state.grid.nodes * p2r) ** 2)
    coeff = m / (m + float(np.max(a2c)))
    return float(np.min(sl.g - coeff * np.abs(p1) ** 2 - 0.5 * np.abs(p2r) ** 2))


def _require_records(traj, least: int):
    if len(traj.states) < least or len(traj.states) != len(traj.times):
        raise DomainError(f"need at least {least} recorded states with times, "
                          f"got {len(traj.states)}")


def vir1_residual(traj, weights: VirialWeights) -> np.ndarray:
    """Defect of d/dt int a (A2 - m) r dr = int (r da/dr) Re(psi1 conj(psi2)/r) r dr.

    Centered time differences on the recorded snapshots; one value per
    interior record.  Both integrals use the r dr quadrature.
    """
    _require_records(traj, 3)
    grid = traj.states[0].grid
    a, da, _ = weights.profiles(grid.nodes)
    w, r = grid.weights, grid.nodes
    m = traj.states[0].m
    times = np.asarray(traj.times)
    lhs = np.array([np.sum(w * a * (np.real(s.a2.values) - m)) for s in traj.states])
    rhs = np.array([np.sum(w * (r * da) * np.real(s.psi1.values * np.conjugate(s.psi2_over_r.values)))
                    for s in traj.states])
    dldt = (lhs[2:] - lhs[:-2]) / (times[2:] - times[:-2])
    return dldt - rhs[1:-1]


def vir3_series(traj, weights: VirialWeights):
    """Cumulative terms of the integrated momentum balance.

    Returns (lhs, t1, t2, t3) arrays over the recorded times, where

        lhs_j = int a M1 dr |_{t_0}^{t_j}                  (plain dr)
        t1_j  = int_0^{t_j} int d/dr(da/r) d/dr ln(A2+m) r dr dt
        t2_j  = int_0^{t_j} int (da/r) G r dr dt           (>= 0 for the
                r^2-type weight inside [0, R])
        t3_j  = int_0^{t_j} [ int da A0 dr + a(0) A0(0) ] dt

    and the balance lhs = t1 + t2 + t3 holds up to discretization error.
    The a(0) A0(0) flux term is the boundary contribution at the origin;
    it vanishes identically for the localized_r2 weight.
    """
    _require_records(traj, 2)
    grid = traj.states[0].grid
    r, w, h = grid.nodes, grid.weights, grid.h
    m = traj.states[0].m
    a, da, d2a = weights.profiles(r)
    dover = d2a / r - da / r**2           # d/dr of (da/dr)/r
    a0bnd = weights.a0_value()
    times = np.asarray(traj.times)

    lhs = np.empty(len(traj.states))
    i1 = np.empty(len(traj.states))
    i2 = np.empty(len(traj.states))
    i3 = np.empty(len(traj.states))
    for j, s in enumerate(traj.states):
        sl = momenta(s)
        lhs[j] = np.trapezoid(a * sl.m1, dx=h)                       # dr measure
        dlog = radial_derivative(np.log(np.real(s.a2.values) + m), grid)
        i1[j] = np.sum(w * dover * dlog)                             # r dr
        i2[j] = np.sum(w * (da / r) * sl.g)                          # r dr
        i3[j] = np.trapezoid(da * sl.a0, dx=h) + a0bnd * sl.a0[0]    # dr + origin flux
    cum = lambda y: np.concatenate(([0.0], np.cumsum(0.5 * (y[1:] + y[:-1]) * np.diff(times))))
    return lhs - lhs[0], cum(i1), cum(i2), cum(i3)


def vir3_balance(traj, weights: VirialWeights) -> tuple[float, tuple[float, float, float]]:
    """Endpoint balance of the integrated momentum identity.

    Returns (lhs, (t1, t2, t3)) over the full recorded window; the
    residual is lhs - (t1 + t2 + t3).
    """
    _require_records(traj, 3)
    lhs, t1, t2, t3 = vir3_series(traj, weights)
    return float(lhs[-1]), (float(t1[-1]), float(t2[-1]), float(t3[-1]))


def he_norm(f: RadialField, m_weight: int) -> float:
    """Equivariant first-order norm: (|df/dr|^2 + m^2 |f/r|^2 against r dr)^(1/2)."""
    grid = f.grid
    df = radial_derivative(f.values, grid)
    val = np.sum(grid.weights * np.abs(df) ** 2)
    val = val + m_weight**2 * np.sum(grid.weights * np.abs(f.values / grid.nodes) ** 2)
    return float(np.sqrt(val))


def strichartz_accumulate(traj, component: str = "minus") -> float:
    """Time-trapezoid of the recorded quartic densities int |psi|^4 r dr."""
    _require_records(traj, 2)
    key = {"minus": "s4_minus", "plus": "s4_plus"}.get(component)
    if key is None:
        raise DomainError(f"component must be 'minus' or 'plus', got {component!r}")
    times = np.asarray([rec.t for rec in traj.records])
    dens = np.asarray([getattr(rec, key) for rec in traj.records])
    return float(np.trapezoid(dens, times))
