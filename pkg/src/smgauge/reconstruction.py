"""Recovery of the geometric map from a single gauge component.

Pipeline:

1. :func:`solve_comp1` recovers (A2, psi2) from psi_minus alone by
   Picard iteration on the integral fixed point

       psi2 = i m r^{-m} I_m[psi_minus]
              + r^{-m} I_m[ i (A2 - m) psi_minus - (A2 - m) psi2 / r ],
       A2   = sqrt(m^2 + |psi2|^2),

   where I_m[f](r) = int_0^r f(s) s^m ds.  The r^{-m} I_m kernel encodes
   the correct vanishing rate at the origin, so no stiff ODE stepping is
   needed there.  Only the hyperbolic target (mu = -1) admits this
   square-root closure; the sphere branch is rejected.

2. :func:`complete_pair` rebuilds the partner component,
   psi_plus = psi_minus + 2i psi2/r, giving a compatible state.

3. :func:`reconstruct_frame` integrates the frame transport

       du/dr = Re(psi1) v + Im(psi1) w
       dv/dr = -mu Re(psi1) u
       dw/dr = -mu Im(psi1) u

   inward from (v, w, u)(r_max) = (i_hat, j_hat, k_hat) with RK4 and a
   metric Gram-Schmidt re-projection each step; the transport matrix is
   only L2 along the ray, so drift control has to be geometric.

4. :func:`derive_gauge_from_map` runs the opposite direction: given the
   map profile it solves the Coulomb-gauge frame ODE and reads the
   gauge fields off the frame.

All vectors carry the Minkowski pairing diag(1, 1, mu); for mu = -1 the
map profile u lives on the upper hyperboloid u . u = -1, u3 >= 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (ConvergenceError, DomainError, FrameInstabilityError,
                     GridMismatchError, InvalidMapError, UnsupportedTargetError)
from .fields import RadialField, RadialGrid, cumint_power_rdr, radial_derivative
from .gauge import GaugeState

__all__ = [
    "Comp1Solution",
    "FrameField",
    "dot_mu",
    "cross_mu",
    "solve_comp1",
    "complete_pair",
    "reconstruct_frame",
    "derive_gauge_from_map",
    "map_energy",
]

I_HAT = np.array([1.0, 0.0, 0.0])
J_HAT = np.array([0.0, 1.0, 0.0])
K_HAT = np.array([0.0, 0.0, 1.0])


def dot_mu(a: np.ndarray, b: np.ndarray, mu: int) -> np.ndarray:
    """Minkowski pairing a1 b1 + a2 b2 + mu a3 b3 (last axis)."""
    return a[..., 0] * b[..., 0] + a[..., 1] * b[..., 1] + mu * a[..., 2] * b[..., 2]


def cross_mu(a: np.ndarray, b: np.ndarray, mu: int) -> np.ndarray:
    """Twisted cross product eta_mu (a x b) (last axis)."""
    out = np.cross(a, b)
    out[..., 2] *= mu
    return out


@dataclass(frozen=True)
class Comp1Solution:
    """(A2, psi2) profiles recovered from psi_minus, with the
    conservation law A2 = sqrt(m^2 + |psi2|^2) enforced pointwise."""

    grid: RadialGrid
    m: int
    mu: int
    a2: np.ndarray
    psi2: np.ndarray
    psi2_over_r: np.ndarray
    iterations: int
    residual: float


def solve_comp1(psi_minus: RadialField, m: int, mu: int = -1,
                tol: float = 1e-12, max_iter: int = 200) -> Comp1Solution:
    """Recover the gauge profiles (A2, psi2) from psi_minus alone.

    Iterates the integral fixed point to sup-change below `tol`.

    Raises
    ------
    UnsupportedTargetError
        If mu is +1 (no square-root closure on the sphere branch).
    ConvergenceError
        If the sup-change has not dropped below `tol` after `max_iter`
        sweeps; carries the last residual.
    """
    if mu != -1:
        raise UnsupportedTargetError("solve_comp1 supports only the hyperbolic target mu = -1")
    if m < 1:
        raise DomainError(f"equivariance index must be >= 1, got {m}")
    grid = psi_minus.grid
    r = grid.nodes
    pm = psi_minus.values.astype(np.complex128)
    r_pow_m = r**m

    lead = 1j * m * cumint_power_rdr(pm, grid, m=m) / r_pow_m
    psi2 = np.zeros_like(pm)
    a2 = np.full(grid.n, float(m))
    change = np.inf
    for it in range(1, max_iter + 1):
        integrand = 1j * (a2 - m) * pm - (a2 - m) * (psi2 / r)
        new_psi2 = lead + cumint_power_rdr(integrand, grid, m=m) / r_pow_m
        change = float(np.max(np.abs(new_psi2 - psi2)))
        psi2 = new_psi2
        a2 = np.sqrt(m**2 + np.abs(psi2) ** 2)
        if change < tol:
            break
    else:
        raise ConvergenceError("comp1 fixed point did not converge", change, max_iter)
    return Comp1Solution(grid=grid, m=m, mu=mu, a2=a2, psi2=psi2,
                         psi2_over_r=psi2 / r, iterations=it, residual=change)


def complete_pair(psi_minus: RadialField, sol: Comp1Solution) -> GaugeState:
    """Compatible state with psi_plus = psi_minus + 2i psi2/r.

    The state's A2 cache is seeded with the solver's
    conservation-enforced profile, which is exact for the pair by
    construction; states assembled from raw pairs recompute A2 from the
    cumulative integral instead.
    """
    if not psi_minus.grid.same_as(sol.grid):
        raise GridMismatchError("solution was computed on a different grid")
    plus = RadialField(sol.grid, sol.m + 1, psi_minus.values + 2j * sol.psi2_over_r)
    minus = RadialField(sol.grid, sol.m - 1, psi_minus.values)
    state = GaugeState(t=0.0, m=sol.m, psi_plus=plus, psi_minus=minus, mu=sol.mu)
    state._cache["a2"] = RadialField(sol.grid, 0, sol.a2)
    return state


@dataclass(frozen=True)
class FrameField:
    """Discrete profiles of the moving frame (u, v, w) along the ray.

    u is the map profile (on the hyperboloid for mu = -1); (v, w) span
    its tangent plane; all Minkowski-orthonormality relations hold
    nodewise to the reconstruction tolerance.
    """

    grid: RadialGrid
    mu: int
    u: np.ndarray
    v: np.ndarray
    w: np.ndarray

    def orthonormality_defect(self) -> float:
        """Max nodewise deviation from the six Gram relations and w = u x_mu v."""
        mu = self.mu
        checks = [
            dot_mu(self.u, self.u, mu) - mu,
            dot_mu(self.v, self.v, mu) - 1.0,
            dot_mu(self.w, self.w, mu) - 1.0,
            dot_mu(self.u, self.v, mu),
            dot_mu(self.u, self.w, mu),
            dot_mu(self.v, self.w, mu),
        ]
        err = max(float(np.max(np.abs(c))) for c in checks)
        werr = float(np.max(np.abs(self.w - cross_mu(self.u, self.v, mu))))
        return max(err, werr)


def _renormalize(u, v, mu):
    """Metric Gram-Schmidt: unit-timelike u, tangent unit v, w = u x_mu v."""
    u = u / np.sqrt(abs(dot_mu(u, u, mu)))
    if mu == -1 and u[2] < 0:
        u = -u
    v = v - mu * dot_mu(v, u, mu) * u
    v = v / np.sqrt(dot_mu(v, v, mu))
    return u, v


def reconstruct_frame(psi_minus: RadialField, sol: Comp1Solution,
                      drift_tol: float = 1e-3) -> FrameField:
    """Integrate the frame transport inward from the flat frame at r_max.

    RK4 with coefficients psi1 = psi_minus + i psi2/r averaged onto step
    midpoints, re-orthonormalizing after every step.  The returned frame
    satisfies m*u3 = A2 and -m(w3 - i v3) = psi2 up to discretization
    error.

    Raises
    ------
    FrameInstabilityError
        If the pre-projection orthonormality drift of a single step
        exceeds `drift_tol`; a finer grid is the remedy.
    """
    if sol.mu != -1:
        raise UnsupportedTargetError("frame reconstruction supports only mu = -1")
    if not psi_minus.grid.same_as(sol.grid):
        raise GridMismatchError("solution was computed on a different grid")
    grid, mu = sol.grid, sol.mu
    n, h = grid.n, grid.h
    psi1 = psi_minus.values + 1j * sol.psi2_over_r

    # coefficient samples at nodes and at faces (averaged), faces[i] = i*h
    psi1_faces = np.empty(n + 1, dtype=complex)
    psi1_faces[1:-1] = 0.5 * (psi1[:-1] + psi1[1:])
    psi1_faces[0] = psi1[0]
    psi1_faces[-1] = psi1[-1]

    def rhs(p, frame):
        v, w, u = frame
        a, b = p.real, p.imag
        return np.array([-mu * a * u, -mu * b * u, a * v + b * w])

    def rk4(frame, p0, pm_, p1, step):
        k1 = rhs(p0, frame)
        k2 = rhs(pm_, frame + 0.5 * step * k1)
        k3 = rhs(pm_, frame + 0.5 * step * k2)
        k4 = rhs(p1, frame + step * k3)
        return frame + (step / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)

    u_out = np.empty((n, 3))
    v_out = np.empty((n, 3))
    w_out = np.empty((n, 3))
    frame = np.array([I_HAT, J_HAT, K_HAT])  # (v, w, u) at r_max

    def project(frame):
        v, w, u = frame
        gram = max(abs(dot_mu(u, u, mu) - mu), abs(dot_mu(v, v, mu) - 1.0),
                   abs(dot_mu(u, v, mu)))
        if gram > drift_tol:
            raise FrameInstabilityError(
                f"orthonormality drift {gram:.2e} exceeds {drift_tol:.0e}; refine the grid")
        u, v = _renormalize(u, v, mu)
        return np.array([v, cross_mu(u, v, mu), u])

    # half step r_max -> r_{n-1}, then full steps node to node
    frame = rk4(frame, psi1_faces[n], psi1_faces[n], psi1[n - 1], -h / 2.0)
    frame = project(frame)
    v_out[n - 1], w_out[n - 1], u_out[n - 1] = frame
    for i in range(n - 2, -1, -1):
        frame = rk4(frame, psi1[i + 1], psi1_faces[i + 1], psi1[i], -h)
        frame = project(frame)
        v_out[i], w_out[i], u_out[i] = frame
    return FrameField(grid=grid, mu=mu, u=u_out, v=v_out, w=w_out)


def map_energy(frame: FrameField, m: int) -> float:
    """Energy of the equivariant map with profile u:

    E = pi * int ( |du/dr|^2_mu + (m^2/r^2)(u1^2 + u2^2) ) r dr.

    Nonnegative for mu = -1: on the hyperboloid the Minkowski gradient
    density rewrites as a sum of squares.
    """
    grid = frame.grid
    du = np.gradient(frame.u, grid.h, axis=0, edge_order=2)
    dens = du[:, 0] ** 2 + du[:, 1] ** 2 + frame.mu * du[:, 2] ** 2
    dens = dens + (m**2 / grid.nodes**2) * (frame.u[:, 0] ** 2 + frame.u[:, 1] ** 2)
    return float(np.pi * np.sum(grid.weights * dens))


def derive_gauge_from_map(u_profile: np.ndarray, m: int, grid: RadialGrid,
                          mu: int = -1) -> tuple[GaugeState, FrameField]:
    """Coulomb gauge of a given map profile.

    Solves dv/dr = mu (v . u) du/dr - mu (v . du/dr) u inward from
    v(r_max) = i_hat (the first term vanishes on-shell but keeps u
    itself a solution of the same linear ODE), sets w = u x_mu v, and
    reads the fields off the frame:

        psi1 = du/dr . (v + i w),   psi2 = m (k_hat x_mu u) . (v + i w),
        A2   = m u3.

    Returns the gauge state psi_pm = psi1 -+ i psi2/r together with the
    frame.
    """
    if mu != -1:
        raise UnsupportedTargetError("gauge derivation supports only mu = -1")
    u = np.asarray(u_profile, dtype=float)
    if u.shape != (grid.n, 3):
        raise GridMismatchError(f"map profile must be ({grid.n}, 3), got {u.shape}")
    on_sheet = np.max(np.abs(dot_mu(u, u, mu) - mu))
    if on_sheet > 1e-6:
        raise InvalidMapError(f"profile leaves the target manifold by {on_sheet:.2e}")
    if mu == -1 and np.min(u[:, 2]) < 1.0 - 1e-9:
        raise InvalidMapError("profile leaves the upper hyperboloid sheet")
    if np.linalg.norm(u[-1] - K_HAT) > 0.1:
        raise InvalidMapError("map must approach k_hat at the outer radius")

    n, h = grid.n, grid.h
    du = np.gradient(u, h, axis=0, edge_order=2)
    u_faces = np.empty((n + 1, 3))
    du_faces = np.empty((n + 1, 3))
    u_faces[1:-1] = 0.5 * (u[:-1] + u[1:])
    du_faces[1:-1] = 0.5 * (du[:-1] + du[1:])
    u_faces[0], u_faces[-1] = u[0], u[-1]
    du_faces[0], du_faces[-1] = du[0], du[-1]

    def rhs(v, uu, duu):
        return mu * dot_mu(v, uu, mu) * duu - mu * dot_mu(v, duu, mu) * uu

    def rk4(v, lo, mid, hi, step):
        k1 = rhs(v, *lo)
        k2 = rhs(v + 0.5 * step * k1, *mid)
        k3 = rhs(v + 0.5 * step * k2, *mid)
        k4 = rhs(v + step * k3, *hi)
        return v + (step / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)

    def project(v, uu):
        v = v - mu * dot_mu(v, uu, mu) * uu
        return v / np.sqrt(dot_mu(v, v, mu))

    v_out = np.empty((n, 3))
    at = lambda i: (u_faces[i], du_faces[i])
    node = lambda i: (u[i], du[i])
    v = rk4(I_HAT, at(n), at(n), node(n - 1), -h / 2.0)
    v_out[n - 1] = project(v, u[n - 1])
    for i in range(n - 2, -1, -1):
        v = rk4(v_out[i + 1], node(i + 1), at(i + 1), node(i), -h)
        v_out[i] = project(v, u[i])
    w_out = cross_mu(u, v_out, mu)
    frame = FrameField(grid=grid, mu=mu, u=u, v=v_out, w=w_out)

    ku = np.stack([-u[:, 1], u[:, 0], np.zeros(n)], axis=1)  # k_hat x_mu u
    psi1 = dot_mu(du, v_out, mu) + 1j * dot_mu(du, w_out, mu)
    psi2 = m * (dot_mu(ku, v_out, mu) + 1j * dot_mu(ku, w_out, mu))
    psi2_over_r = psi2 / grid.nodes
    minus = RadialField(grid, m - 1, psi1 - 1j * psi2_over_r)
    plus = RadialField(grid, m + 1, psi1 + 1j * psi2_over_r)
    state = GaugeState(t=0.0, m=m, psi_plus=plus, psi_minus=minus, mu=mu)
    state._cache["a2"] = RadialField(grid, 0, m * u[:, 2])
    return state, frame
