"""Time integration of the 2D helical vorticity-stream system with swirl.

State (v, w) on the disk cross-section, coupled to the stream function by

    L_K phi = w + 2 h^2 v/|xi|^4 + r (dv/dr)/|xi|^2,   phi = 0 on the boundary,

with |xi|^2 = h^2 + r^2.  Both fields ride the velocity u = grad^perp phi,
with the perp convention (a, b)^perp = (b, -a); in polar components

    u_r = (1/r) dphi/dtheta,      u_theta = -dphi/dr.

v is transported exactly; w picks up the sources

    dw/dt + u.grad w = (1/r)(dv/dr dS/dtheta - dv/dtheta dS/dr)
                       - 2 v (dv/dtheta) / (h^2+r^2)^2,
    S = r (dphi/dr) / (h^2+r^2),

which is the polar form of the Cartesian Jacobian source (note S = -U3
for the axial velocity U3 of the reduction).  The scheme is
semi-Lagrangian: RK2 backward trajectories in a time-centered velocity,
monotone bilinear interpolation at the departure points, trapezoidal
source accumulation, one elliptic re-solve per step.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import PolarGrid, ScalarField, bilinear_sample_xy, d_r, d_theta
from .elliptic import EllipticOperator

CFL_CELLS = 2.0  # hard guard, in cells per step


class CFLError(ValueError):
    pass


@dataclass
class EvolutionState:
    t: float
    v: ScalarField
    w: ScalarField
    phi: ScalarField

    def copy(self):
        return EvolutionState(self.t, self.v.copy(), self.w.copy(), self.phi.copy())


def stream_rhs(grid: PolarGrid, h, v_values):
    """Right-hand side w-coupling terms: 2 h^2 v/|xi|^4 + r v_r/|xi|^2."""
    r = grid.r[:, None]
    xi2 = h * h + r * r
    return 2.0 * h * h * v_values / xi2**2 + r * d_r(grid, v_values) / xi2


def stream_solve(state: EvolutionState, op: EllipticOperator, tol=1e-10) -> ScalarField:
    """Solve for the stream function of the current (v, w)."""
    grid = op.grid
    rhs = state.w.values + stream_rhs(grid, op.h, state.v.values)
    phi = op.solve(rhs, tol=tol, x0=state.phi.values)
    return ScalarField(grid, phi)


def velocity_xy(grid: PolarGrid, phi_values):
    """Cartesian advecting velocity grad^perp phi on the grid."""
    r = grid.r[:, None]
    u_r = d_theta(grid, phi_values) / r
    u_t = -d_r(grid, phi_values, outer="dirichlet0")
    tt = grid.theta[None, :]
    ux = u_r * np.cos(tt) - u_t * np.sin(tt)
    uy = u_r * np.sin(tt) + u_t * np.cos(tt)
    return ux, uy


def source_w(grid: PolarGrid, h, v_values, phi_values):
    """Swirl-coupling source of the w-equation (polar Jacobian form)."""
    r = grid.r[:, None]
    xi2 = h * h + r * r
    s = r * d_r(grid, phi_values, outer="dirichlet0") / xi2
    v_r = d_r(grid, v_values)
    v_t = d_theta(grid, v_values)
    jac = (v_r * d_theta(grid, s) - v_t * d_r(grid, s)) / r
    return jac - 2.0 * v_values * v_t / xi2**2


def max_speed(grid: PolarGrid, ux, uy):
    return float(np.sqrt(ux * ux + uy * uy).max())


def _min_crossing(grid: PolarGrid, phi_values):
    """Min cell-crossing time; the angular extent is floored at dr because
    the Cartesian resolution near the origin is set by dr, not by the
    vanishing arc length r dtheta (crossing many thin angular cells there
    is harmless for a semi-Lagrangian step)."""
    r = grid.r[:, None]
    u_r = np.abs(d_theta(grid, phi_values) / r)
    u_t = np.abs(d_r(grid, phi_values, outer="dirichlet0"))
    arc = np.maximum(r * grid.dtheta, grid.dr)
    with np.errstate(divide="ignore"):
        crossing = np.minimum(
            np.where(u_r > 0, grid.dr / u_r, np.inf),
            np.where(u_t > 0, arc / u_t, np.inf),
        )
    return float(crossing.min())


def suggest_dt(state: EvolutionState, op: EllipticOperator, dt_safety=0.5):
    """dt_safety * dr / max |grad^perp phi|, capped by the cell-crossing guard.

    The angular cells near the origin cross quickly for rotating flows, so
    the guard can undercut the plain dr/maxspeed formula there.
    """
    ux, uy = velocity_xy(op.grid, state.phi.values)
    speed = max_speed(op.grid, ux, uy)
    if speed == 0.0:
        return np.inf
    dt = dt_safety * op.grid.dr / speed
    return min(dt, 0.95 * CFL_CELLS * _min_crossing(op.grid, state.phi.values))


def _check_cfl(grid: PolarGrid, phi_values, dt):
    """Reject steps beyond CFL_CELLS cells of travel; report the admissible dt."""
    dt_max = CFL_CELLS * _min_crossing(grid, phi_values)
    if abs(dt) > dt_max:
        raise CFLError(
            f"dt = {dt:g} exceeds the CFL guard; admissible |dt| <= {dt_max:g}"
        )


def _departure_points(grid: PolarGrid, ux, uy, dt):
    """RK2 backward trajectories from all cell centers under a frozen velocity."""
    xx, yy = grid.xy()
    ux_mid = bilinear_sample_xy(grid, ux, xx - 0.5 * dt * ux, yy - 0.5 * dt * uy)
    uy_mid = bilinear_sample_xy(grid, uy, xx - 0.5 * dt * ux, yy - 0.5 * dt * uy)
    return xx - dt * ux_mid, yy - dt * uy_mid


def step(state: EvolutionState, dt, op: EllipticOperator, tol=1e-10) -> EvolutionState:
    """Advance one step; second order via a predictor velocity/source average."""
    grid = op.grid
    h = op.h
    _check_cfl(grid, state.phi.values, dt)

    u0x, u0y = velocity_xy(grid, state.phi.values)
    s0 = source_w(grid, h, state.v.values, state.phi.values)

    # predictor: full Euler step with the frozen start velocity
    xd, yd = _departure_points(grid, u0x, u0y, dt)
    v_pred = bilinear_sample_xy(grid, state.v.values, xd, yd)
    w_pred = bilinear_sample_xy(grid, state.w.values, xd, yd) + dt * bilinear_sample_xy(
        grid, s0, xd, yd
    )
    phi_pred = op.solve(
        w_pred + stream_rhs(grid, h, v_pred), tol=tol, x0=state.phi.values
    )
    u1x, u1y = velocity_xy(grid, phi_pred)
    s1 = source_w(grid, h, v_pred, phi_pred)

    # corrector: trajectories in the time-centered velocity, trapezoidal source
    xd, yd = _departure_points(grid, 0.5 * (u0x + u1x), 0.5 * (u0y + u1y), dt)
    v_new = bilinear_sample_xy(grid, state.v.values, xd, yd)
    w_new = (
        bilinear_sample_xy(grid, state.w.values, xd, yd)
        + 0.5 * dt * bilinear_sample_xy(grid, s0, xd, yd)
        + 0.5 * dt * s1
    )
    phi_new = op.solve(w_new + stream_rhs(grid, h, v_new), tol=tol, x0=phi_pred)
    return EvolutionState(
        t=state.t + dt,
        v=ScalarField(grid, v_new),
        w=ScalarField(grid, w_new),
        phi=ScalarField(grid, phi_new),
    )


def diagnostics_row(state: EvolutionState, op: EllipticOperator):
    """Per-step record: invariants, support centroid angle, energy analogue."""
    grid = op.grid
    xx, yy = grid.xy()
    v, w = state.v.values, state.w.values
    zeta_like = w + stream_rhs(grid, op.h, v)
    cx = grid.integrate(xx * v)
    cy = grid.integrate(yy * v)
    mass_v = grid.integrate(v)
    outer_ring = float(np.abs(v[-1]).max() + np.abs(w[-1]).max())
    return {
        "t": state.t,
        "int_v": mass_v,
        "int_w": grid.integrate(w),
        "centroid_angle": float(np.arctan2(cy, cx)),
        "energy": 0.5 * grid.inner(zeta_like, state.phi.values),
        "support_touches_boundary": bool(outer_ring > 1e-12),
    }


@dataclass
class Trajectory:
    times: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)
    checkpoints: list = field(default_factory=list)  # (step index, EvolutionState)
    final: EvolutionState = None


class TrajectoryError(RuntimeError):
    """A step failed; `partial` carries the trajectory up to the failure."""

    def __init__(self, cause, partial: Trajectory):
        super().__init__(str(cause))
        self.cause = cause
        self.partial = partial


def evolve(
    state0: EvolutionState,
    T,
    dt,
    op: EllipticOperator,
    checkpoint_every=0,
    tol=1e-10,
) -> Trajectory:
    """Repeated stepping to time T with periodic checkpoints and diagnostics.

    Negative dt integrates backward (T is then a negative target offset).
    On a step failure the partial trajectory is attached to the raised
    TrajectoryError so callers can flush it.
    """
    n_steps = int(np.ceil(abs(T) / abs(dt) - 1e-12))
    traj = Trajectory()
    state = state0.copy()
    traj.times.append(state.t)
    traj.diagnostics.append(diagnostics_row(state, op))
    if checkpoint_every:
        traj.checkpoints.append((0, state.copy()))
    traj.final = state
    for k in range(n_steps):
        # last partial step lands exactly on T
        dt_k = dt if (k + 1) * abs(dt) <= abs(T) else np.sign(dt) * (abs(T) - k * abs(dt))
        try:
            state = step(state, dt_k, op, tol=tol)
        except Exception as exc:
            raise TrajectoryError(exc, traj) from exc
        traj.times.append(state.t)
        traj.diagnostics.append(diagnostics_row(state, op))
        if checkpoint_every and (k + 1) % checkpoint_every == 0:
            traj.checkpoints.append((k + 1, state.copy()))
        traj.final = state
    return traj


def rotating_state(max_state, cfg, op: EllipticOperator) -> EvolutionState:
    """Initial condition from a converged maximizer.

    V = (a/eps) psi_+ and W = zeta - 2h^2 V/|xi|^4 - r V_r/|xi|^2; the
    discrete stream solve then reproduces Phi = G zeta exactly, so the
    triple is a self-consistent rotating state of angular speed alpha_bar.
    """
    from .variational import swirl_from_psi

    grid = op.grid
    v = swirl_from_psi(max_state.psi, cfg)
    w = ScalarField(grid, max_state.zeta.values - stream_rhs(grid, cfg.h, v.values))
    r = grid.r[:, None]
    guess = max_state.psi.values + 0.5 * cfg.alpha_bar * r**2 + max_state.mu
    phi = op.solve(max_state.zeta.values, tol=cfg.tol_elliptic, x0=guess)
    return EvolutionState(t=0.0, v=v, w=w, phi=ScalarField(grid, phi))
