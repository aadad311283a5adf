"""Lift 2D cross-section fields to 3D helical velocity/vorticity samples.

A solution triple (v, w, phi) on the disk determines the 3D fields through
the screw symmetry: with y = R_{-x3/h} x' the projected point,

    u~_12 = (1/|xi|^2) [[-y1 y2, h^2+y1^2], [-(h^2+y2^2), y1 y2]] grad phi(y),
    u~_3  = (-y2 u~_1 + y1 u~_2)/h,
    v~    = u~ + v(y) xi(y)/|xi(y)|^2,
    V(x)  = Q_{x3/h} v~(y),
    W(x)  = Q_{x3/h} [ (w(y)/h) xi(y) + (d2 v, -d1 v, 0)(y)/h ].

Both lifts are exactly helically equivariant by construction (the
projected point y is invariant along symmetry lines), so the symmetry
identities hold to rounding; the quantitative content of the structure
checks is in the finite-difference divergence/curl identities, evaluated
on C^2 bicubic-spline interpolants of the grid fields so that numerical
differentiation probes the algebra rather than interpolation kinks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import RectBivariateSpline

from .grid import PolarGrid, ScalarField, d_r
from .geometry import rot2, screw_motion

_PAD = 4  # angular wrap and radial ghost depth for the splines


class OutOfDiskError(ValueError):
    pass


def _padded_spline(grid: PolarGrid, values):
    """Bicubic spline on (r, theta) with periodic wrap and cross-origin ghosts."""
    n_r, n_theta = grid.n_r, grid.n_theta
    half = n_theta // 2
    # radial ghosts: f(-r, theta) = f(r, theta + pi) across the origin and a
    # quadratic continuation past the last ring (no artificial boundary kink)
    inner = np.stack([np.roll(values[k], half) for k in range(_PAD)])[::-1]
    out1 = 3.0 * values[-1] - 3.0 * values[-2] + values[-3]
    out2 = 3.0 * out1 - 3.0 * values[-1] + values[-2]
    ext = np.vstack([inner, values, out1[None, :], out2[None, :]])
    r_ax = np.concatenate(
        [
            -grid.r[:_PAD][::-1],
            grid.r,
            [grid.R + 0.5 * grid.dr, grid.R + 1.5 * grid.dr],
        ]
    )
    # angular wrap
    ext = np.hstack([ext[:, -_PAD:], ext, ext[:, :_PAD]])
    th_ax = np.concatenate(
        [grid.theta[-_PAD:] - 2 * np.pi, grid.theta, grid.theta[:_PAD] + 2 * np.pi]
    )
    return RectBivariateSpline(r_ax, th_ax, ext, kx=3, ky=3, s=0)


@dataclass
class LiftedFields:
    """Spline-backed (v, w, phi) triple ready for 3D point evaluation."""

    grid: PolarGrid
    h: float
    _sp_v: object
    _sp_w: object
    _sp_phi: object

    @classmethod
    def from_fields(cls, v: ScalarField, w: ScalarField, phi: ScalarField, h):
        grid = v.grid
        return cls(
            grid=grid,
            h=h,
            _sp_v=_padded_spline(grid, v.values),
            _sp_w=_padded_spline(grid, w.values),
            _sp_phi=_padded_spline(grid, phi.values),
        )

    def _polar(self, y):
        r = np.hypot(y[:, 0], y[:, 1])
        th = np.mod(np.arctan2(y[:, 1], y[:, 0]), 2.0 * np.pi)
        return r, th

    def value(self, name, y):
        sp = getattr(self, f"_sp_{name}")
        r, th = self._polar(y)
        return sp.ev(r, th)

    def grad(self, name, y):
        """Cartesian gradient of a field at planar points y, shape (n, 2)."""
        sp = getattr(self, f"_sp_{name}")
        r, th = self._polar(y)
        f_r = sp.ev(r, th, dx=1)
        f_t = sp.ev(r, th, dy=1)
        r_safe = np.maximum(r, 1e-12)
        c, s = np.cos(th), np.sin(th)
        gx = c * f_r - s * f_t / r_safe
        gy = s * f_r + c * f_t / r_safe
        return np.stack([gx, gy], axis=1)


def project_to_slice(pts3d, h, R=None):
    """y = R_{-x3/h} x' for an (n, 3) array; optionally reject |y| > R."""
    pts3d = np.atleast_2d(np.asarray(pts3d, dtype=float))
    y = rot2(pts3d[:, :2], -pts3d[:, 2] / h)
    if R is not None:
        r = np.hypot(y[:, 0], y[:, 1])
        if np.any(r > R * (1 + 1e-12)):
            bad = pts3d[r > R * (1 + 1e-12)][0]
            raise OutOfDiskError(f"point {bad} projects outside the disk")
    return y


def _q_rotate(vec3, theta):
    """Apply Q_theta (R_theta on the plane, identity on x3) to (n, 3) vectors."""
    out = np.empty_like(vec3)
    out[:, :2] = rot2(vec3[:, :2], theta)
    out[:, 2] = vec3[:, 2]
    return out


def lift_velocity(fields: LiftedFields, pts3d, cfg=None):
    """3D velocity at sample points, shape (n, 3)."""
    pts3d = np.atleast_2d(np.asarray(pts3d, dtype=float))
    h = fields.h
    y = project_to_slice(pts3d, h, R=fields.grid.R)
    g = fields.grad("phi", y)
    y1, y2 = y[:, 0], y[:, 1]
    xi2 = h * h + y1 * y1 + y2 * y2
    u1 = (-y1 * y2 * g[:, 0] + (h * h + y1 * y1) * g[:, 1]) / xi2
    u2 = (-(h * h + y2 * y2) * g[:, 0] + y1 * y2 * g[:, 1]) / xi2
    u3 = (-y2 * u1 + y1 * u2) / h
    vval = fields.value("v", y)
    xi = np.stack([y2, -y1, np.full_like(y1, h)], axis=1)
    vtilde = np.stack([u1, u2, u3], axis=1) + (vval / xi2)[:, None] * xi
    return _q_rotate(vtilde, pts3d[:, 2] / h)


def lift_vorticity(fields: LiftedFields, pts3d, cfg=None):
    """3D vorticity at sample points, shape (n, 3)."""
    pts3d = np.atleast_2d(np.asarray(pts3d, dtype=float))
    h = fields.h
    y = project_to_slice(pts3d, h, R=fields.grid.R)
    wval = fields.value("w", y)
    gv = fields.grad("v", y)
    y1, y2 = y[:, 0], y[:, 1]
    xi = np.stack([y2, -y1, np.full_like(y1, h)], axis=1)
    wtilde = (wval / h)[:, None] * xi
    wtilde[:, 0] += gv[:, 1] / h
    wtilde[:, 1] += -gv[:, 0] / h
    return _q_rotate(wtilde, pts3d[:, 2] / h)


def lift_swirl(fields: LiftedFields, pts3d):
    """Helical swirl scalar v_xi(x) = v(projected point); exactly helical."""
    pts3d = np.atleast_2d(np.asarray(pts3d, dtype=float))
    y = project_to_slice(pts3d, fields.h, R=fields.grid.R)
    return fields.value("v", y)


def sample_cloud(fields: LiftedFields, pts3d, cfg=None):
    """Structured array of position/velocity/vorticity/swirl rows."""
    pts3d = np.atleast_2d(np.asarray(pts3d, dtype=float))
    vel = lift_velocity(fields, pts3d)
    vor = lift_vorticity(fields, pts3d)
    xi = np.stack(
        [pts3d[:, 1], -pts3d[:, 0], np.full(len(pts3d), fields.h)], axis=1
    )
    swirl = np.einsum("ij,ij->i", vel, xi)
    return {
        "position": pts3d,
        "velocity": vel,
        "vorticity": vor,
        "swirl": swirl,
    }


def write_cloud_csv(path, cloud):
    cols = np.hstack(
        [cloud["position"], cloud["velocity"], cloud["vorticity"], cloud["swirl"][:, None]]
    )
    with open(path, "w", encoding="utf-8") as f:
        f.write("x1,x2,x3,v1,v2,v3,w1,w2,w3,swirl\n")
        for row in cols:
            f.write(",".join("%.17g" % x for x in row) + "\n")


def read_cloud_csv(path):
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return {
        "position": data[:, 0:3],
        "velocity": data[:, 3:6],
        "vorticity": data[:, 6:9],
        "swirl": data[:, 9],
    }


def _fd_grad(fn, pts3d, step):
    """Centered FD gradient of a vector/scalar point function, per axis."""
    outs = []
    for ax in range(3):
        e = np.zeros(3)
        e[ax] = step
        outs.append((fn(pts3d + e) - fn(pts3d - e)) / (2.0 * step))
    return outs  # list of d/dx_ax


def check_structure(fields: LiftedFields, pts3d, cfg=None, fd_step=1e-3, thetas=(np.pi / 7, 1.0, 2 * np.pi / 3)):
    """Max violations of the structural identities over a sample cloud.

    Reports (i) FD divergence of the lifted velocity, (ii) the in-plane
    vorticity identities w1 = (x2 w3 + d2 v_xi)/h, w2 = (-x1 w3 - d1 v_xi)/h,
    (iii) the third-component relation w3 = zeta3 - 2 h^2 v_xi/|xi|^4
    - x.grad v_xi /|xi|^2 with zeta3 the FD curl of the orthogonal part,
    and (iv) helical invariance of the scalars w3, v_xi along the screw
    orbit plus the axis-wise FD directional derivative xi . grad w3.
    """
    pts3d = np.atleast_2d(np.asarray(pts3d, dtype=float))
    h = fields.h

    vel = lift_velocity(fields, pts3d)
    vor = lift_vorticity(fields, pts3d)
    swirl = lift_swirl(fields, pts3d)

    # (i) divergence
    dvel = _fd_grad(lambda p: lift_velocity(fields, p), pts3d, fd_step)
    div = dvel[0][:, 0] + dvel[1][:, 1] + dvel[2][:, 2]

    # (ii) in-plane vorticity identities
    dsw = _fd_grad(lambda p: lift_swirl(fields, p), pts3d, fd_step)
    res1 = vor[:, 0] - (pts3d[:, 1] * vor[:, 2] + dsw[1]) / h
    res2 = vor[:, 1] - (-pts3d[:, 0] * vor[:, 2] - dsw[0]) / h

    # (iii) third component via the orthogonal field u = V - v_xi xi/|xi|^2
    xi = np.stack([pts3d[:, 1], -pts3d[:, 0], np.full(len(pts3d), h)], axis=1)
    xi2 = np.einsum("ij,ij->i", xi, xi)

    def u_orth(p):
        V = lift_velocity(fields, p)
        s = lift_swirl(fields, p)
        x = np.stack([p[:, 1], -p[:, 0], np.full(len(p), h)], axis=1)
        x2 = np.einsum("ij,ij->i", x, x)
        return V - (s / x2)[:, None] * x

    du = _fd_grad(u_orth, pts3d, fd_step)
    zeta3 = du[0][:, 1] - du[1][:, 0]
    xgrad_sw = pts3d[:, 0] * dsw[0] + pts3d[:, 1] * dsw[1]
    res3 = vor[:, 2] - (zeta3 - 2.0 * h * h * swirl / xi2**2 - xgrad_sw / xi2)

    # (iv) helical invariance of scalars and of the velocity vector
    orbit_w3 = 0.0
    orbit_swirl = 0.0
    orbit_vel = 0.0
    for th in thetas:
        moved = screw_motion(pts3d, th, h)
        orbit_w3 = max(orbit_w3, float(np.abs(lift_vorticity(fields, moved)[:, 2] - vor[:, 2]).max()))
        orbit_swirl = max(orbit_swirl, float(np.abs(lift_swirl(fields, moved) - swirl).max()))
        vel_moved = lift_velocity(fields, moved)
        expected = _q_rotate(vel, th)
        orbit_vel = max(orbit_vel, float(np.abs(vel_moved - expected).max()))
    dw3 = _fd_grad(lambda p: lift_vorticity(fields, p)[:, 2], pts3d, fd_step)
    xi_grad_w3 = xi[:, 0] * dw3[0] + xi[:, 1] * dw3[1] + xi[:, 2] * dw3[2]

    u_dot_xi = np.einsum("ij,ij->i", u_orth(pts3d), xi)

    return {
        "n_samples": int(len(pts3d)),
        "fd_step": fd_step,
        "max_div": float(np.abs(div).max()),
        "max_plane_identity": float(max(np.abs(res1).max(), np.abs(res2).max())),
        "max_w3_identity": float(np.abs(res3).max()),
        "max_orbit_w3": orbit_w3,
        "max_orbit_swirl": orbit_swirl,
        "max_orbit_velocity": orbit_vel,
        "max_xi_grad_w3": float(np.abs(xi_grad_w3).max()),
        "max_u_dot_xi": float(np.abs(u_dot_xi).max()),
    }


def free_boundary_mask(psi: ScalarField, rings=3):
    """Cells within `rings` cells of a sign change of psi (the free boundary)."""
    sgn = psi.values > 0
    edge = np.zeros_like(sgn)
    for dr_shift in (-1, 0, 1):
        for dt_shift in (-1, 0, 1):
            shifted = np.roll(np.roll(sgn, dr_shift, axis=0), dt_shift, axis=1)
            edge |= shifted != sgn
    mask = edge.copy()
    for _ in range(rings - 1):
        grown = mask.copy()
        for dr_shift in (-1, 0, 1):
            for dt_shift in (-1, 0, 1):
                grown |= np.roll(np.roll(mask, dr_shift, axis=0), dt_shift, axis=1)
        mask = grown
    return mask


def sample_points_3d(grid: PolarGrid, h, n, rng, exclude_mask=None, r_margin=3):
    """Random 3D sample points whose projections avoid masked cells.

    Points are drawn uniformly over one screw period with planar positions
    covering the disk interior (a few cells clear of the boundary); cells
    flagged in `exclude_mask` (e.g. the free-boundary ring) are rejected.
    """
    pts = np.empty((0, 3))
    r_hi = grid.R - r_margin * grid.dr
    while len(pts) < n:
        m = max(n - len(pts), 64)
        r = np.sqrt(rng.uniform((grid.dr * r_margin) ** 2, r_hi**2, size=2 * m))
        th = rng.uniform(0, 2 * np.pi, size=2 * m)
        if exclude_mask is not None:
            i = np.clip((r / grid.dr - 0.5).round().astype(int), 0, grid.n_r - 1)
            j = np.mod((th / grid.dtheta).round().astype(int), grid.n_theta)
            keep = ~exclude_mask[i, j]
            r, th = r[keep], th[keep]
        x3 = rng.uniform(-np.pi * h, np.pi * h, size=len(r))
        y = np.stack([r * np.cos(th), r * np.sin(th)], axis=1)
        x12 = rot2(y, x3 / h)  # invert the projection: x' = R_{+x3/h} y
        batch = np.column_stack([x12, x3])
        pts = np.vstack([pts, batch])
    return pts[:n]
