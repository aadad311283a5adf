"""Polar cell-centered grid on the disk, scalar fields, and shared I/O.

Cell centers sit at r_i = (i + 1/2) dr, theta_j = j dtheta with periodic
index arithmetic in j.  Quadrature uses the exact cell areas
r_i dr dtheta, so integrating the constant 1 returns pi R^2 to rounding.

The field CSV format is shared repo-wide:

    # polar nr=<n_r> ntheta=<n_theta> R=<R> h=<h>
    v[0,0],v[0,1],...          (row = radial index i, column = angular j)
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

FLOAT_FMT = "%.17g"


@dataclass(frozen=True)
class PolarGrid:
    n_r: int
    n_theta: int
    R: float

    def __post_init__(self):
        if self.n_r < 4 or self.n_theta < 8:
            raise ValueError("need n_r >= 4 and n_theta >= 8")
        if self.n_theta % 2 != 0:
            raise ValueError("n_theta must be even")

    @property
    def dr(self):
        return self.R / self.n_r

    @property
    def dtheta(self):
        return 2.0 * np.pi / self.n_theta

    @property
    def r(self):
        """Cell-center radii, shape (n_r,)."""
        return (np.arange(self.n_r) + 0.5) * self.dr

    @property
    def theta(self):
        """Cell-center angles, shape (n_theta,)."""
        return np.arange(self.n_theta) * self.dtheta

    @property
    def cell_area(self):
        """Cell areas r_i dr dtheta, shape (n_r,)."""
        return self.r * self.dr * self.dtheta

    def mesh(self):
        """(rr, tt) arrays of shape (n_r, n_theta)."""
        return np.meshgrid(self.r, self.theta, indexing="ij")

    def xy(self):
        rr, tt = self.mesh()
        return rr * np.cos(tt), rr * np.sin(tt)

    def integrate(self, values):
        return float(np.sum(values * self.cell_area[:, None]))

    def inner(self, u, v):
        """Quadrature inner product <u, v> = sum u v r dr dtheta."""
        return float(np.sum(u * v * self.cell_area[:, None]))

    def norm_l2(self, values):
        return float(np.sqrt(max(self.inner(values, values), 0.0)))


@dataclass
class ScalarField:
    grid: PolarGrid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.n_r, self.grid.n_theta):
            raise ValueError(
                f"field shape {self.values.shape} does not match grid "
                f"({self.grid.n_r}, {self.grid.n_theta})"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field contains non-finite values")

    def copy(self):
        return ScalarField(self.grid, self.values.copy())

    def integral(self):
        return self.grid.integrate(self.values)


def write_field_csv(path, fld: ScalarField, h):
    g = fld.grid
    header = "# polar nr=%d ntheta=%d R=%s h=%s" % (
        g.n_r,
        g.n_theta,
        FLOAT_FMT % g.R,
        FLOAT_FMT % h,
    )
    with open(path, "w", encoding="utf-8") as f:
        f.write(header + "\n")
        for i in range(g.n_r):
            f.write(",".join(FLOAT_FMT % v for v in fld.values[i]) + "\n")


def read_field_csv(path):
    """Returns (ScalarField, h) from the shared CSV format."""
    with open(path, "r", encoding="utf-8") as f:
        header = f.readline().strip()
        if not header.startswith("# polar "):
            raise ValueError(f"{path}: not a polar field CSV (bad header)")
        meta = dict(tok.split("=", 1) for tok in header[len("# polar ") :].split())
        grid = PolarGrid(int(meta["nr"]), int(meta["ntheta"]), float(meta["R"]))
        values = np.loadtxt(f, delimiter=",", ndmin=2)
    return ScalarField(grid, values), float(meta["h"])


# --- derivatives (2nd-order centered; theta periodic, r closed across origin) ---


def _origin_ghost(values):
    """Row of values reflected through the origin: f(-r0, theta) = f(r0, theta+pi)."""
    n_theta = values.shape[1]
    return np.roll(values[0], n_theta // 2)


def d_theta(grid: PolarGrid, values):
    return (np.roll(values, -1, axis=1) - np.roll(values, 1, axis=1)) / (2.0 * grid.dtheta)


def d_r(grid: PolarGrid, values, outer="one_sided"):
    """Radial derivative at cell centers.

    The innermost row uses the cross-origin ghost; the outermost uses a
    one-sided second-order stencil, or a Dirichlet-0 ghost at r = R + dr/2
    (``outer='dirichlet0'``) for fields that vanish on the boundary.
    """
    out = np.empty_like(values)
    dr = grid.dr
    out[1:-1] = (values[2:] - values[:-2]) / (2.0 * dr)
    ghost_in = _origin_ghost(values)
    out[0] = (values[1] - ghost_in) / (2.0 * dr)
    if outer == "dirichlet0":
        ghost_out = -values[-1]
        out[-1] = (ghost_out - values[-2]) / (2.0 * dr)
    else:
        out[-1] = (3.0 * values[-1] - 4.0 * values[-2] + values[-3]) / (2.0 * dr)
    return out


def rotate_field(values, angle, dtheta):
    """Sample field values at theta + angle with periodic linear interpolation.

    Returns G with G[i, j] = f(r_i, theta_j + angle); a positive angle is
    the pattern rotated clockwise in the standard orientation.
    """
    n_theta = values.shape[1]
    shift = angle / dtheta
    j0 = int(np.floor(shift))
    w = shift - j0
    left = np.roll(values, -j0, axis=1)
    right = np.roll(values, -(j0 + 1), axis=1)
    return (1.0 - w) * left + w * right


# --- bilinear sampling at scattered points (monotone: convex combinations) ---


def bilinear_sample(grid: PolarGrid, values, r_q, theta_q):
    """Bilinear interpolation in (r, theta) at query points.

    Angular wrap is periodic; radii below the innermost center interpolate
    across the origin via the antipodal ring; radii beyond the outermost
    center interpolate toward a ghost ring at R + dr/2 holding -f[last]
    (linear decay through zero at the boundary circle).
    """
    r_q = np.asarray(r_q, dtype=float)
    theta_q = np.asarray(theta_q, dtype=float)
    n_r, n_theta = values.shape
    dr, dth = grid.dr, grid.dtheta

    # padded radial axis: ghost ring below the origin and outside R
    padded = np.empty((n_r + 2, n_theta))
    padded[1:-1] = values
    padded[0] = _origin_ghost(values)
    padded[-1] = -values[-1]

    # radial index into the padded array; centers at (i - 1 + 0.5) dr, i = 1..n_r
    s = r_q / dr - 0.5 + 1.0
    i0 = np.clip(np.floor(s).astype(int), 0, n_r)
    wr = np.clip(s - i0, 0.0, 1.0)

    t = theta_q / dth
    j0 = np.floor(t).astype(int)
    wt = t - j0
    j0 = np.mod(j0, n_theta)
    j1 = np.mod(j0 + 1, n_theta)

    f00 = padded[i0, j0]
    f01 = padded[i0, j1]
    f10 = padded[i0 + 1, j0]
    f11 = padded[i0 + 1, j1]
    lo = (1.0 - wt) * f00 + wt * f01
    hi = (1.0 - wt) * f10 + wt * f11
    return (1.0 - wr) * lo + wr * hi


def bilinear_sample_xy(grid: PolarGrid, values, x_q, y_q):
    r_q = np.hypot(x_q, y_q)
    theta_q = np.arctan2(y_q, x_q)
    return bilinear_sample(grid, values, r_q, theta_q)
