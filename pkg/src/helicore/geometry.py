"""Closed-form geometry of the helical reduction.

Everything here is exact algebra on the disk cross-section D = B_R(0):
the anisotropic coefficient matrix

    K(x) = I - x (x)^t / (h^2 + |x|^2),

its symmetric factor T_x with T_x^{-1} (T_x^{-1})^t = K(x), the symmetry
field xi(x) = (x2, -x1, h), the landscape function

    Y(x) = kappa * sqrt(h^2 + |x|^2) / (2 pi h) - alpha |x|^2,

and the reference traveling-rotating helix with its translation/rotation
speeds a1, b1.  K is diagonal in the polar frame: eigenvalue
h^2/(h^2+r^2) radially, 1 tangentially, which is what makes the polar
discretization elsewhere a 5-point stencil.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def coefficient_matrix(x, h):
    """K(x) as a 2x2 array; total on the closed disk, SPD for h > 0."""
    x1, x2 = float(x[0]), float(x[1])
    d = h * h + x1 * x1 + x2 * x2
    return np.array(
        [
            [(h * h + x2 * x2) / d, -x1 * x2 / d],
            [-x1 * x2 / d, (h * h + x1 * x1) / d],
        ]
    )


def factor_T(x, h):
    """Symmetric positive-definite T_x with T_x^{-1} (T_x^{-1})^t = K(x).

    K has eigenvalue h^2/(h^2+|x|^2) along x and 1 along x-perp, so the
    symmetric square root of K^{-1} is assembled from the same
    eigenvectors; at the origin both choices degenerate to the identity.
    """
    x1, x2 = float(x[0]), float(x[1])
    r2 = x1 * x1 + x2 * x2
    lam = np.sqrt((h * h + r2) / (h * h))  # 1/sqrt of the radial eigenvalue
    if r2 == 0.0:
        return np.eye(2)
    # lam on span(x), 1 on span(x_perp)
    e1 = np.array([x1, x2]) / np.sqrt(r2)
    return np.eye(2) + (lam - 1.0) * np.outer(e1, e1)


def det_K(r, h):
    """det K at radius r: h^2/(h^2+r^2), vectorized."""
    r = np.asarray(r, dtype=float)
    return h * h / (h * h + r * r)


def xi_field(x, h):
    """Tangent field of the symmetry lines, xi(x) = (x2, -x1, h)."""
    return np.array([float(x[1]), -float(x[0]), float(h)])


def landscape_Y(x, cfg):
    """Y(x) = kappa sqrt(h^2+|x|^2)/(2 pi h) - alpha |x|^2 (radial)."""
    x = np.asarray(x, dtype=float)
    r2 = x[0] * x[0] + x[1] * x[1] if x.ndim == 1 else None
    if r2 is None:
        raise ValueError("landscape_Y expects a single 2D point")
    h, kappa = cfg.h, cfg.kappa
    return kappa * np.sqrt(h * h + r2) / (2.0 * np.pi * h) - cfg.alpha * r2


def landscape_Y_radial(r, cfg):
    """Y as a function of radius alone, vectorized."""
    r = np.asarray(r, dtype=float)
    h, kappa = cfg.h, cfg.kappa
    return kappa * np.sqrt(h * h + r * r) / (2.0 * np.pi * h) - cfg.alpha * r * r


def rot2(p, theta):
    """Apply the 2x2 rotation block R_theta = [[c, s], [-s, c]] to points.

    This is the convention used throughout: R_theta rotates clockwise in
    the standard orientation.  `p` is (..., 2).
    """
    p = np.asarray(p, dtype=float)
    c, s = np.cos(theta), np.sin(theta)
    out = np.empty_like(p)
    out[..., 0] = c * p[..., 0] + s * p[..., 1]
    out[..., 1] = -s * p[..., 0] + c * p[..., 1]
    return out


def screw_motion(x, theta, h):
    """H_theta(x): rotation by R_theta in-plane plus vertical shift h*theta."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    out[..., :2] = rot2(x[..., :2], theta)
    out[..., 2] = x[..., 2] + h * theta
    return out


@dataclass(frozen=True)
class HelixCurve:
    """Reference helix of radius r_star and pitch h carrying circulation kappa."""

    r_star: float
    h: float
    kappa: float

    @property
    def a1(self):
        return self.kappa * self.h / (4.0 * np.pi * (self.h**2 + self.r_star**2))

    @property
    def b1(self):
        return self.kappa * self.r_star**2 / (4.0 * np.pi * (self.h**2 + self.r_star**2))

    @property
    def alpha(self):
        """Angular speed of the plane-crossing point: (a1 + b1/h)/sqrt(h^2+r_star^2)."""
        return self.kappa / (4.0 * np.pi * self.h * np.sqrt(self.h**2 + self.r_star**2))


def helix_point(s, tau, curve: HelixCurve):
    """Point gamma(s, tau) on the traveling-rotating helix.

    s is arclength, tau the scaled time; the curve translates with speed
    b1 and rotates with speed a1 (both divided by sqrt(h^2+r_star^2) in
    the parameterization below).
    """
    rs, h = curve.r_star, curve.h
    den = np.sqrt(h * h + rs * rs)
    phase = (-s - curve.a1 * tau) / den
    return np.array(
        [rs * np.cos(phase), rs * np.sin(phase), (h * s - curve.b1 * tau) / den]
    )


def plane_crossing(tau, curve: HelixCurve):
    """x3 = 0 section P(tau) of the helix: the rotation of (r_star, 0) by alpha*tau.

    Solving h s = b1 tau for the crossing arclength gives a point that
    orbits the origin clockwise (standard orientation) with angular
    speed alpha.
    """
    s = curve.b1 * tau / curve.h
    p = helix_point(s, tau, curve)
    return p[:2]
