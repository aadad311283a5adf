"""Profile nonlinearity of the swirl construction and its convex conjugate.

With eps, a > 0, b >= 0 and alpha_bar = alpha ln(1/eps), the pointwise
gain rate at radius r is

    i(r, s) = c1(r) s_+ + c0(r) 1{s > 0},
    c1(r) = (2 h^2 a eps + a^2 (h^2+r^2)) / (h^2+r^2)^2,
    c0(r) = h^2 alpha_bar a eps / (h^2+r^2) + b,

whose primitive has the modified conjugate

    J(r, s) = (h^2+r^2)^2 (s - c0(r))_+^2 / (4 h^2 a eps + 2 a^2 (h^2+r^2))
            = (s - c0(r))_+^2 / (2 c1(r)).

The maximizer profile applies eps^2 zeta = i(r, psi) and clamps at
Lambda/eps^2.
"""

from __future__ import annotations

import numpy as np


def coef_linear(r, cfg):
    """c1(r): slope of the profile in psi."""
    r = np.asarray(r, dtype=float)
    h, a, eps = cfg.h, cfg.a, cfg.eps
    d = h * h + r * r
    return (2.0 * h * h * a * eps + a * a * d) / (d * d)


def coef_patch(r, cfg):
    """c0(r): indicator (patch) part of the profile, also the J threshold."""
    r = np.asarray(r, dtype=float)
    h, a, eps, b = cfg.h, cfg.a, cfg.eps, cfg.b
    return h * h * cfg.alpha_bar * a * eps / (h * h + r * r) + b


def penalty_J(r, s, cfg):
    """Modified conjugate J(r, s); degenerate (rejected) when a = 0."""
    if cfg.a <= 0:
        raise ValueError("penalty is degenerate for a = 0 (zero-swirl branch out of scope)")
    r = np.asarray(r, dtype=float)
    s = np.asarray(s, dtype=float)
    h, a, eps = cfg.h, cfg.a, cfg.eps
    d = h * h + r * r
    excess = np.maximum(s - coef_patch(r, cfg), 0.0)
    return d * d * excess * excess / (4.0 * h * h * a * eps + 2.0 * a * a * d)


def gain_rate_i(r, s, cfg):
    """Pointwise gain rate i(r, s); eps^2 * profile(psi) equals i(r, psi)."""
    r = np.asarray(r, dtype=float)
    s = np.asarray(s, dtype=float)
    pos = s > 0
    return coef_linear(r, cfg) * np.where(pos, s, 0.0) + coef_patch(r, cfg) * pos


def primitive_I(r, s, cfg):
    """I(r, s) = integral of i(r, .) from 0 to s (s >= 0)."""
    r = np.asarray(r, dtype=float)
    s = np.asarray(s, dtype=float)
    sp = np.maximum(s, 0.0)
    return 0.5 * coef_linear(r, cfg) * sp * sp + coef_patch(r, cfg) * sp


def profile_zeta(rr, psi, cfg):
    """Unclamped vorticity profile zeta = i(r, psi)/eps^2 on grid arrays."""
    return gain_rate_i(rr, psi, cfg) / cfg.eps**2


def apply_profile(psi, cfg):
    """Map a psi field to the vorticity field, clamped at Lambda/eps^2.

    `psi` is a ScalarField (already including -mu); returns the clamped
    ScalarField and the clamped-cell area.
    """
    from .grid import ScalarField

    grid = psi.grid
    rr = grid.r[:, None]
    raw = profile_zeta(rr, psi.values, cfg)
    cap = cfg.cap
    clamped = raw > cap
    values = np.where(clamped, cap, raw)
    clamp_area = float(np.sum(clamped * grid.cell_area[:, None]))
    return ScalarField(grid, values), clamp_area
