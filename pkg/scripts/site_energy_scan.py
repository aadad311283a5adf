#!/usr/bin/env python3
"""Measure where the constrained maximizer wants to live at desk scale.

For each parameter row, equilibrate a patch pinned at the origin and one
pinned at the reference ring radius r*, and compare converged energies.
This reproduces the finding documented in the README: at b = 0 the
origin site wins for every reachable eps (the O(1) Kirchhoff-Routh
landscape dominates the ln(1/eps) ring advantage), while moderate patch
strength b > 0 flips the preference once the core is small enough.
"""

import os
import sys
from dataclasses import replace

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from helicore.config import ProblemConfig  # noqa: E402
from helicore.grid import PolarGrid, ScalarField  # noqa: E402
from helicore import elliptic, variational  # noqa: E402


def equilibrate_at(cfg, op, center, iters=80):
    grid = op.grid
    xx, yy = grid.xy()
    rho = max(1.0, np.sqrt(cfg.kappa / (np.pi * cfg.Lambda)) * 1.1)
    mask = (xx - center[0]) ** 2 + (yy - center[1]) ** 2 <= (rho * cfg.eps) ** 2
    area = float(np.sum(mask * grid.cell_area[:, None]))
    init = ScalarField(grid, np.where(mask, cfg.kappa / area, 0.0))
    state = variational.maximize(replace(cfg, max_iters=iters, tol_fix=1e-14), op, init=init)
    cx = grid.integrate(xx * state.zeta.values)
    cy = grid.integrate(yy * state.zeta.values)
    return state.energy, float(np.hypot(cx, cy))


def main():
    rows = [
        dict(eps=0.05, b=0.0),
        dict(eps=0.02, b=0.0),
        dict(eps=0.05, b=2.0),
        dict(eps=0.05, b=5.0),
    ]
    grid = PolarGrid(192, 192, 2.0)
    op = elliptic.assemble(grid, 1.0)
    print(f"{'eps':>5} {'b':>4} | {'E(origin)':>10} {'E(ring)':>10} {'winner':>7} "
          f"{'|X| ring-run':>12}")
    for row in rows:
        cfg = ProblemConfig(
            h=1.0, kappa=1.0, r_star=1.0, R=2.0, eps=row["eps"], b=row["b"],
            n_r=192, n_theta=192,
        )
        e0, _ = equilibrate_at(cfg, op, (0.0, 0.0))
        e1, x1 = equilibrate_at(cfg, op, (cfg.r_star, 0.0))
        winner = "ring" if e1 > e0 else "origin"
        print(f"{row['eps']:5.2f} {row['b']:4.1f} | {e0:10.5f} {e1:10.5f} {winner:>7} "
              f"{x1:12.3f}")


if __name__ == "__main__":
    main()
