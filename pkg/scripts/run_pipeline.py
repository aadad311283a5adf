#!/usr/bin/env python3
"""Run the full pipeline (solve -> evolve -> reconstruct -> green-probe)
through the CLI on the quick config and print a one-screen summary."""

import json
import os
import sys
import tempfile

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from helicore import cli  # noqa: E402

CFG = os.path.join(os.path.dirname(__file__), "configs", "quick.cfg")


def main():
    out_root = tempfile.mkdtemp(prefix="helicore_")
    dirs = {name: os.path.join(out_root, name) for name in ("solve", "evolve", "rec", "gp")}

    assert cli.main(["solve", "--config", CFG, "--out", dirs["solve"]]) == 0
    assert (
        cli.main(
            ["evolve", "--config", CFG, "--out", dirs["evolve"], "--snapshot", dirs["solve"]]
        )
        == 0
    )
    assert (
        cli.main(
            ["reconstruct", "--config", CFG, "--out", dirs["rec"], "--snapshot", dirs["solve"]]
        )
        == 0
    )
    assert cli.main(["green-probe", "--config", CFG, "--out", dirs["gp"]]) == 0

    with open(os.path.join(dirs["solve"], "maximizer.json")) as f:
        mx = json.load(f)
    with open(os.path.join(dirs["evolve"], "trajectory.json")) as f:
        traj = json.load(f)
    with open(os.path.join(dirs["rec"], "structure_report.json")) as f:
        rep = json.load(f)
    with open(os.path.join(dirs["gp"], "green_probe.json")) as f:
        gp = json.load(f)

    drift = abs(traj["diagnostics"][-1]["int_v"] - traj["diagnostics"][0]["int_v"])
    print(f"outputs under {out_root}")
    print(f"maximizer: E = {mx['energy']:.6f}, mu = {mx['mu']:.6f}, "
          f"iters = {mx['iterations']}, sup zeta = {mx['sup_zeta']:.2f}, "
          f"clamp area = {mx['clamp_area']:g}")
    print(f"evolution: {traj['n_steps']} steps to t = {traj['t_final']:.3f}, "
          f"int v drift = {drift:.2e}")
    print(f"reconstruction: max |div v| = {rep['max_div']:.2e}, "
          f"plane identities = {rep['max_plane_identity']:.2e}, "
          f"helical symmetry = {rep['max_orbit_velocity']:.1e}")
    print(f"green probe: |H0| in [{gp['min_abs_H0']:.3f}, {gp['max_abs_H0']:.3f}]")


if __name__ == "__main__":
    main()
