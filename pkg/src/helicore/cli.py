"""Experiment orchestration: `helicore <subcommand> --config <path> --out <dir>`.

Subcommands:

    solve        maximize the vortex energy, emit (zeta, psi, swirl) fields,
                 the maximizer record, and support metrics
    evolve       build the rotating state (from --snapshot or a fresh solve)
                 and integrate it for t = 0.25/alpha_bar with checkpoints
    reconstruct  lift a solved state to a 3D sample cloud + structure report
    scaling      eps sweep (default 0.08,0.05,0.03,0.02 or --eps-list)
    green-probe  point-source Green decomposition report
    selftest     fast invariant suite; exit 0 iff everything passes

Every run writes a manifest.json with stage timings and content hashes of
all emitted files.  HELICORE_THREADS caps sweep parallelism.
"""

from __future__ import annotations

import argparse
import os
import sys
import time

import numpy as np

from . import __version__
from .config import ConfigError, parse_config
from .grid import PolarGrid, ScalarField, read_field_csv, write_field_csv
from . import elliptic, evolution, reconstruct3d, variational
from . import diagnostics as diag
from .io_utils import Manifest, write_json

DEFAULT_EPS_SWEEP = (0.08, 0.05, 0.03, 0.02)


class StageFailure(RuntimeError):
    def __init__(self, stage, cause):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage


def _build_operator(cfg):
    grid = PolarGrid(cfg.n_r, cfg.n_theta, cfg.R)
    return grid, elliptic.assemble(grid, cfg.h)


def _maximizer_outputs(cfg, out_dir, manifest):
    grid, op = _build_operator(cfg)
    t0 = time.perf_counter()
    state = variational.maximize(cfg, op)
    manifest.add_stage("maximize", time.perf_counter() - t0)

    swirl = variational.swirl_from_psi(state.psi, cfg)
    for name, fld in (("zeta", state.zeta), ("psi", state.psi), ("swirl", swirl)):
        path = os.path.join(out_dir, f"{name}.csv")
        write_field_csv(path, fld, cfg.h)
        manifest.add_file(path)

    record = state.summary()
    record["per_step"] = state.iteration_log
    path = os.path.join(out_dir, "maximizer.json")
    write_json(path, record)
    manifest.add_file(path)

    metrics = diag.support_metrics(state.zeta, cfg)
    mpath = os.path.join(out_dir, "metrics.json")
    write_json(mpath, metrics.as_dict())
    manifest.add_file(mpath)
    return state, op


def cmd_solve(cfg, out_dir, args, manifest):
    _maximizer_outputs(cfg, out_dir, manifest)
    return 0


def _load_snapshot(cfg, snapshot_dir):
    zeta, h = read_field_csv(os.path.join(snapshot_dir, "zeta.csv"))
    psi, _ = read_field_csv(os.path.join(snapshot_dir, "psi.csv"))
    if abs(h - cfg.h) > 1e-14 * max(1.0, abs(cfg.h)):
        raise ConfigError(f"snapshot pitch h={h} does not match config h={cfg.h}")
    import json as _json

    with open(os.path.join(snapshot_dir, "maximizer.json")) as f:
        record = _json.load(f)
    state = variational.MaximizerState(
        zeta=zeta, psi=psi, mu=float(record["mu"]), energy=float(record["energy"])
    )
    return state


def cmd_evolve(cfg, out_dir, args, manifest):
    if args.snapshot:
        state = _load_snapshot(cfg, args.snapshot)
        grid = state.zeta.grid
        op = elliptic.assemble(grid, cfg.h)
    else:
        state, op = _maximizer_outputs(cfg, out_dir, manifest)
        grid = op.grid

    est = evolution.rotating_state(state, cfg, op)
    t_final = 0.25 / cfg.alpha_bar
    dt = evolution.suggest_dt(est, op, cfg.dt_safety)
    n_steps = int(np.ceil(t_final / dt))
    checkpoint_every = max(1, n_steps // 4)

    t0 = time.perf_counter()
    failure = None
    try:
        traj = evolution.evolve(
            est, t_final, dt, op, checkpoint_every=checkpoint_every, tol=cfg.tol_elliptic
        )
    except evolution.TrajectoryError as exc:
        traj = exc.partial  # flush what integrated before the abort
        failure = exc
    manifest.add_stage("evolve", time.perf_counter() - t0)

    checkpoints = list(traj.checkpoints)
    last_idx = len(traj.times) - 1
    if not checkpoints or checkpoints[-1][0] != last_idx:
        checkpoints.append((last_idx, traj.final))
    for step_idx, chk in checkpoints:
        for name in ("v", "w", "phi"):
            path = os.path.join(out_dir, f"checkpoint_{step_idx:06d}_{name}.csv")
            write_field_csv(path, getattr(chk, name), cfg.h)
            manifest.add_file(path)

    record = {
        "t_final": traj.final.t,
        "dt": dt,
        "n_steps": len(traj.times) - 1,
        "alpha_bar": cfg.alpha_bar,
        "times": traj.times,
        "diagnostics": traj.diagnostics,
    }
    if failure is not None:
        record["aborted"] = str(failure)
    path = os.path.join(out_dir, "trajectory.json")
    write_json(path, record)
    manifest.add_file(path)
    if failure is not None:
        raise StageFailure("evolve", failure)
    return 0


def cmd_reconstruct(cfg, out_dir, args, manifest):
    if args.snapshot:
        state = _load_snapshot(cfg, args.snapshot)
        grid = state.zeta.grid
        op = elliptic.assemble(grid, cfg.h)
    else:
        state, op = _maximizer_outputs(cfg, out_dir, manifest)
        grid = op.grid

    est = evolution.rotating_state(state, cfg, op)
    fields = reconstruct3d.LiftedFields.from_fields(est.v, est.w, est.phi, cfg.h)
    rng = np.random.default_rng(cfg.seed)
    mask = reconstruct3d.free_boundary_mask(state.psi, rings=4)
    pts = reconstruct3d.sample_points_3d(grid, cfg.h, 10_000, rng, exclude_mask=mask)

    t0 = time.perf_counter()
    cloud = reconstruct3d.sample_cloud(fields, pts)
    cpath = os.path.join(out_dir, "cloud.csv")
    reconstruct3d.write_cloud_csv(cpath, cloud)
    manifest.add_file(cpath)

    report = reconstruct3d.check_structure(fields, pts[:2000], fd_step=5e-4)
    manifest.add_stage("reconstruct", time.perf_counter() - t0)
    rpath = os.path.join(out_dir, "structure_report.json")
    write_json(rpath, report)
    manifest.add_file(rpath)
    return 0


def cmd_scaling(cfg, out_dir, args, manifest):
    eps_list = DEFAULT_EPS_SWEEP if not args.eps_list else tuple(
        float(tok) for tok in args.eps_list.split(",")
    )
    t0 = time.perf_counter()
    report = diag.scaling_sweep(eps_list, cfg, keep_fields=args.row_snapshots)
    manifest.add_stage("scaling", time.perf_counter() - t0)
    rows_out = []
    for row in report.rows:
        row = dict(row)
        state = row.pop("_state", None)
        if state is not None and args.row_snapshots:
            path = os.path.join(out_dir, "zeta_eps_%s.csv" % ("%g" % row["eps"]).replace(".", "p"))
            write_field_csv(path, state.zeta, cfg.h)
            manifest.add_file(path)
        rows_out.append(row)
    path = os.path.join(out_dir, "scaling.json")
    write_json(path, {"rows": rows_out, "fits": report.fits})
    manifest.add_file(path)
    return 0


def cmd_green_probe(cfg, out_dir, args, manifest):
    grid, op = _build_operator(cfg)
    rng = np.random.default_rng(cfg.seed)
    t0 = time.perf_counter()
    reports = []
    for _ in range(4):
        r0 = rng.uniform(0.2 * cfg.R, 0.6 * cfg.R)
        th0 = rng.uniform(0, 2 * np.pi)
        x0 = [r0 * np.cos(th0), r0 * np.sin(th0)]
        _, _, src_cell = elliptic.point_source(grid, x0)
        seps = np.geomspace(2 * grid.dr, cfg.R / 4, 5)
        probes = []
        for s in seps:
            for a in (0.0, np.pi / 2):
                y = [x0[0] + s * np.cos(a), x0[1] + s * np.sin(a)]
                # drop probes that snap into the source cell (coarse grids)
                if elliptic.point_source(grid, y)[2] != src_cell:
                    probes.append(y)
        reports.append(elliptic.green_probe(op, x0, probes, tol=cfg.tol_elliptic))
    manifest.add_stage("green-probe", time.perf_counter() - t0)
    h0_all = [abs(p["H0"]) for rep in reports for p in rep["probes"]]
    summary = {
        "sources": reports,
        "max_abs_H0": max(h0_all),
        "min_abs_H0": min(h0_all),
    }
    path = os.path.join(out_dir, "green_probe.json")
    write_json(path, summary)
    manifest.add_file(path)
    return 0


def cmd_selftest(cfg, out_dir, args, manifest):
    """Fast invariant suite on a reduced grid; one pass/fail line per check."""
    from dataclasses import replace

    results = []

    def check(name, fn):
        t0 = time.perf_counter()
        try:
            fn()
            results.append({"check": name, "passed": True, "seconds": time.perf_counter() - t0})
            print(f"PASS {name}")
        except Exception as exc:
            results.append(
                {
                    "check": name,
                    "passed": False,
                    "seconds": time.perf_counter() - t0,
                    "error": str(exc),
                }
            )
            print(f"FAIL {name}: {exc}")

    small = replace(
        cfg, n_r=min(cfg.n_r, 96), n_theta=min(cfg.n_theta, 96), eps=max(cfg.eps, 0.1),
        max_iters=min(cfg.max_iters, 300),
    )
    grid = PolarGrid(small.n_r, small.n_theta, small.R)
    op = elliptic.assemble(grid, small.h)
    rr, _ = grid.mesh()

    def quadrature():
        area = grid.integrate(np.ones_like(rr))
        assert abs(area - np.pi * small.R**2) < 1e-10, f"area off by {area - np.pi * small.R**2}"

    def manufactured():
        f = 4 * small.h**4 / (small.h**2 + rr**2) ** 2
        u = op.solve(f, tol=1e-10)
        exact = small.R**2 - rr**2
        rel = grid.norm_l2(u - exact) / grid.norm_l2(exact)
        assert rel < 5e-3, f"relative error {rel}"

    def operator_symmetry():
        rng = np.random.default_rng(small.seed)
        u, v = rng.normal(size=rr.shape), rng.normal(size=rr.shape)
        gap = abs(grid.inner(op.apply(u), v) - grid.inner(u, op.apply(v)))
        assert gap < 1e-10, f"symmetry gap {gap}"

    def conjugacy():
        from .profiles import coef_linear, penalty_J, primitive_I

        rng = np.random.default_rng(small.seed)
        for _ in range(50):
            r = rng.uniform(0, small.R)
            s = rng.uniform(0, 3.0)
            t_max = 2.0 * s / float(coef_linear(r, small)) + 1.0
            ts = np.linspace(0.0, t_max, 20001)
            brute = np.max(s * ts - primitive_I(r, ts, small))
            val = penalty_J(r, s, small)
            assert abs(val - brute) < 1e-6, f"J mismatch {val - brute}"

    def maximizer_small():
        state = variational.maximize(small, op)
        vals = state.zeta.values
        assert vals.min() >= 0 and vals.max() <= small.cap * (1 + 1e-12)
        assert abs(state.mass - small.kappa) <= small.tol_mass * small.kappa * (1 + 1e-6)
        energies = [row["energy"] for row in state.iteration_log]
        assert all(b - a >= -1e-10 for a, b in zip(energies, energies[1:]))

    def geometry_identities():
        from .geometry import coefficient_matrix, factor_T

        rng = np.random.default_rng(small.seed)
        for _ in range(200):
            x = rng.uniform(-small.R, small.R, size=2)
            if np.hypot(*x) > small.R:
                continue
            K = coefficient_matrix(x, small.h)
            det = np.linalg.det(K)
            assert abs(det * (small.h**2 + x @ x) - small.h**2) < 1e-12
            T = factor_T(x, small.h)
            err = np.abs(np.linalg.inv(T) @ np.linalg.inv(T).T - K).max()
            assert err < 1e-12

    check("quadrature_exact", quadrature)
    check("elliptic_manufactured", manufactured)
    check("operator_symmetry", operator_symmetry)
    check("profile_conjugacy", conjugacy)
    check("geometry_identities", geometry_identities)
    check("maximizer_invariants", maximizer_small)

    path = os.path.join(out_dir, "selftest.json")
    write_json(path, {"results": results})
    manifest.add_file(path)
    if not all(r["passed"] for r in results):
        raise StageFailure("selftest", "one or more invariant checks failed")
    return 0


COMMANDS = {
    "solve": cmd_solve,
    "evolve": cmd_evolve,
    "reconstruct": cmd_reconstruct,
    "scaling": cmd_scaling,
    "green-probe": cmd_green_probe,
    "selftest": cmd_selftest,
}


def main(argv=None):
    parser = argparse.ArgumentParser(prog="helicore", description=__doc__)
    parser.add_argument("subcommand", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="flat key = value config file")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--snapshot", default=None, help="directory of a prior solve")
    parser.add_argument("--eps-list", default=None, help="comma-separated eps sweep values")
    parser.add_argument(
        "--row-snapshots", action="store_true", help="emit per-row zeta fields in scaling"
    )
    args = parser.parse_args(argv)

    try:
        cfg = parse_config(args.config)
    except (ConfigError, OSError) as exc:
        print(f"stage 'config' failed: {exc}", file=sys.stderr)
        return 2
    for warning in cfg.warnings:
        print(f"warning: {warning}", file=sys.stderr)

    os.makedirs(args.out, exist_ok=True)
    manifest = Manifest(cfg.as_dict(), __version__)
    t0 = time.perf_counter()
    try:
        rc = COMMANDS[args.subcommand](cfg, args.out, args, manifest)
    except StageFailure as exc:
        print(str(exc), file=sys.stderr)
        manifest.add_stage("total", time.perf_counter() - t0)
        manifest.write(args.out)
        return 1
    except Exception as exc:
        print(f"stage '{args.subcommand}' failed: {exc}", file=sys.stderr)
        return 1
    manifest.add_stage("total", time.perf_counter() - t0)
    manifest.write(args.out)
    return rc


if __name__ == "__main__":
    sys.exit(main())
