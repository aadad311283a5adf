from dataclasses import replace

import numpy as np
import pytest

from helicore.config import ProblemConfig
from helicore.geometry import rot2
from helicore.grid import PolarGrid, ScalarField
from helicore import diagnostics as diag
from helicore import variational


def test_quadrature_convention(grid_small):
    area = grid_small.integrate(np.ones((grid_small.n_r, grid_small.n_theta)))
    assert abs(area - np.pi * grid_small.R**2) < 1e-10


def test_support_metrics_uniform_ring(cfg_small, grid_small):
    rr, _ = grid_small.mesh()
    ring = np.where((rr >= 0.9) & (rr <= 1.1), 1.0, 0.0)
    fld = ScalarField(grid_small, ring)
    m = diag.support_metrics(fld, cfg_small)
    assert abs(m.r_min - 0.9) <= grid_small.dr
    assert abs(m.r_max - 1.1) <= grid_small.dr
    assert m.diameter >= m.r_max - m.r_min
    assert abs(m.diameter - 2.2) <= 2 * grid_small.dr
    assert m.r_min <= np.hypot(*m.center) + 1e-9 or np.hypot(*m.center) < m.r_max


def test_support_metrics_invariants(state_small, cfg_small):
    m = diag.support_metrics(state_small.zeta, cfg_small)
    c = np.hypot(*m.center)
    assert m.r_min <= c + 1e-12
    assert c <= m.r_max + 1e-12
    assert m.diameter >= m.r_max - m.r_min - 1e-12
    assert abs(m.mass - cfg_small.kappa) <= cfg_small.tol_mass * cfg_small.kappa * (1 + 1e-6)
    assert m.clamp_area == state_small.clamp_area


def test_support_metrics_rotated_field(state_small, cfg_small):
    shift = 13
    grid = state_small.zeta.grid
    rotated = ScalarField(grid, np.roll(state_small.zeta.values, shift, axis=1))
    m0 = diag.support_metrics(state_small.zeta, cfg_small)
    m1 = diag.support_metrics(rotated, cfg_small)
    for name in ("r_min", "r_max", "diameter", "inertia", "mass", "clamp_area"):
        a, b = getattr(m0, name), getattr(m1, name)
        assert abs(a - b) <= 1e-12 * max(1.0, abs(a))
    ang = shift * grid.dtheta
    expected_center = rot2(np.array(m0.center), -ang)  # roll moves the pattern CCW
    assert np.allclose(m1.center, expected_center, atol=1e-12)


def test_support_metrics_rejects_zero(cfg_small, grid_small):
    with pytest.raises(ValueError, match="empty support"):
        diag.support_metrics(
            ScalarField(grid_small, np.zeros((grid_small.n_r, grid_small.n_theta))),
            cfg_small,
        )
    with pytest.raises(ValueError, match="nonnegative"):
        diag.support_metrics(
            ScalarField(grid_small, -np.ones((grid_small.n_r, grid_small.n_theta))),
            cfg_small,
        )


def test_rescaled_profile_mass_and_cap(state_small, cfg_small):
    resc = diag.rescaled_profile(state_small.zeta, cfg_small)
    assert abs(resc["mass"] - resc["mass_target"]) < 0.01 * resc["mass_target"]
    assert resc["sup"] <= cfg_small.Lambda * (1 + 1e-9)
    assert 0.0 <= resc["asymmetry"] <= 1.0


def test_rescaled_profile_window_rejected(state_small, cfg_small):
    with pytest.raises(ValueError, match="window"):
        diag.rescaled_profile(state_small.zeta, cfg_small, window_radius=40.0)


def test_filament_distance_geometry(state_small, cfg_small):
    taus = [0.0, 1.0, 3.0]
    out = diag.filament_distance(state_small.zeta, taus, cfg_small)
    m = diag.support_metrics(state_small.zeta, cfg_small)
    # tau = 0: distance ~ diameter/2 + | |X| - r_star |
    expected = m.diameter / 2 + abs(np.hypot(*m.center) - cfg_small.r_star)
    assert abs(out[0]["distance"] - expected) < 0.6 * expected
    # rigid rotation: tau-independent to rounding
    ds = [row["distance"] for row in out]
    assert max(ds) - min(ds) < 1e-12 * max(ds)


def test_scaling_sweep_small_grid():
    cfg = ProblemConfig(
        h=1.0, kappa=1.0, r_star=1.0, R=2.0, eps=0.2, n_r=64, n_theta=64, max_iters=400
    )
    report = diag.scaling_sweep([0.3, 0.25, 0.2], cfg)
    eps_seen = [row["eps"] for row in report.rows]
    assert eps_seen == sorted(eps_seen, reverse=True)
    assert all(not row["failed"] for row in report.rows)
    for key in ("energy_slope", "mu_slope", "diameter_loglog_slope", "energy_slope_target"):
        assert key in report.fits
    assert report.fits["energy_slope_target"] == pytest.approx(0.0844, abs=5e-4)
    for row in report.rows:
        assert row["circulation_w"] == pytest.approx(cfg.kappa, rel=0.2)


def test_scaling_sweep_needs_three_values(cfg_small):
    with pytest.raises(ValueError, match="at least 3"):
        diag.scaling_sweep([0.1, 0.05], cfg_small)


def test_filament_distance_decreases_across_sweep():
    cfg = ProblemConfig(
        h=1.0, kappa=1.0, r_star=1.0, R=2.0, eps=0.2, n_r=64, n_theta=64, max_iters=400
    )
    report = diag.scaling_sweep([0.3, 0.25, 0.2], cfg, keep_fields=True)
    taus = [0.0, 2.0]
    dists = []
    for row in report.rows:
        state = row["_state"]
        out = diag.filament_distance(state.zeta, taus, cfg.with_eps(row["eps"]))
        # rigid rotation: tau-independent
        assert abs(out[0]["distance"] - out[1]["distance"]) < 1e-12 * out[0]["distance"]
        dists.append(out[0]["distance"])
    assert all(b < a for a, b in zip(dists, dists[1:]))


def test_scaling_sweep_marks_failed_rows(monkeypatch, cfg_small):
    calls = {"n": 0}
    real = diag.maximize

    def flaky(cfg, op, init=None):
        calls["n"] += 1
        if abs(cfg.eps - 0.25) < 1e-12:
            raise RuntimeError("synthetic failure")
        return real(cfg, op, init=init)

    monkeypatch.setattr(diag, "maximize", flaky)
    cfg = ProblemConfig(
        h=1.0, kappa=1.0, r_star=1.0, R=2.0, eps=0.2, n_r=64, n_theta=64, max_iters=200
    )
    report = diag.scaling_sweep([0.3, 0.25, 0.2], cfg)
    failed = [row for row in report.rows if row["failed"]]
    assert len(failed) == 1 and failed[0]["eps"] == 0.25
    assert "synthetic failure" in failed[0]["error"]
    assert "energy_slope" in report.fits  # fits computed from the surviving rows


def test_worker_count_env(monkeypatch):
    monkeypatch.delenv("HELICORE_THREADS", raising=False)
    assert diag.worker_count(8) == 1
    monkeypatch.setenv("HELICORE_THREADS", "3")
    assert diag.worker_count(8) == 3
    assert diag.worker_count(2) == 2
