import numpy as np
import pytest

from helicore.config import ProblemConfig
from helicore.grid import PolarGrid
from helicore import elliptic, variational

ACCEPTANCE_LINES = []


def record_acceptance(line):
    ACCEPTANCE_LINES.append(line)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def cfg_small():
    return ProblemConfig(
        h=1.0, kappa=1.0, r_star=1.0, R=2.0, eps=0.1, n_r=96, n_theta=96, max_iters=2000
    )


@pytest.fixture(scope="session")
def grid_small(cfg_small):
    return PolarGrid(cfg_small.n_r, cfg_small.n_theta, cfg_small.R)


@pytest.fixture(scope="session")
def op_small(cfg_small, grid_small):
    return elliptic.assemble(grid_small, cfg_small.h)


@pytest.fixture(scope="session")
def state_small(cfg_small, op_small):
    """Converged maximizer at desk-test scale (shared across modules)."""
    return variational.maximize(cfg_small, op_small)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(1234)
