import math

import pytest
from hypothesis import given, settings
import hypothesis.strategies as st

from helicore.config import ConfigError, ProblemConfig, parse_config


def write_cfg(tmp_path, text, name="run.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


MINIMAL = """
h = 1.0
kappa = 1.0
r_star = 1.0
R = 2.0
eps = 0.05
"""


def test_minimal_file_defaults(tmp_path):
    cfg = parse_config(write_cfg(tmp_path, MINIMAL))
    assert cfg.alpha == 1.0 / (4 * math.pi * math.sqrt(2.0))
    assert cfg.alpha_bar == cfg.alpha * math.log(1 / 0.05)
    assert cfg.n_r == 256 and cfg.n_theta == 256
    assert cfg.Lambda == 4.0 * (cfg.alpha * cfg.a + cfg.b + 1.0)


def test_lambda_zero_rejected(tmp_path):
    with pytest.raises(ConfigError, match=r"Λ > max\{αa\+b, 1\+πR²/κ\}"):
        parse_config(write_cfg(tmp_path, MINIMAL + "Lambda = 0\n"))


def test_r_star_beyond_R_rejected(tmp_path):
    with pytest.raises(ConfigError, match="r_star"):
        parse_config(write_cfg(tmp_path, MINIMAL.replace("r_star = 1.0", "r_star = 2.5")))


def test_unknown_key_rejected(tmp_path):
    with pytest.raises(ConfigError, match="unknown key"):
        parse_config(write_cfg(tmp_path, MINIMAL + "swirliness = 3\n"))


def test_missing_key_rejected(tmp_path):
    with pytest.raises(ConfigError, match="missing required"):
        parse_config(write_cfg(tmp_path, "h = 1.0\nkappa = 1.0\n"))


def test_duplicate_key_rejected(tmp_path):
    with pytest.raises(ConfigError, match="duplicate"):
        parse_config(write_cfg(tmp_path, MINIMAL + "eps = 0.01\n"))


def test_zero_swirl_branch_rejected(tmp_path):
    with pytest.raises(ConfigError, match="out of scope"):
        parse_config(write_cfg(tmp_path, MINIMAL + "a = 0\n"))


def test_small_lambda_warns_not_rejects(tmp_path):
    cfg = parse_config(write_cfg(tmp_path, MINIMAL + "Lambda = 4.2\n"))
    assert cfg.warnings and "proof-side" in cfg.warnings[0]


def test_comments_and_blank_lines(tmp_path):
    cfg = parse_config(write_cfg(tmp_path, "# header\n\n" + MINIMAL + "  # trailing\n"))
    assert cfg.eps == 0.05


@settings(max_examples=100, deadline=None)
@given(
    h=st.floats(0.2, 4.0),
    kappa=st.floats(0.2, 4.0),
    frac=st.floats(0.15, 0.85),
    R=st.floats(0.5, 5.0),
    eps=st.floats(0.01, 0.6),
)
def test_derived_constants(h, kappa, frac, R, eps):
    cfg = ProblemConfig(h=h, kappa=kappa, r_star=frac * R, R=R, eps=eps)
    expected = kappa / (4 * math.pi * h * math.sqrt(h * h + (frac * R) ** 2))
    assert math.isclose(cfg.alpha, expected, rel_tol=1e-15)
    assert math.isclose(cfg.alpha_bar, cfg.alpha * math.log(1 / eps), rel_tol=1e-15)
    assert cfg.Lambda > cfg.alpha * cfg.a + cfg.b
