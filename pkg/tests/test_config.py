"""Test configuration management."""
import math

import pytest
from pydantic import ValidationError

from qfrac.config import QFracConfig
from qfrac.quaternion import UNIT_E1

ENV_VARS = (
    "QFRAC_SEED",
    "QFRAC_REL_TOL",
    "QFRAC_ABS_TOL",
    "QFRAC_MAX_SUBDIV",
    "QFRAC_WORKERS",
    "QFRAC_GRID_POINTS",
    "QFRAC_GRID_MIN",
    "QFRAC_GRID_MAX",
    "QFRAC_PLANE",
    "LOG_LEVEL",
    "DEBUG",
)


@pytest.fixture
def clean_env(monkeypatch):
    for name in ENV_VARS:
        monkeypatch.delenv(name, raising=False)
    return monkeypatch


def test_default_config(clean_env):
    """Test default configuration values."""
    config = QFracConfig(_env_file=None)
    assert config.qfrac_seed is None
    assert config.qfrac_rel_tol == 1e-10
    assert config.qfrac_abs_tol == 1e-12
    assert config.qfrac_max_subdiv == 10000
    assert config.qfrac_workers == 1
    assert config.qfrac_grid_points == 200
    assert config.log_level == "WARNING"
    assert config.debug is False


def test_environment_overrides(clean_env):
    """Test values are read from the environment."""
    clean_env.setenv("QFRAC_SEED", "42")
    clean_env.setenv("QFRAC_REL_TOL", "1e-6")
    clean_env.setenv("LOG_LEVEL", "info")
    config = QFracConfig(_env_file=None)
    assert config.qfrac_seed == 42
    assert config.qfrac_rel_tol == 1e-6
    assert config.log_level == "INFO"


def test_dotenv_file(clean_env, tmp_path):
    """Test a .env file is honoured."""
    env_file = tmp_path / ".env"
    env_file.write_text("QFRAC_GRID_POINTS=50\nQFRAC_PLANE=0,1,0\n", encoding="utf-8")
    config = QFracConfig(_env_file=env_file)
    assert config.qfrac_grid_points == 50
    assert config.default_plane.q.y == 1.0


def test_invalid_values_rejected(clean_env):
    """Test field constraints."""
    clean_env.setenv("QFRAC_REL_TOL", "-1")
    with pytest.raises(ValidationError):
        QFracConfig(_env_file=None)


def test_effective_log_level(clean_env):
    """Test the debug flag forces DEBUG."""
    config = QFracConfig(_env_file=None)
    assert config.effective_log_level == "WARNING"
    config = QFracConfig(_env_file=None, debug=True)
    assert config.effective_log_level == "DEBUG"


def test_quadrature_defaults(clean_env):
    """Test the quadrature settings built from the configuration."""
    clean_env.setenv("QFRAC_ABS_TOL", "1e-9")
    clean_env.setenv("QFRAC_WORKERS", "2")
    cfg = QFracConfig(_env_file=None).quadrature_defaults
    assert cfg.abs_tol == 1e-9
    assert cfg.rel_tol == 1e-10
    assert cfg.workers == 2
    assert cfg.to_json()["absTol"] == 1e-9


def test_default_plane(clean_env):
    """Test the contour plane defaults to e1 and is normalized."""
    assert QFracConfig(_env_file=None).default_plane == UNIT_E1
    clean_env.setenv("QFRAC_PLANE", "0,3,4")
    plane = QFracConfig(_env_file=None).default_plane
    assert plane.q.z == pytest.approx(0.8)
    assert math.isclose(abs(plane.q), 1.0)
