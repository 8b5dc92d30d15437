"""Shared fixtures: seeded generators and small sample matrices."""
import numpy as np
import pytest

from qfrac.qmatrix import QMatrix, dump_matrix
from qfrac.quaternion import E1, E2
from qfrac.sampling import random_sectorial


@pytest.fixture
def rng():
    """Seeded generator; every test gets a fresh stream."""
    return np.random.default_rng(20240611)


@pytest.fixture
def identity3():
    return QMatrix.identity(3)


@pytest.fixture
def sectorial3(rng):
    return random_sectorial(3, rng)


@pytest.fixture
def imaginary_diag():
    """diag(e1, 2 e2): spheres (0, 1) and (0, 2)."""
    return QMatrix.diag([E1, E2 * 2.0])


@pytest.fixture
def write_matrix(tmp_path):
    """Write a QMatrix to a JSON file and return its path."""

    def _write(T: QMatrix, name: str = "matrix.json"):
        path = tmp_path / name
        path.write_text(dump_matrix(T), encoding="utf-8")
        return path

    return _write
