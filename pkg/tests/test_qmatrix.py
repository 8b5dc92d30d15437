"""Test quaternionic matrices, the complex embedding and the file format."""
import math

import numpy as np
import pytest
from hypothesis import given, seed, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from qfrac.errors import MatrixParseError, NotInvertibleError
from qfrac.qmatrix import (
    QMatrix,
    condition_number,
    dump_matrix,
    embed,
    inverse,
    load_matrix,
    opnorm,
    parse_matrix_json,
    symplectic_defect,
)
from qfrac.quaternion import E1, E2, E3, Quaternion, qmul_array

DIMENSION = 3
entries = arrays(
    np.float64,
    (DIMENSION, DIMENSION, 4),
    elements=st.floats(min_value=-5.0, max_value=5.0, allow_nan=False, allow_infinity=False),
)


def test_embedding_of_basis():
    """Test the 2x2 complex cells of the units."""
    assert np.array_equal(embed(QMatrix.diag([E2])), np.array([[0, 1], [-1, 0]], dtype=complex))
    assert np.array_equal(embed(QMatrix.diag([E1])), np.array([[1j, 0], [0, -1j]]))
    assert np.array_equal(embed(QMatrix.diag([E3])), np.array([[0, 1j], [1j, 0]]))


def test_from_embedding_inverts_embed(sectorial3):
    """Test the embedding is injective on QMatrix."""
    assert QMatrix.from_embedding(embed(sectorial3)).allclose(sectorial3, atol=0.0)
    assert symplectic_defect(embed(sectorial3)) == 0.0


@seed(1)
@settings(max_examples=50)
@given(a=entries, b=entries)
def test_embedding_is_multiplicative(a, b):
    """Test embed(AB) = embed(A) embed(B) and embed(A + B) = embed(A) + embed(B)."""
    A, B = QMatrix(a), QMatrix(b)
    assert np.allclose(embed(A @ B), embed(A) @ embed(B), atol=1e-10)
    assert np.allclose(embed(A + B), embed(A) + embed(B), atol=0.0)


@seed(1)
@settings(max_examples=50)
@given(a=entries, v=arrays(np.float64, (DIMENSION, 4), elements=st.floats(-5.0, 5.0)))
def test_right_linearity(a, v):
    """Test T(v q) = (T v) q for a quaternion scalar q."""
    T = QMatrix(a)
    q = Quaternion(0.3, -1.2, 0.7, 2.0).as_array()
    assert np.allclose(T.apply(qmul_array(v, q)), qmul_array(T.apply(v), q), atol=1e-10)


def test_scalar_multiplication_sides():
    """Test q * T multiplies entries on the left and T * q on the right."""
    T = QMatrix.diag([E2])
    assert (E1 * T).entry(0, 0) == E3
    assert (T * E1).entry(0, 0) == -E3
    assert (2.0 * T) == (T * 2)
    assert (T / 2.0).entry(0, 0) == E2 * 0.5


def test_inverse(sectorial3):
    """Test T T^-1 = Id and the integer powers built on it."""
    T_inv = inverse(sectorial3)
    identity = QMatrix.identity(3)
    assert (sectorial3 @ T_inv).allclose(identity, atol=1e-10)
    assert (T_inv @ sectorial3).allclose(identity, atol=1e-10)
    assert sectorial3.power(-1).allclose(T_inv, atol=0.0)
    assert sectorial3.power(3).allclose(sectorial3 @ sectorial3 @ sectorial3, atol=1e-12)
    assert sectorial3.power(0) == identity


def test_inverse_of_quaternion_scalar():
    """Test (q Id)^-1 = q^-1 Id."""
    q = Quaternion(1.0, 2.0, -1.0, 0.5)
    assert inverse(QMatrix.scalar(q, 2)).allclose(QMatrix.scalar(q.inverse(), 2), atol=1e-14)


def test_singular_matrix_raises():
    """Test a singular matrix is rejected with its condition number."""
    T = QMatrix.from_entries([[1.0, E1], [E1 * -1.0, 1.0]])
    # row 2 = -e1 * row 1
    with pytest.raises(NotInvertibleError) as excinfo:
        inverse(T)
    assert excinfo.value.condition > 1e13
    assert excinfo.value.exit_code == 3
    assert condition_number(QMatrix.identity(2)) == pytest.approx(1.0)


def test_operator_norm():
    """Test the operator norm on simple matrices."""
    assert opnorm(QMatrix.diag([3.0, E1])) == pytest.approx(3.0)
    assert opnorm(QMatrix.scalar(Quaternion(1.0, 1.0, 0.0, 0.0), 2)) == pytest.approx(math.sqrt(2.0))
    assert opnorm(QMatrix.from_real(np.array([[0.0, 2.0], [0.0, 0.0]]))) == pytest.approx(2.0)
    assert opnorm(QMatrix.zeros(2)) == 0.0


def test_matrix_is_immutable_and_hashable():
    """Test the backing array is read-only and equal matrices hash alike."""
    T = QMatrix.identity(2)
    with pytest.raises(ValueError):
        T.data[0, 0, 0] = 5.0
    assert hash(T) == hash(QMatrix.diag([1.0, 1.0]))
    assert T == QMatrix.diag([1.0, 1.0])
    assert T != QMatrix.identity(3)


def test_bad_shape_rejected():
    """Test construction from arrays of the wrong shape."""
    with pytest.raises(ValueError):
        QMatrix(np.zeros((2, 3, 4)))
    with pytest.raises(ValueError):
        QMatrix(np.zeros((2, 2)))
    with pytest.raises(ValueError):
        QMatrix.identity(2) @ QMatrix.identity(3)


def test_file_roundtrip(tmp_path, sectorial3):
    """Test dump_matrix output loads back to the same matrix."""
    path = tmp_path / "t.json"
    path.write_text(dump_matrix(sectorial3), encoding="utf-8")
    assert load_matrix(path) == sectorial3


def test_parse_error_reports_position():
    """Test malformed JSON carries line and column."""
    text = '{\n  "n": 1,\n  "entries": [[[1, 0, 0, 0]]\n'
    with pytest.raises(MatrixParseError) as excinfo:
        parse_matrix_json(text)
    assert excinfo.value.line is not None
    assert excinfo.value.column is not None
    assert excinfo.value.exit_code == 2


@pytest.mark.parametrize(
    "text",
    [
        '{"n": 2, "entries": [[[1, 0, 0, 0], [0, 0, 0, 0]]]}',
        '{"n": 1, "entries": [[[1, 0, 0]]]}',
        '{"n": 1, "entries": [[[1, 0, 0, 0], [1, 0, 0, 0]]]}',
        '{"n": 0, "entries": []}',
        '{"n": 1, "entries": [[[NaN, 0, 0, 0]]]}',
        '{"n": 1, "entries": [[["a", 0, 0, 0]]]}',
        '{"entries": [[[1, 0, 0, 0]]]}',
    ],
)
def test_invalid_matrix_files(text):
    """Test shape, type and finiteness checks of the file format."""
    with pytest.raises(MatrixParseError):
        parse_matrix_json(text)


def test_missing_file(tmp_path):
    """Test an unreadable path is reported as a parse error."""
    with pytest.raises(MatrixParseError):
        load_matrix(tmp_path / "missing.json")
