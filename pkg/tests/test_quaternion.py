"""Test quaternion arithmetic, slices, log and powers."""
import math

import numpy as np
import pytest
from hypothesis import given, seed, settings
from hypothesis import strategies as st

from qfrac.errors import DomainError
from qfrac.quaternion import (
    E1,
    E2,
    E3,
    ONE,
    UNIT_E1,
    UNIT_E2,
    ZERO,
    ImaginaryUnit,
    Quaternion,
    arg,
    ds_metric,
    from_complex,
    on_negative_axis,
    qexp,
    qlog,
    qmul_array,
    qpow,
    slice_of,
    to_complex,
)

components = st.floats(min_value=-10.0, max_value=10.0, allow_nan=False, allow_infinity=False)
quaternions = st.builds(Quaternion, components, components, components, components)


def test_basis_table():
    """Test the Hamilton multiplication table."""
    for e in (E1, E2, E3):
        assert e * e == -ONE
    assert E1 * E2 == E3
    assert E2 * E3 == E1
    assert E3 * E1 == E2
    assert E2 * E1 == -E3
    assert E1 * E2 * E3 == -ONE


def test_real_coercion():
    """Test mixing quaternions with Python scalars."""
    q = Quaternion(1.0, 2.0, 3.0, 4.0)
    assert q + 1 == Quaternion(2.0, 2.0, 3.0, 4.0)
    assert 1 - q == Quaternion(0.0, -2.0, -3.0, -4.0)
    assert 2 * q == q * 2.0
    assert q / 2 == Quaternion(0.5, 1.0, 1.5, 2.0)
    with pytest.raises(TypeError):
        q / E1
    with pytest.raises(TypeError):
        q ** -1


def test_inverse_and_conjugate():
    """Test q q^-1 = 1 and |q|^2 = q conj(q)."""
    q = Quaternion(1.0, -2.0, 0.5, 3.0)
    assert (q * q.inverse()).is_close(ONE)
    assert (q * q.conj()).is_close(q.norm2)
    with pytest.raises(DomainError):
        ZERO.inverse()


def test_slice_decomposition():
    """Test q = q0 + I_q q1 with q1 >= 0."""
    s0, s1, unit = slice_of(Quaternion(3.0, 0.0, 4.0, 0.0))
    assert (s0, s1) == (3.0, 4.0)
    assert unit == UNIT_E2
    # real numbers get the conventional unit e1
    assert slice_of(Quaternion.real(-2.0)) == (-2.0, 0.0, UNIT_E1)
    z = to_complex(Quaternion(1.0, 0.0, -2.0, 0.0), UNIT_E2)
    assert z == complex(1.0, -2.0)
    assert from_complex(z, UNIT_E2) == Quaternion(1.0, 0.0, -2.0, 0.0)


def test_imaginary_unit_parsing():
    """Test parsing and validation of imaginary units."""
    unit = ImaginaryUnit.parse("0,3,4")
    assert unit.q.is_close(Quaternion(0.0, 0.0, 0.6, 0.8))
    assert (unit.q * unit.q).is_close(-ONE)
    assert unit.point(1.0, 5.0).is_close(Quaternion(1.0, 0.0, 3.0, 4.0))
    assert (-unit).q == -unit.q
    with pytest.raises(ValueError):
        ImaginaryUnit.parse("1,2")
    with pytest.raises(ValueError):
        ImaginaryUnit.parse("0,0,0")
    with pytest.raises(ValueError):
        ImaginaryUnit(Quaternion(1.0))


def test_argument_examples():
    """Test arg on the axes."""
    assert arg(Quaternion.real(2.0)) == 0.0
    assert arg(Quaternion.real(-1.0)) == pytest.approx(math.pi)
    assert arg(E2 * 3.0) == pytest.approx(math.pi / 2)
    assert arg(Quaternion(1.0, 0.0, 0.0, 1.0)) == pytest.approx(math.pi / 4)
    with pytest.raises(DomainError):
        arg(ZERO)


def test_log_and_power_examples():
    """Test the principal log and real powers."""
    assert qlog(E1).is_close(E1 * (math.pi / 2))
    assert qlog(Quaternion.real(math.e)).is_close(ONE)
    assert qpow(Quaternion.real(4.0), 0.5) == Quaternion.real(2.0)
    assert qpow(E1, 2.0).is_close(-ONE)
    assert qpow(E3 * 4.0, 0.5).is_close(Quaternion(math.sqrt(2.0), 0.0, 0.0, math.sqrt(2.0)))
    for bad in (Quaternion.real(-1.0), ZERO):
        with pytest.raises(DomainError):
            qlog(bad)
        with pytest.raises(DomainError):
            qpow(bad, 0.5)


def test_negative_axis_band():
    """Test the exclusion band around the negative real axis."""
    assert on_negative_axis(Quaternion.real(-3.0))
    assert on_negative_axis(Quaternion(-1.0, 1e-15, 0.0, 0.0))
    assert not on_negative_axis(Quaternion(-1.0, 1e-6, 0.0, 0.0))
    assert not on_negative_axis(Quaternion.real(2.0))


def test_sphere_metric():
    """Test d_S is zero on a sphere and matches the closed form off it."""
    assert ds_metric(Quaternion(1.0, 1.0, 0.0, 0.0), Quaternion(1.0, 0.0, 0.0, 1.0)) == 0.0
    assert ds_metric(ZERO, ONE) == 2.0
    assert ds_metric(Quaternion.real(3.0), E1) == 8.0


@seed(1)
@settings(max_examples=200)
@given(a=quaternions, b=quaternions, c=quaternions)
def test_associativity_hypothesis(a, b, c):
    """Test (ab)c = a(bc) and |ab| = |a||b|."""
    scale = (1.0 + abs(a)) * (1.0 + abs(b)) * (1.0 + abs(c))
    assert abs((a * b) * c - a * (b * c)) <= 1e-12 * scale
    assert abs(abs(a * b) - abs(a) * abs(b)) <= 1e-12 * scale


@seed(1)
@given(a=quaternions, b=quaternions)
def test_array_product_matches_scalar_product(a, b):
    """Test the vectorized Hamilton product against the scalar one."""
    product = qmul_array(a.as_array(), b.as_array())
    assert np.allclose(product, (a * b).as_array(), atol=1e-12)


@seed(1)
@settings(max_examples=200)
@given(q=quaternions)
def test_exp_log_roundtrip_hypothesis(q):
    """Test exp(log q) = q and (q^1/2)^2 = q off the negative axis."""
    if q.norm2 < 1e-6 or on_negative_axis(q) or (q.w < 0 and q.imag_norm < 1e-6):
        return
    assert qexp(qlog(q)).is_close(q, 1e-10 * (1.0 + abs(q)))
    root = qpow(q, 0.5)
    assert (root * root).is_close(q, 1e-10 * (1.0 + abs(q)))
    # the power stays in the slice of q
    assert abs(root * q - q * root) <= 1e-10 * (1.0 + abs(q)) ** 2
