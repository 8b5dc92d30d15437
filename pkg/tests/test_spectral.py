"""Test the S-spectrum, the S-resolvents and the sector estimate."""
import math

import numpy as np
import pytest
import scipy.linalg

from qfrac.errors import NotSectorialError, NumericalError, SpectralSingularityError
from qfrac.qmatrix import QMatrix, inverse, opnorm
from qfrac.quaternion import E1, E2, UNIT_E2, Quaternion
from qfrac.sampling import random_qmatrix, random_resolvent_point
from qfrac.spectral import (
    RESIDUAL_TOL,
    defect_tolerance,
    neumann_pseudo_resolvent,
    pseudo_resolvent,
    pseudo_resolvent_derivatives,
    q_operator,
    s_spectrum,
    sector_estimate,
    sresolvent_left,
    sresolvent_left_pow,
    sresolvent_right,
    sresolvent_right_pow,
    strip_constant,
)


def _spheres(T):
    return [(sp.s0, sp.s1, sp.multiplicity) for sp in s_spectrum(T).spheres]


def test_spectrum_of_identity(identity3):
    """Test Id has the single sphere {1} with multiplicity n."""
    report = s_spectrum(identity3)
    assert len(report.spheres) == 1
    sphere = report.spheres[0]
    assert sphere.s0 == pytest.approx(1.0)
    assert sphere.s1 == 0.0
    assert sphere.multiplicity == 3
    assert report.dimension == 3
    assert report.max_arg == 0.0


def test_spectrum_of_imaginary_diagonal(imaginary_diag):
    """Test diag(e1, 2 e2) has the spheres (0, 1) and (0, 2)."""
    spheres = _spheres(imaginary_diag)
    assert len(spheres) == 2
    assert spheres[0][0] == pytest.approx(0.0, abs=1e-12)
    assert sorted(sp[1] for sp in spheres) == pytest.approx([1.0, 2.0])
    report = s_spectrum(imaginary_diag)
    assert report.max_arg == pytest.approx(math.pi / 2)
    assert report.max_modulus == pytest.approx(2.0)
    # every point of a sphere belongs to the spectrum
    assert report.contains(Quaternion(0.0, 0.0, 0.6, 0.8))
    assert not report.contains(Quaternion(0.0, 0.0, 0.0, 1.5))


def test_spectrum_of_real_rotation():
    """Test a real 2x2 rotation has the sphere of e1 with multiplicity 2."""
    T = QMatrix.from_real(np.array([[0.0, 1.0], [-1.0, 0.0]]))
    spheres = _spheres(T)
    assert len(spheres) == 1
    s0, s1, multiplicity = spheres[0]
    assert s0 == pytest.approx(0.0, abs=1e-12)
    assert s1 == pytest.approx(1.0)
    assert multiplicity == 2


def test_spectrum_is_similarity_invariant(sectorial3):
    """Test the spheres of S D S^-1 are the spheres of D."""
    report = s_spectrum(sectorial3)
    assert report.dimension == 3
    for sphere in report.spheres:
        assert sphere.residual < 1e-8
        assert sphere.arg < 0.75 * math.pi + 1e-8
        assert 0.5 - 1e-8 <= sphere.modulus <= 2.0 + 1e-8


def _similar(J: np.ndarray, seed: int):
    n = J.shape[0]
    S = QMatrix.identity(n) + random_qmatrix(n, np.random.default_rng(seed), 0.3)
    return S @ QMatrix.from_real(J) @ inverse(S)


def _assert_single_eigenvalue(T, lam, n):
    report = s_spectrum(T)
    assert report.dimension == n
    for sphere in report.spheres:
        assert abs(sphere.s0 - lam) < 1e-3
        assert sphere.s1 < 1e-3
        assert sphere.residual <= RESIDUAL_TOL * (1.0 + report.max_modulus) ** 2


def test_spectrum_of_jordan_block_2x2():
    """Test S J S^-1 with a 2x2 Jordan block at 2 under 50 random similarities."""
    J = np.array([[2.0, 1.0], [0.0, 2.0]])
    for seed in range(50):
        _assert_single_eigenvalue(_similar(J, seed), 2.0, 2)


def test_spectrum_of_jordan_block_3x3():
    """Test S J S^-1 with a 3x3 Jordan block at 1 under random similarities."""
    J = np.array([[1.0, 1.0, 0.0], [0.0, 1.0, 1.0], [0.0, 0.0, 1.0]])
    for seed in range(10):
        _assert_single_eigenvalue(_similar(J, seed), 1.0, 3)


def test_jordan_block_next_to_simple_eigenvalue():
    """Test a defective eigenvalue does not swallow a distinct one."""
    J = np.array([[1.0, 1.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 3.0]])
    for seed in range(10):
        report = s_spectrum(_similar(J, seed))
        assert report.dimension == 3
        at_three = [sp for sp in report.spheres if abs(sp.s0 - 3.0) < 1e-6]
        assert len(at_three) == 1
        assert at_three[0].multiplicity == 1
        assert all(abs(sp.s0 - 1.0) < 1e-3 for sp in report.spheres if sp is not at_three[0])


def test_defect_tolerance():
    """Test the defect tolerance grows with the block size and is capped."""
    assert defect_tolerance(2, 0.0) == pytest.approx(1e-4)
    assert defect_tolerance(2, 1.0) == pytest.approx(2e-4)
    assert defect_tolerance(3, 0.0) < defect_tolerance(4, 0.0) < defect_tolerance(8, 0.0)
    assert defect_tolerance(40, 1.0) == pytest.approx(2e-2)


def test_spectrum_rejects_non_singular_sphere(monkeypatch):
    """Test a sphere where Q_s(T) is far from singular raises NumericalError."""
    monkeypatch.setattr(scipy.linalg, "svdvals", lambda a: np.array([1.0]))
    T = QMatrix.diag([3.25, Quaternion(1.5, 0.0, 0.0, 0.75)])
    with pytest.raises(NumericalError, match="not singular"):
        s_spectrum(T)


def test_negative_axis_and_origin():
    """Test detection of spheres on (-inf, 0]."""
    assert s_spectrum(QMatrix.diag([-1.0, 2.0])).touches_negative_axis()
    with_origin = s_spectrum(QMatrix.diag([0.0, 2.0]))
    assert with_origin.has_origin()
    assert with_origin.touches_negative_axis()
    assert not with_origin.touches_negative_axis(include_origin=False)
    assert not s_spectrum(QMatrix.diag([E1 + 2.0])).touches_negative_axis()


def test_left_resolvent_example():
    """Test S_L^-1(2, e1 Id) = (2 + e1) / 5 Id."""
    T = QMatrix.scalar(E1, 2)
    expected = QMatrix.scalar((E1 + 2.0) / 5.0, 2)
    assert sresolvent_left(Quaternion.real(2.0), T).allclose(expected, atol=1e-14)
    assert sresolvent_right(Quaternion.real(2.0), T).allclose(expected, atol=1e-14)


def test_resolvent_on_spectrum_raises():
    """Test every point of a spectral sphere is rejected."""
    T = QMatrix.diag([E1])
    for s in (E1, E2, Quaternion(0.0, 0.0, 0.6, -0.8)):
        with pytest.raises(SpectralSingularityError):
            sresolvent_left(s, T)
        with pytest.raises(SpectralSingularityError):
            sresolvent_right(s, T)


def test_resolvent_equations(sectorial3, rng):
    """Test S_L s - T S_L = Id and s S_R - S_R T = Id at random points."""
    spectrum = s_spectrum(sectorial3)
    identity = QMatrix.identity(3)
    for _ in range(20):
        s = random_resolvent_point(rng, spectrum)
        left = sresolvent_left(s, sectorial3)
        right = sresolvent_right(s, sectorial3)
        tol = 1e-10 * (1.0 + abs(s)) * (1.0 + opnorm(sectorial3)) * (1.0 + opnorm(left) + opnorm(right))
        assert opnorm(left * s - sectorial3 @ left - identity) <= tol
        assert opnorm(s * right - right @ sectorial3 - identity) <= tol


def test_resolvent_reduces_to_inverse_for_real_points(sectorial3):
    """Test S^-1(s, T) = (s - T)^-1 for real s."""
    s = Quaternion.real(-0.7)
    expected = inverse(QMatrix.identity(3) * -0.7 - sectorial3)
    assert sresolvent_left(s, sectorial3).allclose(expected, atol=1e-11)
    assert sresolvent_right(s, sectorial3).allclose(expected, atol=1e-11)


def test_q_operator_depends_on_sphere_only(sectorial3):
    """Test Q_s(T) is the same for every s on one sphere."""
    a = q_operator(Quaternion(0.3, 1.0, 0.0, 0.0), sectorial3)
    b = q_operator(UNIT_E2.point(0.3, 1.0), sectorial3)
    assert a == b


def test_resolvent_powers(sectorial3):
    """Test S^-1 powers: n = 1 is the resolvent, n = 2 is minus its s0-derivative."""
    s = Quaternion(-1.5, 0.2, -0.3, 0.1)
    assert sresolvent_left_pow(1, s, sectorial3).allclose(sresolvent_left(s, sectorial3), atol=1e-13)
    assert sresolvent_right_pow(1, s, sectorial3).allclose(sresolvent_right(s, sectorial3), atol=1e-13)

    h = 1e-6
    shift = Quaternion.real(h)
    for single, squared in ((sresolvent_left, sresolvent_left_pow), (sresolvent_right, sresolvent_right_pow)):
        derivative = (single(s + shift, sectorial3) - single(s - shift, sectorial3)) / (2 * h)
        power = squared(2, s, sectorial3)
        assert opnorm(power + derivative) <= 1e-6 * (1.0 + opnorm(power))

    with pytest.raises(ValueError):
        sresolvent_left_pow(0, s, sectorial3)


def test_pseudo_resolvent_derivatives(sectorial3):
    """Test the closed-form derivatives against central differences."""
    s = Quaternion(-1.5, 0.0, 0.4, 0.0)
    d_s0, d_s1 = pseudo_resolvent_derivatives(s, sectorial3)
    h = 1e-6
    fd_s0 = (pseudo_resolvent(s + h, sectorial3) - pseudo_resolvent(s - h, sectorial3)) / (2 * h)
    fd_s1 = (
        pseudo_resolvent(UNIT_E2.point(-1.5, 0.4 + h), sectorial3)
        - pseudo_resolvent(UNIT_E2.point(-1.5, 0.4 - h), sectorial3)
    ) / (2 * h)
    assert opnorm(d_s0 - fd_s0) <= 1e-6 * (1.0 + opnorm(d_s0))
    assert opnorm(d_s1 - fd_s1) <= 1e-6 * (1.0 + opnorm(d_s1))


def test_neumann_series_example():
    """Test the expansion of Q_s(Id)^-1 around p = -1 at s = -1.01."""
    result = neumann_pseudo_resolvent(Quaternion.real(-1.01), Quaternion.real(-1.0), QMatrix.identity(2))
    assert result.converged
    assert result.value.allclose(QMatrix.identity(2) * (1.0 / 4.0401), atol=1e-13)
    assert result.ratio_bound == pytest.approx(0.01005)
    assert result.observed_ratio == pytest.approx(0.010025)


def test_neumann_series_at_center():
    """Test s = p needs a single term."""
    p = Quaternion(0.5, 0.0, 1.0, 0.0)
    result = neumann_pseudo_resolvent(p, p, QMatrix.diag([E1 + 2.0]))
    assert result.converged
    assert result.terms_used == 1
    assert result.value == pseudo_resolvent(p, QMatrix.diag([E1 + 2.0]))


def test_neumann_series_matches_direct(sectorial3):
    """Test the series against the direct inverse inside its disc."""
    p = Quaternion(-1.0, 0.0, 0.0, 0.5)
    s = Quaternion(-1.002, 0.0, 0.0, 0.5)
    result = neumann_pseudo_resolvent(s, p, sectorial3)
    assert result.converged
    direct = pseudo_resolvent(s, sectorial3)
    assert opnorm(result.value - direct) <= 1e-10 * (1.0 + opnorm(direct))


def test_neumann_series_divergence_is_reported():
    """Test a point outside the convergence disc is not reported as converged."""
    result = neumann_pseudo_resolvent(Quaternion(0.2, 0.9, 0.0, 0.0), Quaternion.real(-0.2), QMatrix.diag([E1]))
    assert not result.converged
    assert result.observed_ratio > 1.0


def test_strip_constant():
    """Test ((1 + 1/2M) 4M)^n."""
    assert strip_constant(1.0, 1) == pytest.approx(6.0)
    assert strip_constant(1.0, 2) == pytest.approx(36.0)
    assert strip_constant(2.0, 1) == pytest.approx(10.0)


def test_sector_estimate_identity():
    """Test the constants of Id: M = 1, a0 = 1/4, M_1 = 6."""
    estimate = sector_estimate(QMatrix.identity(2))
    assert estimate.M == pytest.approx(1.0, rel=1e-12)
    assert estimate.omega == 0.0
    assert estimate.a0 == pytest.approx(0.25)
    assert estimate.Mn[0] == pytest.approx(6.0)
    assert estimate.M_power(2) == pytest.approx(36.0)
    assert math.pi / 2 < estimate.theta0 < math.pi
    assert estimate.type_holds
    assert estimate.invertible
    assert estimate.M_type <= 1.0 + 1e-12


def test_sector_estimate_angle():
    """Test omega is the largest spectral argument."""
    estimate = sector_estimate(QMatrix.diag([E1, 1.0]))
    assert estimate.omega == pytest.approx(math.pi / 2)
    assert all(bound.theta > estimate.omega for bound in estimate.sector_bounds)
    assert estimate.to_json()["MType"] == estimate.M_type


def test_sector_estimate_rejects_negative_spectrum():
    """Test a sphere on (-inf, 0] is rejected; the origin only with allow_origin."""
    with pytest.raises(NotSectorialError):
        sector_estimate(QMatrix.diag([-1.0, 1.0]))
    singular = QMatrix.diag([0.0, 1.0])
    with pytest.raises(NotSectorialError):
        sector_estimate(singular)
    estimate = sector_estimate(singular, allow_origin=True)
    assert not estimate.invertible
    # ||(t + T)^-1|| = 1/t on the kernel of T
    assert estimate.M == pytest.approx((1.0 + 1e-6) / 1e-6, rel=1e-9)
    assert estimate.M_type == pytest.approx(1.0, rel=1e-9)
