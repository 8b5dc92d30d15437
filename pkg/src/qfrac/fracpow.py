"""
Fractional powers of sectorial quaternionic operators.

T^{-alpha} is computed from the ray representation along the negative real axis,

    T^{-alpha} = (-1)^{n+1} n! / ((n - alpha)...(1 - alpha)) sin(alpha pi)/pi
                 * int_0^inf t^{n - alpha} S_R^{-(n+1)}(-t, T) dt,   alpha in (0, n + 1),

from keyhole contour integrals of the S-functional calculus, or (for spectra in
the right half plane) from an integral along the imaginary axis. T^{alpha} is
the inverse of T^{-alpha}, or Kato's B_alpha built from the resolvent of T.
"""

import math
from typing import Callable, Dict, List, Literal, Optional

import numpy as np
import structlog
from pydantic import Field

from .config import config
from .errors import InconsistencyError, PathInvalidError, PreconditionError, SingularKernelError
from .kernels import cauchy_right, extend_slice_function
from .models import MatrixValue, ReportModel
from .qmatrix import QMatrix, inverse, opnorm
from .quadrature import (
    ContourPath,
    QuadratureConfig,
    QuadratureReport,
    circle,
    default_keyhole,
    integrate_contour,
    integrate_ray,
)
from .quaternion import (
    ImaginaryUnit,
    Quaternion,
    UNIT_E1,
    arg,
    from_complex,
    qpow,
    to_complex,
)
from .spectral import (
    SectorEstimate,
    SpectralReport,
    pseudo_resolvent,
    s_spectrum,
    sector_estimate,
    sresolvent_left,
    sresolvent_right,
    strip_constant,
)

logger = structlog.get_logger(__name__)

EPS = float(np.finfo(float).eps)
# Negative reals at which B_alpha's resolvent is compared with F_alpha
KATO_SAMPLES = (-0.5, -1.0, -2.0, -3.0, -5.0)
INTRINSIC_SAMPLES = 8

Side = Literal["left", "right"]


class FractionalPower(ReportModel):
    """A computed power of T together with how it was obtained."""

    matrix: MatrixValue
    alpha: float
    method: str
    report: QuadratureReport
    norm_bound: Optional[float] = Field(default=None, alias="normBound")
    within_bound: bool = Field(default=True, alias="withinBound")

    @property
    def error_estimate(self) -> float:
        return self.report.error_estimate


class SemigroupReport(ReportModel):
    alpha: float
    beta: float
    residual: float
    threshold: float
    error_sum: float = Field(alias="errorSum")
    passed: bool


class KatoReport(ReportModel):
    matrix: MatrixValue
    alpha: float
    mu0: float
    residuals: Dict[str, float]
    thresholds: Dict[str, float]
    report: QuadratureReport


def _cfg(cfg: Optional[QuadratureConfig]) -> QuadratureConfig:
    return cfg or config.quadrature_defaults


def property_threshold(error_sum: float, scale: float) -> float:
    """100 x quadrature error estimates, floored at rounding level."""
    return 100.0 * error_sum + 1e3 * EPS * max(1.0, scale)


def _exact(value: QMatrix, alpha: float, method: str) -> FractionalPower:
    report = QuadratureReport(value=value, error_estimate=0.0, evaluations=0, converged=True)
    return FractionalPower(matrix=value, alpha=alpha, method=method, report=report)


def _with_bound(result: FractionalPower, bound: float) -> FractionalPower:
    """Record ||T^-alpha|| <= M_ceil(alpha) on the result."""
    within = result.report.magnitude <= bound * (1.0 + 1e-6)
    if not within:
        logger.warning("uniform_bound_exceeded", alpha=result.alpha, norm=result.report.magnitude, bound=bound)
    return result.model_copy(update={"norm_bound": bound, "within_bound": within})


def _check_alpha(alpha: float) -> None:
    if not math.isfinite(alpha) or alpha <= 0.0:
        raise PreconditionError(f"alpha must be a positive real, got {alpha}", alpha=alpha)


def _is_integer(alpha: float) -> bool:
    return float(alpha).is_integer()


def _tail_radius(T: QMatrix) -> float:
    return max(1.0, 4.0 * opnorm(T))


def _power_series(T: QMatrix, coefficient: Callable[[int], float], max_terms: int = 400) -> QMatrix:
    """sum_k coefficient(k) T^k, summed until the terms fall below rounding level.

    Callers pick R >= 4 ||T|| so the coefficients carry a factor R^{-k}.
    """
    total = QMatrix.zeros(T.n)
    t_k = QMatrix.identity(T.n)
    for k in range(max_terms):
        term = t_k * coefficient(k)
        total = total + term
        if opnorm(term) <= 1e-18 * max(1.0, opnorm(total)):
            break
        t_k = t_k @ T
    return total


def ray_coefficient(alpha: float, n: int) -> float:
    """(-1)^{n+1} n! / ((n - alpha)...(1 - alpha)) * sin(alpha pi) / pi."""
    product = 1.0
    for k in range(1, n + 1):
        product *= k - alpha
    sign = -1.0 if n % 2 == 0 else 1.0
    return sign * math.factorial(n) / product * math.sin(alpha * math.pi) / math.pi


# Negative powers ------------------------------------------------------------


def frac_power_neg(
    T: QMatrix,
    alpha: float,
    cfg: Optional[QuadratureConfig] = None,
    estimate: Optional[SectorEstimate] = None,
) -> FractionalPower:
    """T^{-alpha} for sectorial T; integer alpha gives the inverse power."""
    _check_alpha(alpha)
    cfg = _cfg(cfg)
    estimate = estimate or sector_estimate(T)

    bound = strip_constant(estimate.M, math.ceil(alpha))
    if _is_integer(alpha):
        exact = _exact(inverse(T).power(int(alpha)), alpha, "inverse-power")
        return _with_bound(exact, bound)

    n = 0 if alpha < 1.0 else math.ceil(alpha)
    c = ray_coefficient(alpha, n)

    def integrand(t: float) -> QMatrix:
        resolvent = sresolvent_right(Quaternion(-t), T)
        return resolvent.power(n + 1) * (c * t ** (n - alpha))

    def tail(R: float) -> QMatrix:
        # (t + T)^{-(n+1)} = sum_k (-1)^k C(n+k, k) T^k t^{-(n+1+k)}, integrated termwise over [R, inf)
        sign = -1.0 if n % 2 == 0 else 1.0
        series = _power_series(T, lambda k: (-1.0) ** k * math.comb(n + k, k) * R ** (-alpha - k) / (alpha + k))
        return series * (sign * c)

    report = integrate_ray(
        integrand,
        cfg,
        endpoint_exponent=n - alpha,
        decay=alpha,
        tail=tail,
        tail_radius=_tail_radius(T),
    )
    logger.debug("frac_power_neg", alpha=alpha, n=n, error=report.error_estimate)
    return _with_bound(FractionalPower(matrix=report.value, alpha=alpha, method="ray", report=report), bound)


def check_keyhole(path: ContourPath, spectrum: SpectralReport) -> None:
    """A keyhole must leave every sphere's slice points in its interior."""
    bad = []
    for sp in spectrum.spheres:
        z = complex(sp.s0, sp.s1)
        if not path.surrounds(z):
            bad.append((sp.s0, sp.s1))
    if bad:
        min_modulus = min(sp.modulus for sp in spectrum.spheres)
        raise PathInvalidError(
            "Keyhole does not surround the S-spectrum",
            outside=bad,
            theta_window=(spectrum.max_arg, math.pi),
            radius_window=(0.0, min_modulus),
        )


def frac_power_neg_contour(
    T: QMatrix,
    alpha: float,
    path: Optional[ContourPath] = None,
    side: Side = "right",
    cfg: Optional[QuadratureConfig] = None,
    plane: Optional[ImaginaryUnit] = None,
    estimate: Optional[SectorEstimate] = None,
) -> FractionalPower:
    """Keyhole form of T^{-alpha}.

    right: (1/2 pi) int s^{-alpha} ds_I S_R^{-1}(s, T)
    left:  (1/2 pi) int S_L^{-1}(s, T) ds_I s^{-alpha}
    """
    _check_alpha(alpha)
    cfg = _cfg(cfg)
    estimate = estimate or sector_estimate(T)
    if path is None:
        path = default_keyhole(estimate.theta0, estimate.a0, plane or config.default_plane)
    spectrum = s_spectrum(T)
    check_keyhole(path, spectrum)

    def power(s: Quaternion) -> Quaternion:
        return qpow(s, -alpha)

    if side == "right":
        operator, order = (lambda s: sresolvent_right(s, T)), "scalar_first"
    elif side == "left":
        operator, order = (lambda s: sresolvent_left(s, T)), "operator_first"
    else:
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")

    report = integrate_contour(
        operator,
        path,
        cfg,
        scalar=power,
        order=order,
        decay=alpha,
        tail_constant=strip_constant(estimate.M, 1),
        singular=[complex(sp.s0, sp.s1) for sp in spectrum.spheres],
    )
    return FractionalPower(matrix=report.value, alpha=alpha, method=f"contour-{side}", report=report)


def frac_power_halfplane(
    T: QMatrix,
    alpha: float,
    cfg: Optional[QuadratureConfig] = None,
) -> FractionalPower:
    """T^{-alpha} = (1/pi) int_0^inf tau^{-alpha} (cos(alpha pi/2) T + sin(alpha pi/2) tau)(T^2 + tau^2)^{-1} dtau,
    for alpha in (0, 1) and S-spectrum in Re > 0."""
    if not 0.0 < alpha < 1.0:
        raise PreconditionError(f"Half-plane formula needs alpha in (0, 1), got {alpha}", alpha=alpha)
    cfg = _cfg(cfg)
    spectrum = s_spectrum(T)
    left_of_axis = [(sp.s0, sp.s1) for sp in spectrum.spheres if sp.s0 <= spectrum.pair_tol]
    if left_of_axis:
        raise PreconditionError("S-spectrum must lie in the open right half plane", spheres=left_of_axis)

    cos_a = math.cos(alpha * math.pi / 2.0)
    sin_a = math.sin(alpha * math.pi / 2.0)
    ident = QMatrix.identity(T.n)

    def integrand(tau: float) -> QMatrix:
        q_inv = pseudo_resolvent(UNIT_E1.point(0.0, tau), T)
        return ((T * cos_a + ident * (sin_a * tau)) @ q_inv) * (tau ** (-alpha) / math.pi)

    def tail(R: float) -> QMatrix:
        # (T^2 + tau^2)^{-1} = sum_j (-1)^j T^{2j} tau^{-2j-2}; even powers carry sin, odd powers cos
        def coefficient(k: int) -> float:
            trig = sin_a if k % 2 == 0 else cos_a
            return trig * (-1.0) ** (k // 2) * R ** (-alpha - k) / ((alpha + k) * math.pi)

        return _power_series(T, coefficient)

    report = integrate_ray(
        integrand,
        cfg,
        endpoint_exponent=-alpha,
        decay=alpha,
        tail=tail,
        tail_radius=_tail_radius(T),
    )
    return FractionalPower(matrix=report.value, alpha=alpha, method="halfplane", report=report)


# Positive powers ------------------------------------------------------------


def frac_power_pos(
    T: QMatrix,
    alpha: float,
    cfg: Optional[QuadratureConfig] = None,
    estimate: Optional[SectorEstimate] = None,
) -> FractionalPower:
    """T^{alpha} = T^{floor(alpha)} (T^{-(alpha - floor(alpha))})^{-1}."""
    _check_alpha(alpha)
    whole = math.floor(alpha)
    frac = alpha - whole
    if frac == 0.0:
        return _exact(T.power(whole), alpha, "power")
    neg = frac_power_neg(T, frac, cfg, estimate)
    value = T.power(whole) @ inverse(neg.matrix)
    return FractionalPower(matrix=value, alpha=alpha, method="inverse-of-negative", report=neg.report)


# General S-functional calculus ----------------------------------------------


def _path_samples(path: ContourPath, rng: np.random.Generator, count: int) -> List[complex]:
    points = []
    for _ in range(count):
        piece = path.pieces[int(rng.integers(len(path.pieces)))]
        if piece.kind == "ray":
            points.append(piece.point(piece.start * (1.0 + 4.0 * rng.random()) + rng.random()))
        else:
            lo, hi = sorted((piece.phi_start, piece.phi_end))
            points.append(piece.point(lo + (hi - lo) * rng.random()))
    return points


def check_intrinsic(f: Callable[[complex], complex], points: List[complex], tol: float = 1e-10) -> None:
    for z in points:
        fz = complex(f(z))
        f_conj = complex(f(z.conjugate()))
        if abs(f_conj - fz.conjugate()) > tol * (1.0 + abs(fz)):
            raise PreconditionError(
                "Function is not intrinsic: f(conj z) != conj f(z)",
                z=str(z),
                defect=abs(f_conj - fz.conjugate()),
            )


def s_calculus(
    T: QMatrix,
    f: Callable[[complex], complex],
    path: Optional[ContourPath] = None,
    cfg: Optional[QuadratureConfig] = None,
    *,
    intrinsic: bool = True,
    decay: float = 1.0,
    tail_constant: Optional[float] = None,
) -> QuadratureReport:
    """f(T) = (1/2 pi) int_path S_L^{-1}(s, T) ds_I f(s).

    f is given on the complex plane, identified with C_{e1}, and extended to the
    plane of the path by the representation formula.
    """
    if not intrinsic:
        raise PreconditionError("Only intrinsic functions are supported by the S-functional calculus")
    cfg = _cfg(cfg)
    spectrum = s_spectrum(T)
    if path is None:
        path = circle(config.default_plane, 0j, 1.1 * max(spectrum.max_modulus, 1e-3) + 1e-3)
    for sp in spectrum.spheres:
        if not path.surrounds(complex(sp.s0, sp.s1)):
            raise PathInvalidError("Path does not surround the S-spectrum", sphere=(sp.s0, sp.s1))

    check_intrinsic(f, _path_samples(path, np.random.default_rng(0), INTRINSIC_SAMPLES))

    def f_slice(q: Quaternion) -> Quaternion:
        value = complex(f(to_complex(q, UNIT_E1)))
        if not (math.isfinite(value.real) and math.isfinite(value.imag)):
            raise PathInvalidError(f"f is singular on the path at {q!r}")
        return from_complex(value, UNIT_E1)

    def scalar(s: Quaternion) -> Quaternion:
        return extend_slice_function(f_slice, s, UNIT_E1)

    return integrate_contour(
        lambda s: sresolvent_left(s, T),
        path,
        cfg,
        scalar=scalar,
        order="operator_first",
        decay=decay,
        tail_constant=tail_constant,
        singular=[complex(sp.s0, sp.s1) for sp in spectrum.spheres],
    )


# Kato's construction --------------------------------------------------------


def _check_kato_angle(p: Quaternion, alpha: float, omega: float) -> None:
    if not 0.0 < alpha < 1.0:
        raise PreconditionError(f"Kato's construction needs alpha in (0, 1), got {alpha}", alpha=alpha)
    if p.norm2 == 0.0 or arg(p) <= max(alpha * math.pi, omega):
        raise PreconditionError(
            "arg(p) must exceed max(alpha pi, omega)",
            arg=arg(p) if p.norm2 else None,
            alpha_pi=alpha * math.pi,
            omega=omega,
        )


def kato_denominator(p: Quaternion, t: float, alpha: float) -> Quaternion:
    """(p^2 - 2 p t^alpha cos(alpha pi) + t^{2 alpha})^{-1}."""
    ta = t ** alpha
    q = p * p - p * (2.0 * ta * math.cos(alpha * math.pi)) + ta * ta
    if abs(q) < 1e-14 * (1.0 + abs(p) + ta) ** 2:
        raise SingularKernelError(f"p^2 - 2 p t^a cos(a pi) + t^2a vanishes at t={t}", t=t)
    return q.inverse()


def kato_F(
    p: Quaternion,
    T: QMatrix,
    alpha: float,
    cfg: Optional[QuadratureConfig] = None,
    estimate: Optional[SectorEstimate] = None,
) -> QuadratureReport:
    """F_alpha(p, T) = sin(alpha pi)/pi int_0^inf t^alpha (p^2 - 2 p t^alpha cos(alpha pi) + t^{2alpha})^{-1}
    S_R^{-1}(-t, T) dt, the S-resolvent of T^alpha at p."""
    cfg = _cfg(cfg)
    estimate = estimate or sector_estimate(T, allow_origin=True)
    _check_kato_angle(p, alpha, estimate.omega)
    c = math.sin(alpha * math.pi) / math.pi

    def integrand(t: float) -> QMatrix:
        weight = kato_denominator(p, t, alpha) * (c * t ** alpha)
        return weight * sresolvent_right(Quaternion(-t), T)

    return integrate_ray(integrand, cfg, endpoint_exponent=alpha - 1.0, decay=alpha)


def kato_F_contour(
    p: Quaternion,
    T: QMatrix,
    alpha: float,
    path: Optional[ContourPath] = None,
    cfg: Optional[QuadratureConfig] = None,
    estimate: Optional[SectorEstimate] = None,
) -> QuadratureReport:
    """(1/2 pi) int_path S_R^{-1}(p, s^alpha) ds_I S_R^{-1}(s, T); needs 0 in the resolvent set."""
    cfg = _cfg(cfg)
    estimate = estimate or sector_estimate(T)
    _check_kato_angle(p, alpha, estimate.omega)
    if path is None:
        path = default_keyhole(estimate.theta0, estimate.a0, config.default_plane)
    spectrum = s_spectrum(T)
    check_keyhole(path, spectrum)

    return integrate_contour(
        lambda s: sresolvent_right(s, T),
        path,
        cfg,
        scalar=lambda s: cauchy_right(p, qpow(s, alpha)),
        order="scalar_first",
        decay=alpha,
        singular=[complex(sp.s0, sp.s1) for sp in spectrum.spheres],
    )


def kato_power(
    T: QMatrix,
    alpha: float,
    mu0: float = -1.0,
    cfg: Optional[QuadratureConfig] = None,
) -> KatoReport:
    """B_alpha = mu0 Id - F_alpha(mu0, T)^{-1}, checked against its defining properties."""
    if mu0 >= 0.0:
        raise PreconditionError(f"mu0 must be a negative real, got {mu0}", mu0=mu0)
    cfg = _cfg(cfg)
    estimate = sector_estimate(T, allow_origin=True)

    base = kato_F(Quaternion(mu0), T, alpha, cfg, estimate)
    f0_inv = inverse(base.value)
    B = QMatrix.identity(T.n) * mu0 - f0_inv
    f0_inv_norm = opnorm(f0_inv)

    residuals: Dict[str, float] = {}
    thresholds: Dict[str, float] = {}

    for mu in KATO_SAMPLES:
        f_mu = kato_F(Quaternion(mu), T, alpha, cfg, estimate)
        r_mu = sresolvent_right(Quaternion(mu), B)
        key = f"resolvent@{mu:g}"
        residuals[key] = opnorm(r_mu - f_mu.value)
        amplification = (f0_inv_norm * opnorm(r_mu)) ** 2
        thresholds[key] = property_threshold(
            f_mu.error_estimate + amplification * base.error_estimate,
            opnorm(f_mu.value),
        )

    b_estimate = sector_estimate(B, allow_origin=True)
    residuals["omega"] = b_estimate.omega - alpha * estimate.omega
    thresholds["omega"] = 1e-3
    residuals["M"] = b_estimate.M_type - estimate.M_type
    thresholds["M"] = 1e-2 * estimate.M_type + 1e-9

    if estimate.invertible:
        neg = frac_power_neg(T, alpha, cfg)
        b_inv = inverse(B)
        residuals["inverse"] = opnorm(b_inv - neg.matrix)
        amplification = (opnorm(b_inv) * f0_inv_norm) ** 2
        thresholds["inverse"] = property_threshold(
            neg.error_estimate + amplification * base.error_estimate,
            opnorm(neg.matrix),
        )

    failed = {k: v for k, v in residuals.items() if v > thresholds[k]}
    if failed:
        logger.warning("kato_post_check_failed", failed=failed, thresholds=thresholds)
        raise InconsistencyError("B_alpha failed its post-checks", residuals=residuals)

    logger.debug("kato_power", alpha=alpha, mu0=mu0, residuals=residuals)
    return KatoReport(
        matrix=B,
        alpha=alpha,
        mu0=mu0,
        residuals=residuals,
        thresholds=thresholds,
        report=base,
    )


# Semigroup ------------------------------------------------------------------


def verify_semigroup(
    T: QMatrix,
    alpha: float,
    beta: float,
    cfg: Optional[QuadratureConfig] = None,
) -> SemigroupReport:
    """Residual of T^{-alpha} T^{-beta} = T^{-(alpha + beta)}."""
    cfg = _cfg(cfg)
    estimate = sector_estimate(T)
    a = frac_power_neg(T, alpha, cfg, estimate)
    b = frac_power_neg(T, beta, cfg, estimate)
    ab = frac_power_neg(T, alpha + beta, cfg, estimate)

    a_norm, b_norm = opnorm(a.matrix), opnorm(b.matrix)
    residual = opnorm(a.matrix @ b.matrix - ab.matrix)
    error_sum = a.error_estimate * b_norm + b.error_estimate * a_norm + ab.error_estimate
    threshold = property_threshold(error_sum, max(a_norm * b_norm, opnorm(ab.matrix)))
    passed = residual <= threshold
    logger.debug("verify_semigroup", alpha=alpha, beta=beta, residual=residual, threshold=threshold)
    return SemigroupReport(
        alpha=alpha,
        beta=beta,
        residual=residual,
        threshold=threshold,
        error_sum=error_sum,
        passed=passed,
    )
