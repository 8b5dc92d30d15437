"""
Property suites for the resolvent calculus and the fractional powers.

Each suite runs a list of named checks against one matrix and collects
CheckResult rows into a SuiteReport. Precondition failures are not check
failures: they propagate to the caller.
"""

import math
import time
from typing import Callable, List, Literal, Optional, Tuple

import numpy as np
import structlog
from pydantic import Field

from .errors import InconsistencyError
from .fracpow import (
    frac_power_neg,
    kato_F,
    kato_F_contour,
    kato_power,
    property_threshold,
    verify_semigroup,
)
from .models import ReportModel
from .qmatrix import QMatrix, opnorm
from .quadrature import QuadratureConfig
from .quaternion import (
    E1,
    UNIT_E1,
    UNIT_E2,
    UNIT_E3,
    Quaternion,
    qmul_array,
    slice_of,
)
from .sampling import random_resolvent_point, random_unit
from .spectral import (
    pseudo_resolvent,
    pseudo_resolvent_derivatives,
    s_spectrum,
    sector_estimate,
    sresolvent_left,
    sresolvent_left_pow,
    sresolvent_right,
)

logger = structlog.get_logger(__name__)

SuiteName = Literal["resolvent", "derivatives", "semigroup", "kato", "all"]
SUITES: Tuple[str, ...] = ("resolvent", "derivatives", "semigroup", "kato")

FD_STEP = 1e-5
FD_STEP_SECOND = 1e-4
FD_TOL = 1e-4
RESOLVENT_TOL = 1e-9
RELATION_TOL = 1e-10
SEMIGROUP_PAIRS = ((0.3, 0.7), (0.25, 0.5))
CONTINUITY_ALPHAS = (0.2, 0.1, 0.05, 0.025)
KATO_PAIRS = ((-0.5, -1.0), (-1.0, -3.0))


class CheckResult(ReportModel):
    name: str
    passed: bool
    residual: float
    threshold: float
    message: str = ""
    duration: float = Field(default=0.0, exclude=True)


class SuiteReport(ReportModel):
    suite: str
    passed: bool
    checks: List[CheckResult]
    duration: float = Field(exclude=True)
    seed: Optional[int] = None

    @property
    def failures(self) -> List[CheckResult]:
        return [c for c in self.checks if not c.passed]


def _relative(a: QMatrix, b: QMatrix) -> float:
    return opnorm(a - b) / max(opnorm(b), 1e-300)


class VerificationSuite:
    """Runs property checks for one matrix with a seeded generator."""

    def __init__(
        self,
        T: QMatrix,
        rng: np.random.Generator,
        cfg: Optional[QuadratureConfig] = None,
        draws: int = 50,
    ):
        self.T = T
        self.rng = rng
        self.cfg = cfg
        self.draws = draws
        self.results: List[CheckResult] = []
        self.logger = logger.bind(n=T.n)

    def record(self, name: str, residual: float, threshold: float, message: str = "", started: float = 0.0) -> None:
        passed = bool(residual <= threshold)
        result = CheckResult(
            name=name,
            passed=passed,
            residual=float(residual),
            threshold=float(threshold),
            message=message,
            duration=time.perf_counter() - started if started else 0.0,
        )
        self.results.append(result)
        if not passed:
            self.logger.warning("check_failed", check=name, residual=residual, threshold=threshold)

    def run_check(self, name: str, check: Callable[[], Tuple[float, float, str]]) -> None:
        started = time.perf_counter()
        try:
            residual, threshold, message = check()
        except InconsistencyError as e:
            worst = max(e.residuals.values(), default=math.inf)
            self.record(name, worst, 0.0, e.message, started)
            return
        self.record(name, residual, threshold, message, started)

    # Resolvent ------------------------------------------------------------

    def _points(self, avoid: Optional[Quaternion] = None) -> Quaternion:
        return random_resolvent_point(self.rng, s_spectrum(self.T), avoid=avoid)

    def check_resolvent_equation(self) -> Tuple[float, float, str]:
        worst = 0.0
        for _ in range(self.draws):
            s = self._points()
            p = self._points(avoid=s)
            s_r = sresolvent_right(s, self.T)
            s_l = sresolvent_left(p, self.T)
            denominator = (p * p - p * (2.0 * s.w) + s.norm2).inverse()
            diff = s_r - s_l
            rhs = (diff * p - s.conj() * diff) * denominator
            scale = opnorm(s_r) * opnorm(s_l) + opnorm(diff) * (abs(p) + abs(s)) * abs(denominator)
            worst = max(worst, opnorm(s_r @ s_l - rhs) / max(scale, 1.0))
        return worst, RESOLVENT_TOL, f"{self.draws} draws"

    def check_resolvent_relations(self) -> Tuple[float, float, str]:
        T = self.T
        worst = 0.0
        for _ in range(self.draws):
            p = self._points()
            v = self.rng.standard_normal((T.n, 4))
            s_l = sresolvent_left(p, T)
            lhs = T.apply(s_l.apply(v))
            rhs = s_l.apply(qmul_array(p.as_array(), v)) - v
            scale = (1.0 + opnorm(T)) * opnorm(s_l) * (1.0 + abs(p)) * np.max(np.abs(v))
            worst = max(worst, float(np.max(np.abs(lhs - rhs))) / max(scale, 1.0))

            s_r = sresolvent_right(p, T)
            lhs = s_r.apply(T.apply(v))
            rhs = qmul_array(p.as_array(), s_r.apply(v)) - v
            scale = (1.0 + opnorm(T)) * opnorm(s_r) * (1.0 + abs(p)) * np.max(np.abs(v))
            worst = max(worst, float(np.max(np.abs(lhs - rhs))) / max(scale, 1.0))
        return worst, RELATION_TOL, "left and right relations"

    def check_distance_bound(self) -> Tuple[float, float, str]:
        """||Q_s^{-1}|| + ||T Q_s^{-1}|| >= 1 / d_S(s, sigma_S(T))."""
        spectrum = s_spectrum(self.T)
        worst = -math.inf
        for _ in range(self.draws):
            s = self._points()
            q_inv = pseudo_resolvent(s, self.T)
            lower = 1.0 / spectrum.distance(s)
            worst = max(worst, (lower - opnorm(q_inv) - opnorm(self.T @ q_inv)) / lower)
        return worst, 1e-8, "sampled lower bound"

    def check_kernel_norm_bound(self) -> Tuple[float, float, str]:
        """sqrt(2 ||Q_s^{-1}||) <= ||S^{-1}(s)|| + ||S^{-1}(conj s)|| for both resolvents."""
        worst = -math.inf
        for _ in range(self.draws):
            s = self._points()
            bound = math.sqrt(2.0 * opnorm(pseudo_resolvent(s, self.T)))
            left = opnorm(sresolvent_left(s, self.T)) + opnorm(sresolvent_left(s.conj(), self.T))
            right = opnorm(sresolvent_right(s, self.T)) + opnorm(sresolvent_right(s.conj(), self.T))
            worst = max(worst, (bound - left) / bound, (bound - right) / bound)
        return worst, 1e-10, "left and right"

    def check_axial_symmetry(self) -> Tuple[float, float, str]:
        spectrum = s_spectrum(self.T)
        for s0, s1 in ((0.5, 0.75), (-1.25, 2.5), (3.0, 0.5)):
            reference = None
            for unit in (UNIT_E1, UNIT_E2, UNIT_E3, -UNIT_E1):
                s = unit.point(s0, s1)
                if spectrum.contains(s):
                    break
                value = pseudo_resolvent(s, self.T)
                if reference is None:
                    reference = value
                elif value != reference:
                    return opnorm(value - reference), 0.0, f"sphere ({s0}, {s1})"
        return 0.0, 0.0, "bitwise identical on basis units"

    # Derivatives ----------------------------------------------------------

    def _shift(self, s: Quaternion, d0: float = 0.0, d1: float = 0.0) -> Quaternion:
        s0, s1, unit = slice_of(s)
        return unit.point(s0 + d0, s1 + d1)

    def check_pseudo_resolvent_derivatives(self) -> Tuple[float, float, str]:
        T, h = self.T, FD_STEP
        worst = 0.0
        for _ in range(self.draws):
            s = self._points()
            d_s0, d_s1 = pseudo_resolvent_derivatives(s, T)
            fd_s0 = (pseudo_resolvent(self._shift(s, d0=h), T) - pseudo_resolvent(self._shift(s, d0=-h), T)) / (2 * h)
            fd_s1 = (pseudo_resolvent(self._shift(s, d1=h), T) - pseudo_resolvent(self._shift(s, d1=-h), T)) / (2 * h)
            worst = max(worst, _relative(fd_s0, d_s0), _relative(fd_s1, d_s1))
            # T Q_s^{-1}
            worst = max(worst, _relative(T @ fd_s0, T @ d_s0), _relative(T @ fd_s1, T @ d_s1))
        return worst, FD_TOL, f"h={h:g}"

    def check_resolvent_slice_derivative(self) -> Tuple[float, float, str]:
        """S_L^{-3}(s, T) = (1/2) d^2/ds0^2 S_L^{-1}(s, T)."""
        T, h = self.T, FD_STEP_SECOND
        worst = 0.0
        for _ in range(max(1, self.draws // 5)):
            s = self._points()
            center = sresolvent_left(s, T)
            plus = sresolvent_left(self._shift(s, d0=h), T)
            minus = sresolvent_left(self._shift(s, d0=-h), T)
            second = (plus - center * 2.0 + minus) / (h * h)
            worst = max(worst, _relative(second * 0.5, sresolvent_left_pow(3, s, T)))
        return worst, FD_TOL, f"h={h:g}"

    # Fractional powers ----------------------------------------------------

    def check_semigroup(self, alpha: float, beta: float) -> Tuple[float, float, str]:
        report = verify_semigroup(self.T, alpha, beta, self.cfg)
        return report.residual, report.threshold, f"alpha={alpha}, beta={beta}"

    def check_uniform_bound(self) -> Tuple[float, float, str]:
        estimate = sector_estimate(self.T)
        worst = -math.inf
        for alpha in np.linspace(0.1, 2.9, 20):
            power = frac_power_neg(self.T, float(alpha), self.cfg, estimate)
            bound = power.norm_bound or estimate.M_power(math.ceil(alpha))
            worst = max(worst, (power.report.magnitude - bound) / bound)
        return worst, 1e-6, "||T^-alpha|| <= M_ceil(alpha)"

    def check_strong_continuity(self) -> Tuple[float, float, str]:
        estimate = sector_estimate(self.T)
        ident = QMatrix.identity(self.T.n)
        distances = []
        errors = []
        for alpha in CONTINUITY_ALPHAS:
            power = frac_power_neg(self.T, alpha, self.cfg, estimate)
            distances.append(opnorm(power.matrix - ident))
            errors.append(power.error_estimate)
        increase = max(
            (later - earlier - property_threshold(e1 + e2, 1.0)
             for earlier, later, e1, e2 in zip(distances, distances[1:], errors, errors[1:])),
            default=0.0,
        )
        return increase, 0.0, "||T^-alpha - Id|| decreasing as alpha -> 0"

    def check_kato_power(self, alpha: float) -> Tuple[float, float, str]:
        report = kato_power(self.T, alpha, -1.0, self.cfg)
        worst = max(report.residuals[k] - report.thresholds[k] for k in report.residuals)
        return worst, 0.0, f"alpha={alpha}"

    def check_kato_resolvent_identity(self, alpha: float) -> Tuple[float, float, str]:
        """(lambda - mu) F(mu) F(lambda) = F(mu) - F(lambda) on negative reals."""
        estimate = sector_estimate(self.T, allow_origin=True)
        worst = -math.inf
        for lam, mu in KATO_PAIRS:
            f_lam = kato_F(Quaternion(lam), self.T, alpha, self.cfg, estimate)
            f_mu = kato_F(Quaternion(mu), self.T, alpha, self.cfg, estimate)
            residual = opnorm((f_mu.value @ f_lam.value) * (lam - mu) - (f_mu.value - f_lam.value))
            errors = (f_mu.error_estimate * opnorm(f_lam.value) + f_lam.error_estimate * opnorm(f_mu.value)) * abs(
                lam - mu
            ) + f_mu.error_estimate + f_lam.error_estimate
            worst = max(worst, residual - property_threshold(errors, opnorm(f_mu.value)))
        return worst, 0.0, f"alpha={alpha}"

    def check_kato_bound(self, alpha: float) -> Tuple[float, float, str]:
        """|mu| ||F(mu)|| <= M on sampled negative reals."""
        estimate = sector_estimate(self.T, allow_origin=True)
        worst = -math.inf
        for mu in (-0.1, -1.0, -10.0):
            f_mu = kato_F(Quaternion(mu), self.T, alpha, self.cfg, estimate)
            worst = max(worst, abs(mu) * f_mu.magnitude - estimate.M * (1.0 + 1e-6))
        return worst, 0.0, f"alpha={alpha}"

    def check_kato_contour(self, alpha: float) -> Tuple[float, float, str]:
        p = Quaternion(-1.0)
        ray = kato_F(p, self.T, alpha, self.cfg)
        contour = kato_F_contour(p, self.T, alpha, cfg=self.cfg)
        residual = opnorm(ray.value - contour.value)
        return (
            residual,
            property_threshold(ray.error_estimate + contour.error_estimate, ray.magnitude),
            f"alpha={alpha}",
        )

    # Suites ---------------------------------------------------------------

    def resolvent(self) -> None:
        self.run_check("resolvent_equation", self.check_resolvent_equation)
        self.run_check("resolvent_relations", self.check_resolvent_relations)
        self.run_check("distance_lower_bound", self.check_distance_bound)
        self.run_check("kernel_norm_bound", self.check_kernel_norm_bound)
        self.run_check("axial_symmetry", self.check_axial_symmetry)

    def derivatives(self) -> None:
        self.run_check("pseudo_resolvent_derivatives", self.check_pseudo_resolvent_derivatives)
        self.run_check("resolvent_slice_derivative", self.check_resolvent_slice_derivative)

    def semigroup(self) -> None:
        sector_estimate(self.T)
        for alpha, beta in SEMIGROUP_PAIRS:
            self.run_check(f"semigroup_{alpha}_{beta}", lambda a=alpha, b=beta: self.check_semigroup(a, b))
        self.run_check("uniform_bound", self.check_uniform_bound)
        self.run_check("strong_continuity", self.check_strong_continuity)

    def kato(self) -> None:
        estimate = sector_estimate(self.T, allow_origin=True)
        for alpha in (0.3, 0.5):
            self.run_check(f"kato_power_{alpha}", lambda a=alpha: self.check_kato_power(a))
            self.run_check(f"kato_resolvent_identity_{alpha}", lambda a=alpha: self.check_kato_resolvent_identity(a))
            self.run_check(f"kato_bound_{alpha}", lambda a=alpha: self.check_kato_bound(a))
            if estimate.invertible:
                self.run_check(f"kato_contour_{alpha}", lambda a=alpha: self.check_kato_contour(a))

    def run(self, suite: SuiteName, seed: Optional[int] = None) -> SuiteReport:
        started = time.perf_counter()
        names = SUITES if suite == "all" else (suite,)
        for name in names:
            if name not in SUITES:
                raise ValueError(f"Unknown suite {name!r}")
            self.logger.info("suite_started", suite=name)
            getattr(self, name)()
        report = SuiteReport(
            suite=suite,
            passed=all(r.passed for r in self.results),
            checks=list(self.results),
            duration=time.perf_counter() - started,
            seed=seed,
        )
        self.logger.info("suite_finished", suite=suite, passed=report.passed, checks=len(report.checks))
        return report


def norm_explode_diagnostic(k_values=range(10, 21), units: int = 32, seed: int = 0) -> List[float]:
    """Sampled sup over I of ||S_L^{-1}(1/k + I, e1 Id)||; grows without bound as k increases."""
    rng = np.random.default_rng(seed)
    T = QMatrix.scalar(E1, 2)
    sample = [UNIT_E1] + [random_unit(rng) for _ in range(units - 1)]
    sups = []
    for k in k_values:
        sups.append(max(opnorm(sresolvent_left(unit.point(1.0 / k, 1.0), T)) for unit in sample))
    return sups


def run_suite(
    T: QMatrix,
    suite: SuiteName = "all",
    seed: int = 0,
    cfg: Optional[QuadratureConfig] = None,
    draws: int = 50,
) -> SuiteReport:
    return VerificationSuite(T, np.random.default_rng(seed), cfg, draws).run(suite, seed)
