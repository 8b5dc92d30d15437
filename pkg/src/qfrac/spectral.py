"""
S-spectrum, pseudo-resolvent and S-resolvent operators.

For T in B(H^n) and s = s0 + I s1:

    Q_s(T)   = T^2 - 2 s0 T + |s|^2 Id            (pseudo-resolvent: its inverse)
    S_L^{-1} = Q_s(T)^{-1} conj(s) - T Q_s(T)^{-1}
    S_R^{-1} = -(T - conj(s) Id) Q_s(T)^{-1}

The S-spectrum is read off the eigenvalues of the complex embedding: every
conjugate pair a +- ib becomes the sphere [a + I b].
"""

import math
from functools import lru_cache
from math import comb
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg
import structlog
from pydantic import Field

from .config import config
from .errors import NotSectorialError, NumericalError, SpectralSingularityError
from .models import MatrixValue, ReportModel
from .qmatrix import QMatrix, embed, inverse, opnorm
from .quaternion import ImaginaryUnit, Quaternion, UNIT_E1, ds_metric

logger = structlog.get_logger(__name__)

# Conjugate eigenvalues of the embedding are paired within PAIR_TOL * (1 + maxModulus)
PAIR_TOL = 1e-8
# s is in the resolvent set when d_S(s, sphere) > RESOLVENT_TOL * (1 + |s|^2) for every sphere
RESOLVENT_TOL = 1e-8
# Embedding eigenvalues of a defective eigenvalue spread by about (eps * cond)^(1/k) for a k-block
DEFECT_CAP = 1e-2
# Each sphere must make Q_s(T) singular: sigma_min <= RESIDUAL_TOL * (1 + maxModulus)^2
RESIDUAL_TOL = 1e-6
EPS = float(np.finfo(float).eps)


class SpectrumSphere(ReportModel):
    """The sphere [s0 + I s1], I ranging over all imaginary units."""

    s0: float
    s1: float = Field(ge=0.0)
    multiplicity: int = Field(ge=1)
    residual: float = Field(default=0.0, description="Smallest singular value of Q_s(T) on the sphere")

    def point(self, unit: ImaginaryUnit = UNIT_E1) -> Quaternion:
        return unit.point(self.s0, self.s1)

    @property
    def modulus(self) -> float:
        return math.hypot(self.s0, self.s1)

    @property
    def arg(self) -> float:
        # arg(0) is taken as 0; the origin is reported through has_origin()
        return math.atan2(self.s1, self.s0)


class SpectralReport(ReportModel):
    spheres: List[SpectrumSphere]
    max_modulus: float = Field(alias="maxModulus")
    max_arg: float = Field(alias="maxArg")
    pair_tol: float = Field(alias="pairTol")

    @property
    def dimension(self) -> int:
        return sum(sp.multiplicity for sp in self.spheres)

    def distance(self, s: Quaternion) -> float:
        """d_S(s, sigma_S(T)); infinite for the empty spectrum."""
        return min((ds_metric(s, sp.point()) for sp in self.spheres), default=math.inf)

    def has_origin(self) -> bool:
        return any(sp.modulus <= self.pair_tol for sp in self.spheres)

    def touches_negative_axis(self, include_origin: bool = True) -> bool:
        """True when some sphere meets (-inf, 0], or (-inf, 0) without the origin."""
        tol = self.pair_tol
        for sp in self.spheres:
            if sp.s1 > tol:
                continue
            if sp.s0 < -tol or (include_origin and sp.s0 <= tol):
                return True
        return False

    def contains(self, s: Quaternion) -> bool:
        return self.distance(s) <= RESOLVENT_TOL * (1.0 + s.norm2)


class SectorBound(ReportModel):
    theta: float
    bound: float


class SectorEstimate(ReportModel):
    """Sampled sectoriality constants and the constructive strip constants."""

    M: float
    omega: float
    a0: float
    theta0: float
    Mn: List[float]
    M_type: float = Field(alias="MType")
    sector_bounds: List[SectorBound] = Field(alias="sectorBounds")
    type_holds: bool = Field(alias="typeHolds")
    grid_points: int = Field(alias="gridPoints")
    invertible: bool = True

    def M_power(self, n: int) -> float:
        """(1 + 1/(2M))^n 4^n M^n, for any n >= 1."""
        return strip_constant(self.M, n)


class NeumannResult(ReportModel):
    value: MatrixValue
    terms_used: int = Field(alias="termsUsed")
    converged: bool
    ratio_bound: float = Field(alias="ratioBound")
    observed_ratio: float = Field(alias="observedRatio")
    last_term_norm: float = Field(alias="lastTermNorm")


# S-spectrum -----------------------------------------------------------------


def _q_operator(T: QMatrix, s0: float, norm2: float) -> QMatrix:
    return T @ T - T * (2.0 * s0) + QMatrix.identity(T.n) * norm2


def q_operator(s: Quaternion, T: QMatrix) -> QMatrix:
    """Q_s(T) = T^2 - 2 Re(s) T + |s|^2 Id."""
    return _q_operator(T, s.w, s.norm2)


def _cluster(points: np.ndarray, tol: float) -> List[List[int]]:
    clusters: List[List[int]] = []
    centers: List[np.ndarray] = []
    for idx in np.lexsort((points[:, 1], points[:, 0])):
        for k, c in enumerate(centers):
            if np.max(np.abs(points[idx] - c)) <= tol:
                clusters[k].append(int(idx))
                centers[k] = points[clusters[k]].mean(axis=0)
                break
        else:
            clusters.append([int(idx)])
            centers.append(points[idx].copy())
    return clusters


def defect_tolerance(n: int, max_modulus: float) -> float:
    """Spread of the eigenvalues of a perturbed Jordan block of size up to n."""
    spread = (1e4 * EPS) ** (1.0 / max(n, 2))
    return min(max(spread, math.sqrt(PAIR_TOL)), DEFECT_CAP) * (1.0 + max_modulus)


def _repair_parity(
    points: np.ndarray, clusters: List[List[int]], tol: float
) -> Tuple[List[List[int]], List[bool]]:
    """Merge odd-sized clusters with their neighbours within tol.

    Every group of clusters linked by center distance <= tol that contains an odd
    cluster becomes one cluster; groups of even clusters are left alone. The second
    list flags the merged clusters.
    """
    if all(len(members) % 2 == 0 for members in clusters):
        return clusters, [False] * len(clusters)
    centers = [points[members].mean(axis=0) for members in clusters]
    parent = list(range(len(clusters)))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(len(clusters)):
        for j in range(i + 1, len(clusters)):
            if np.max(np.abs(centers[i] - centers[j])) <= tol:
                parent[find(i)] = find(j)

    groups: Dict[int, List[int]] = {}
    for i in range(len(clusters)):
        groups.setdefault(find(i), []).append(i)

    repaired: List[List[int]] = []
    merged: List[bool] = []
    for members in groups.values():
        if any(len(clusters[i]) % 2 for i in members):
            repaired.append([idx for i in members for idx in clusters[i]])
            merged.append(True)
        else:
            repaired.extend(clusters[i] for i in members)
            merged.extend(False for _ in members)
    logger.debug("spectrum_parity_repaired", clusters=len(clusters), merged=len(repaired), tol=tol)
    return repaired, merged


@lru_cache(maxsize=256)
def _spectrum_cached(T: QMatrix) -> SpectralReport:
    if T.n == 0:
        return SpectralReport(spheres=[], max_modulus=0.0, max_arg=0.0, pair_tol=PAIR_TOL)

    try:
        eigenvalues = scipy.linalg.eigvals(embed(T), check_finite=False)
    except (np.linalg.LinAlgError, ValueError) as e:
        raise NumericalError(f"Eigen-solver failed: {e}", n=T.n) from e
    if not np.all(np.isfinite(eigenvalues)):
        raise NumericalError("Eigen-solver returned non-finite eigenvalues", n=T.n)

    max_modulus = float(np.max(np.abs(eigenvalues)))
    tol = PAIR_TOL * (1.0 + max_modulus)
    points = np.column_stack([eigenvalues.real, np.abs(eigenvalues.imag)])

    defect_tol = defect_tolerance(T.n, max_modulus)
    clusters, merged = _repair_parity(points, _cluster(points, tol), defect_tol)
    residual_tol = RESIDUAL_TOL * (1.0 + max_modulus) ** 2

    spheres = []
    for members, was_merged in zip(clusters, merged):
        if len(members) % 2:
            raise NumericalError(
                "Embedding eigenvalues did not pair up",
                cluster=str([complex(eigenvalues[i]) for i in members]),
                pair_tol=tol,
            )
        s0, s1 = points[members].mean(axis=0)
        if was_merged and s1 <= defect_tol:
            # a star around a real eigenvalue: its conjugate-symmetric mean is real
            s1 = abs(float(eigenvalues.imag[members].mean()))
        s1 = 0.0 if s1 <= tol else float(s1)
        q = _q_operator(T, float(s0), float(s0) ** 2 + s1 ** 2)
        residual = float(scipy.linalg.svdvals(embed(q))[-1])
        if residual > residual_tol:
            raise NumericalError(
                "Q_s(T) is not singular on a computed sphere",
                sphere=(float(s0), s1),
                residual=residual,
                threshold=residual_tol,
            )
        spheres.append(SpectrumSphere(s0=float(s0), s1=s1, multiplicity=len(members) // 2, residual=residual))

    spheres.sort(key=lambda sp: (sp.s0, sp.s1))
    report = SpectralReport(
        spheres=spheres,
        max_modulus=max_modulus,
        max_arg=max((sp.arg for sp in spheres if sp.modulus > tol), default=0.0),
        pair_tol=tol,
    )
    logger.debug("s_spectrum", n=T.n, spheres=len(spheres), max_modulus=max_modulus)
    return report


def s_spectrum(T: QMatrix) -> SpectralReport:
    """S-spectrum of T as spheres with multiplicities (total = n)."""
    return _spectrum_cached(T)


def check_resolvent(s: Quaternion, T: QMatrix) -> float:
    """Return d_S(s, sigma_S(T)), raising when s is (numerically) in the S-spectrum."""
    report = s_spectrum(T)
    distance = report.distance(s)
    if distance <= RESOLVENT_TOL * (1.0 + s.norm2):
        raise SpectralSingularityError(
            f"s={s!r} lies on the S-spectrum (d_S={distance:.3e})",
            distance=distance,
        )
    return distance


# Resolvents -----------------------------------------------------------------


def pseudo_resolvent(s: Quaternion, T: QMatrix) -> QMatrix:
    """Q_s(T)^{-1}; depends on s only through Re(s) and |s|^2."""
    check_resolvent(s, T)
    return inverse(q_operator(s, T))


def sresolvent_left(s: Quaternion, T: QMatrix) -> QMatrix:
    q_inv = pseudo_resolvent(s, T)
    return q_inv * s.conj() - T @ q_inv


def sresolvent_right(s: Quaternion, T: QMatrix) -> QMatrix:
    q_inv = pseudo_resolvent(s, T)
    return s.conj() * q_inv - T @ q_inv


def _check_power(n: int) -> None:
    if n < 1:
        raise ValueError(f"Resolvent power needs n >= 1, got {n}")


def sresolvent_left_pow(n: int, s: Quaternion, T: QMatrix) -> QMatrix:
    """S_L^{-n}(s,T) = sum_k C(n,k) (-T)^k Q_s(T)^{-n} conj(s)^{n-k}."""
    _check_power(n)
    q_inv_n = pseudo_resolvent(s, T).power(n)
    s_bar = s.conj()
    minus_t = -T
    total = QMatrix.zeros(T.n)
    t_k = QMatrix.identity(T.n)
    for k in range(n + 1):
        total = total + (t_k @ q_inv_n) * (s_bar ** (n - k)) * float(comb(n, k))
        t_k = t_k @ minus_t
    return total


def sresolvent_right_pow(n: int, s: Quaternion, T: QMatrix) -> QMatrix:
    """S_R^{-n}(s,T) = sum_k C(n,k) conj(s)^{n-k} (-T)^k Q_s(T)^{-n}."""
    _check_power(n)
    q_inv_n = pseudo_resolvent(s, T).power(n)
    s_bar = s.conj()
    minus_t = -T
    total = QMatrix.zeros(T.n)
    t_k = QMatrix.identity(T.n)
    for k in range(n + 1):
        total = total + (s_bar ** (n - k)) * (t_k @ q_inv_n) * float(comb(n, k))
        t_k = t_k @ minus_t
    return total


def pseudo_resolvent_derivatives(s: Quaternion, T: QMatrix) -> Tuple[QMatrix, QMatrix]:
    """Partial derivatives of Q_s(T)^{-1} in s0 and s1 (s = s0 + I s1, s1 = |Im s|)."""
    q_inv = pseudo_resolvent(s, T)
    q_inv2 = q_inv @ q_inv
    ident = QMatrix.identity(T.n)
    d_s0 = (T * 2.0 - ident * (2.0 * s.w)) @ q_inv2
    d_s1 = q_inv2 * (-2.0 * s.imag_norm)
    return d_s0, d_s1


# Neumann series -------------------------------------------------------------


def neumann_pseudo_resolvent(
    s: Quaternion,
    p: Quaternion,
    T: QMatrix,
    n_max: int = 500,
    tol: float = 1e-13,
) -> NeumannResult:
    """Q_s(T)^{-1} = sum_n D^n Q_p(T)^{-(n+1)} with D = 2(s0 - p0) T + (|p|^2 - |s|^2) Id.

    The series converges when d_S(s, p) (||T Q_p^{-1}|| + ||Q_p^{-1}||) < 1.
    """
    q_p_inv = pseudo_resolvent(p, T)
    ident = QMatrix.identity(T.n)
    d = T * (2.0 * (s.w - p.w)) + ident * (p.norm2 - s.norm2)
    step = d @ q_p_inv
    ratio_bound = ds_metric(s, p) * (opnorm(T @ q_p_inv) + opnorm(q_p_inv))

    total = q_p_inv
    term = q_p_inv
    term_norm = opnorm(term)
    terms_used = 1
    observed_ratio = 0.0
    converged = False
    while terms_used < n_max:
        nxt = step @ term
        nxt_norm = opnorm(nxt)
        if nxt_norm == 0.0:
            converged = True
            term_norm = 0.0
            break
        if term_norm > 0.0:
            observed_ratio = max(observed_ratio, nxt_norm / term_norm)
        total = total + nxt
        term, term_norm = nxt, nxt_norm
        terms_used += 1
        if not math.isfinite(term_norm) or term_norm > 1e200:
            break
        r = ratio_bound if ratio_bound < 1.0 else observed_ratio
        tail = term_norm * r / (1.0 - r) if r < 1.0 else term_norm
        if tail <= tol * (1.0 + opnorm(total)):
            converged = True
            break

    if not converged:
        logger.warning(
            "neumann_diverged",
            terms=terms_used,
            last_term_norm=term_norm,
            ratio_bound=ratio_bound,
        )
    return NeumannResult(
        value=total,
        terms_used=terms_used,
        converged=converged,
        ratio_bound=ratio_bound,
        observed_ratio=observed_ratio,
        last_term_norm=term_norm,
    )


# Sectoriality ---------------------------------------------------------------


def strip_constant(M: float, n: int) -> float:
    return ((1.0 + 1.0 / (2.0 * M)) * 4.0 * M) ** n


def log_grid(points: Optional[int] = None, lo: Optional[float] = None, hi: Optional[float] = None) -> np.ndarray:
    return np.geomspace(
        lo if lo is not None else config.qfrac_grid_min,
        hi if hi is not None else config.qfrac_grid_max,
        points if points is not None else config.qfrac_grid_points,
    )


def _ray_sup(T: QMatrix, theta: float, grid: Sequence[float]) -> float:
    best = 0.0
    c, sn = math.cos(theta), math.sin(theta)
    for t in grid:
        s = UNIT_E1.point(t * c, t * sn)
        try:
            best = max(best, t * opnorm(sresolvent_right(s, T)))
        except SpectralSingularityError:
            return math.inf
    return best


def sector_estimate(
    T: QMatrix,
    grid: Optional[Sequence[float]] = None,
    nmax: int = 3,
    allow_origin: bool = False,
) -> SectorEstimate:
    """Sampled type-(M, omega) constants of T from ||S_R^{-1}(-t, T)|| on a log grid.

    allow_origin admits 0 in the S-spectrum (operators of type (M, omega) that are
    not invertible); M then comes from the grid alone.
    """
    report = s_spectrum(T)
    if report.touches_negative_axis(include_origin=not allow_origin):
        raise NotSectorialError(
            "S-spectrum meets (-inf, 0]",
            spheres=[(sp.s0, sp.s1) for sp in report.spheres if sp.s0 <= report.pair_tol],
        )
    grid = log_grid() if grid is None else np.asarray(grid, dtype=float)
    invertible = not report.has_origin()

    M = 0.0
    M_type = 0.0
    for t in grid:
        r = opnorm(sresolvent_right(Quaternion(-float(t)), T))
        M = max(M, (1.0 + t) * r)
        M_type = max(M_type, t * r)
    if invertible:
        # ||(t + T)^{-1}|| at t -> 0 is ||T^{-1}||, which the grid may miss
        M = max(M, opnorm(inverse(T)))
    M = max(M, 1e-300)

    omega = report.max_arg
    a0 = min(1.0 / (4.0 * M), 1.0)
    phi = math.pi - math.atan(1.0 / (2.0 * M))
    theta0 = math.atan2(math.sin(phi), math.cos(phi) - 1.0)

    bounds = []
    for j in (1, 2, 3):
        theta = omega + (math.pi - omega) * j / 4.0
        bounds.append(SectorBound(theta=theta, bound=_ray_sup(T, theta, grid)))
    type_holds = all(math.isfinite(b.bound) for b in bounds)

    estimate = SectorEstimate(
        M=M,
        omega=omega,
        a0=a0,
        theta0=theta0,
        Mn=[strip_constant(M, n) for n in range(1, nmax + 1)],
        M_type=M_type,
        sector_bounds=bounds,
        type_holds=type_holds,
        grid_points=len(grid),
        invertible=invertible,
    )
    logger.debug("sector_estimate", M=M, omega=omega, theta0=theta0, type_holds=type_holds)
    return estimate
