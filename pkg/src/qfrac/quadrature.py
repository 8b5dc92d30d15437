"""
Adaptive quadrature for operator-valued integrands.

All integrals are reduced to finite intervals and handed to
``scipy.integrate.quad_vec`` (Gauss-Kronrod 7/15, entrywise max-norm error):

* rays (0, inf): (0, 1] after t = u^{1/(1+gamma)} for a declared t^gamma
  endpoint behaviour, and [1, R] after t = e^u, with R cut from the declared
  decay C t^{-1-delta} so that the tail C R^{-delta} / delta stays in budget;
* contours in a plane C_I: rays and arcs, with the measure ds_I = -I ds.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Literal, Optional, Tuple, Union

import numpy as np
import structlog
from pydantic import Field, InstanceOf, PlainSerializer
from scipy.integrate import quad_vec
from typing_extensions import Annotated

from .errors import PathInvalidError
from .models import OperatorValue, ReportModel
from .qmatrix import QMatrix, opnorm
from .quaternion import ImaginaryUnit, Quaternion, UNIT_E1, from_complex

logger = structlog.get_logger(__name__)

Value = Union[QMatrix, Quaternion]
RayIntegrand = Callable[[float], Value]
SurfaceIntegrand = Callable[[Quaternion], Value]

# log of the largest truncation radius; keeps |s|^2 finite for s on the ray
MAX_LOG_RADIUS = 300.0


class QuadratureConfig(ReportModel):
    rel_tol: float = Field(default=1e-10, gt=0, alias="relTol")
    abs_tol: float = Field(default=1e-12, gt=0, alias="absTol")
    max_subdiv: int = Field(default=10000, gt=0, alias="maxSubdiv")
    truncation_radius: Optional[float] = Field(default=None, gt=1.0, alias="truncationRadius")
    workers: int = Field(default=1, ge=1)


class QuadratureReport(ReportModel):
    value: OperatorValue
    error_estimate: float = Field(ge=0.0, alias="errorEstimate")
    evaluations: int = Field(ge=0)
    converged: bool

    @property
    def magnitude(self) -> float:
        return value_norm(self.value)


def value_norm(value: Value) -> float:
    if isinstance(value, QMatrix):
        return opnorm(value)
    return abs(value)


class _Flattener:
    """Maps integrand values to flat float vectors and back."""

    def __init__(self) -> None:
        self.template: Optional[Value] = None

    def flatten(self, value: Value) -> np.ndarray:
        if self.template is None:
            self.template = value
        if isinstance(value, QMatrix):
            return value.data.ravel()
        return value.as_array()

    def restore(self, vector: np.ndarray) -> Value:
        if isinstance(self.template, QMatrix):
            return QMatrix(np.asarray(vector).reshape(self.template.data.shape))
        return Quaternion.from_array(vector)


def _run(
    g: Callable[[float], np.ndarray],
    lo: float,
    hi: float,
    cfg: QuadratureConfig,
    epsabs: float,
    epsrel: float,
) -> Tuple[np.ndarray, float, int, bool]:
    kwargs = dict(
        epsabs=epsabs,
        epsrel=epsrel,
        norm="max",
        limit=cfg.max_subdiv,
        quadrature="gk15",
        full_output=True,
    )
    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            res, err, info = quad_vec(g, lo, hi, workers=pool.map, **kwargs)
    else:
        res, err, info = quad_vec(g, lo, hi, **kwargs)
    return np.asarray(res, dtype=float), float(err), int(info.neval), bool(info.success)


def _finish(
    flat: _Flattener,
    total: np.ndarray,
    error: float,
    evaluations: int,
    success: bool,
    cfg: QuadratureConfig,
    label: str,
) -> QuadratureReport:
    value = flat.restore(total)
    converged = success and error <= max(cfg.abs_tol, cfg.rel_tol * value_norm(value))
    report = QuadratureReport(value=value, error_estimate=error, evaluations=evaluations, converged=converged)
    if converged:
        logger.debug("quadrature_done", kind=label, evaluations=evaluations, error=error)
    else:
        logger.warning("quadrature_not_converged", kind=label, evaluations=evaluations, error=error)
    return report


def _estimate_tail_constant(f: Callable[[float], np.ndarray], decay: float) -> float:
    samples = np.geomspace(1.0, 1e6, 13)
    return max(float(np.max(np.abs(f(t)))) * t ** (1.0 + decay) for t in samples)


def truncation_radius(tail_constant: float, decay: float, budget: float) -> float:
    """Smallest R >= 1 with tail_constant * R^{-decay} / decay <= budget (capped)."""
    if tail_constant <= 0.0:
        return 1.0
    log_r = math.log(tail_constant / (decay * budget)) / decay
    return math.exp(min(max(log_r, 0.0), MAX_LOG_RADIUS))


def integrate_ray(
    f: RayIntegrand,
    cfg: Optional[QuadratureConfig] = None,
    *,
    endpoint_exponent: float = 0.0,
    decay: float = 1.0,
    tail_constant: Optional[float] = None,
    offset: float = 0.0,
    tail: Optional[Callable[[float], Value]] = None,
    tail_radius: Optional[float] = None,
) -> QuadratureReport:
    """Integral of f over (0, inf).

    endpoint_exponent: f(t) ~ t^gamma at 0 with gamma > -1.
    decay, tail_constant: ||f(t)|| <= C t^{-1-delta} for large t; C is sampled when omitted.
    offset: integrate f(offset + t) instead; the bounds above refer to t.
    tail, tail_radius: exact value of the integral over [tail_radius, inf); replaces the cut.
    """
    cfg = cfg or QuadratureConfig()
    if endpoint_exponent <= -1.0:
        raise ValueError(f"Endpoint exponent must exceed -1, got {endpoint_exponent}")
    if decay <= 0.0:
        raise ValueError(f"Decay exponent must be positive, got {decay}")

    flat = _Flattener()

    def vec(t: float) -> np.ndarray:
        return flat.flatten(f(offset + t))

    power = 1.0 / (1.0 + endpoint_exponent)

    def near(u: float) -> np.ndarray:
        # t = u^power, dt = power u^(power - 1) du
        u = max(u, 1e-300)
        t = max(u ** power, 1e-300)
        return vec(t) * (power * u ** (power - 1.0))

    def far(u: float) -> np.ndarray:
        t = math.exp(u)
        return vec(t) * t

    budget = cfg.abs_tol / 3.0
    if tail is not None:
        if tail_radius is None or tail_radius < 1.0:
            raise ValueError("An exact tail needs tail_radius >= 1")
        radius, tail_error = tail_radius, 0.0
    else:
        constant = tail_constant if tail_constant is not None else _estimate_tail_constant(vec, decay)
        radius = cfg.truncation_radius or truncation_radius(constant, decay, budget)
        tail_error = constant * radius ** (-decay) / decay
        logger.debug("ray_truncation", radius=radius, tail=tail_error, tail_constant=constant)

    r1, e1, n1, ok1 = _run(near, 0.0, 1.0, cfg, budget, cfg.rel_tol / 4.0)
    if radius > 1.0:
        r2, e2, n2, ok2 = _run(far, 0.0, math.log(radius), cfg, budget, cfg.rel_tol / 4.0)
    else:
        r2, e2, n2, ok2 = np.zeros_like(r1), 0.0, 0, True

    total = r1 + r2
    if tail is not None:
        total = total + flat.flatten(tail(radius))
    return _finish(flat, total, e1 + e2 + tail_error, n1 + n2, ok1 and ok2, cfg, "ray")


# Contours -------------------------------------------------------------------


class RayPiece(ReportModel):
    """{r e^{I angle} : r >= start}, traversed outward or inward."""

    kind: Literal["ray"] = "ray"
    angle: float
    start: float = Field(gt=0.0)
    outward: bool = True

    def point(self, r: float) -> complex:
        return r * complex(math.cos(self.angle), math.sin(self.angle))

    def distance(self, z: complex) -> float:
        direction = complex(math.cos(self.angle), math.sin(self.angle))
        along = max((z * direction.conjugate()).real, self.start)
        return abs(z - along * direction)


class ArcPiece(ReportModel):
    """{center + radius e^{I phi}} with phi running from phi_start to phi_end."""

    kind: Literal["arc"] = "arc"
    center_re: float = 0.0
    center_im: float = 0.0
    radius: float = Field(gt=0.0)
    phi_start: float
    phi_end: float

    @property
    def center(self) -> complex:
        return complex(self.center_re, self.center_im)

    def point(self, phi: float) -> complex:
        return self.center + self.radius * complex(math.cos(phi), math.sin(phi))

    def distance(self, z: complex) -> float:
        w = z - self.center
        lo, hi = sorted((self.phi_start, self.phi_end))
        phi = math.atan2(w.imag, w.real)
        # Bring phi into [lo, lo + 2 pi)
        phi = lo + (phi - lo) % (2.0 * math.pi)
        if phi <= hi:
            return abs(abs(w) - self.radius)
        return min(abs(z - self.point(lo)), abs(z - self.point(hi)))


Piece = Union[RayPiece, ArcPiece]


PlaneField = Annotated[
    InstanceOf[ImaginaryUnit],
    PlainSerializer(lambda unit: list(unit.direction.vector), when_used="json"),
]


class ContourPath(ReportModel):
    plane: PlaneField
    pieces: List[Piece]
    shape: Literal["keyhole", "circle", "custom"] = "custom"
    theta: Optional[float] = None
    radius: Optional[float] = None
    center_re: float = 0.0
    center_im: float = 0.0

    @property
    def center(self) -> complex:
        return complex(self.center_re, self.center_im)

    def distance(self, z: complex) -> float:
        return min(piece.distance(z) for piece in self.pieces)

    def surrounds(self, z: complex) -> bool:
        """True when z lies in the region the path encloses in positive orientation."""
        if self.shape == "keyhole":
            return abs(z) > self.radius and abs(math.atan2(z.imag, z.real)) < self.theta
        if self.shape == "circle":
            return abs(z - self.center) < self.radius
        raise PathInvalidError("Enclosure is only defined for keyholes and circles")


def keyhole(plane: ImaginaryUnit, theta: float, a: float) -> ContourPath:
    """In along r e^{I theta} from infinity to a, clockwise over a e^{I phi}
    through phi = 0 down to -theta, out along r e^{-I theta}."""
    if not 0.0 < theta < math.pi:
        raise PathInvalidError(f"Keyhole angle must lie in (0, pi), got {theta}")
    if a <= 0.0:
        raise PathInvalidError(f"Keyhole radius must be positive, got {a}")
    return ContourPath(
        plane=plane,
        pieces=[
            RayPiece(angle=theta, start=a, outward=False),
            ArcPiece(radius=a, phi_start=theta, phi_end=-theta),
            RayPiece(angle=-theta, start=a, outward=True),
        ],
        shape="keyhole",
        theta=theta,
        radius=a,
    )


def circle(plane: ImaginaryUnit, center: complex, radius: float) -> ContourPath:
    """Counter-clockwise circle in C_plane; center given in plane coordinates."""
    return ContourPath(
        plane=plane,
        pieces=[
            ArcPiece(
                center_re=center.real,
                center_im=center.imag,
                radius=radius,
                phi_start=0.0,
                phi_end=2.0 * math.pi,
            )
        ],
        shape="circle",
        radius=radius,
        center_re=center.real,
        center_im=center.imag,
    )


def default_keyhole(theta0: float, a0: float, plane: ImaginaryUnit = UNIT_E1) -> ContourPath:
    return keyhole(plane, 0.5 * (theta0 + math.pi), 0.5 * a0)


def keyhole_pair(theta0: float, a0: float, plane: ImaginaryUnit = UNIT_E1) -> Tuple[ContourPath, ContourPath]:
    """Two nested keyholes with theta0 < theta_s < theta_p < pi and radii a0/2, a0/3."""
    theta_s = theta0 + (math.pi - theta0) / 3.0
    theta_p = theta0 + 2.0 * (math.pi - theta0) / 3.0
    return keyhole(plane, theta_s, a0 / 2.0), keyhole(plane, theta_p, a0 / 3.0)


def check_path(path: ContourPath, singular: List[complex], tol: float = 1e-8) -> None:
    """Raise PathInvalidError when the trace passes within tol of a singular point."""
    for z in singular:
        for w in (z, z.conjugate()):
            d = path.distance(w)
            if d <= tol * (1.0 + abs(w)):
                raise PathInvalidError(f"Path passes through a singular point {w}", distance=d)


Order = Literal["scalar_first", "operator_first"]


def _combine(
    operator: SurfaceIntegrand,
    scalar: Optional[Callable[[Quaternion], Quaternion]],
    order: Order,
    s: Quaternion,
    ds_i: Quaternion,
) -> Value:
    op = operator(s)
    weight = ds_i if scalar is None else (scalar(s) * ds_i if order == "scalar_first" else ds_i * scalar(s))
    if order == "scalar_first":
        return weight * op
    return op * weight


def integrate_contour(
    operator: SurfaceIntegrand,
    path: ContourPath,
    cfg: Optional[QuadratureConfig] = None,
    *,
    scalar: Optional[Callable[[Quaternion], Quaternion]] = None,
    order: Order = "scalar_first",
    decay: float = 1.0,
    tail_constant: Optional[float] = None,
    singular: Optional[List[complex]] = None,
) -> QuadratureReport:
    """(1/2 pi) int_path scalar(s) ds_I operator(s)   (order="scalar_first"), or
    (1/2 pi) int_path operator(s) ds_I scalar(s)      (order="operator_first"),
    with ds_I = -I ds.

    decay and tail_constant describe the product on unbounded pieces, as for integrate_ray.
    """
    cfg = cfg or QuadratureConfig()
    if singular:
        check_path(path, singular)

    unit = path.plane
    minus_i = -unit.q
    pieces = len(path.pieces)
    piece_cfg = cfg.model_copy(update={"abs_tol": cfg.abs_tol / pieces, "rel_tol": cfg.rel_tol / pieces})

    total: Optional[np.ndarray] = None
    error = 0.0
    evaluations = 0
    success = True
    flat = _Flattener()

    for piece in path.pieces:
        if isinstance(piece, RayPiece):
            direction = complex(math.cos(piece.angle), math.sin(piece.angle))
            sign = 1.0 if piece.outward else -1.0
            d_s = minus_i * from_complex(direction * sign, unit)

            def ray_value(r: float, direction: complex = direction, d_s: Quaternion = d_s) -> Value:
                return _combine(operator, scalar, order, from_complex(r * direction, unit), d_s)

            report = integrate_ray(
                ray_value,
                piece_cfg,
                decay=decay,
                tail_constant=tail_constant,
                offset=piece.start,
            )
            vector = flat.flatten(report.value)
            error += report.error_estimate
            evaluations += report.evaluations
            success = success and report.converged
        else:
            lo, hi = sorted((piece.phi_start, piece.phi_end))
            sign = 1.0 if piece.phi_end >= piece.phi_start else -1.0

            def arc_vec(phi: float, piece: ArcPiece = piece, sign: float = sign) -> np.ndarray:
                z = piece.point(phi)
                e = complex(math.cos(phi), math.sin(phi))
                # ds = I a e^{I phi} dphi, so ds_I = a e^{I phi} dphi
                d_s = from_complex(piece.radius * e * sign, unit)
                return flat.flatten(_combine(operator, scalar, order, from_complex(z, unit), d_s))

            res, err, neval, ok = _run(arc_vec, lo, hi, piece_cfg, piece_cfg.abs_tol, piece_cfg.rel_tol)
            vector = res
            error += err
            evaluations += neval
            success = success and ok
        total = vector if total is None else total + vector

    scale = 1.0 / (2.0 * math.pi)
    return _finish(flat, total * scale, error * scale, evaluations, success, cfg, path.shape)
