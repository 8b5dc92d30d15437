"""
Quaternion core.

Exact quaternion arithmetic, the slice decomposition q = q0 + I_q q1, the
argument, the (single-branch) logarithm, real powers and the sphere metric d_S.

Real inputs get the conventional imaginary unit e1 wherever a unit is needed.
"""

import math
from dataclasses import dataclass
from typing import Iterable, List, Sequence, Tuple, Union

import numpy as np

from .errors import DomainError

Real = Union[int, float]

# Tolerance band around (-inf, 0] for log/pow: s1 <= NEG_AXIS_TOL * (1 + |s|) and s0 < 0.
NEG_AXIS_TOL = 1e-12
UNIT_TOL = 1e-12


@dataclass(frozen=True, slots=True)
class Quaternion:
    """A point w + x e1 + y e2 + z e3 of H."""

    w: float = 0.0
    x: float = 0.0
    y: float = 0.0
    z: float = 0.0

    # Construction ---------------------------------------------------------

    @classmethod
    def real(cls, value: Real) -> "Quaternion":
        return cls(float(value), 0.0, 0.0, 0.0)

    @classmethod
    def from_array(cls, values: Sequence[float]) -> "Quaternion":
        if len(values) != 4:
            raise ValueError(f"Quaternion needs 4 components, got {len(values)}")
        return cls(float(values[0]), float(values[1]), float(values[2]), float(values[3]))

    @classmethod
    def coerce(cls, value: Union["Quaternion", Real]) -> "Quaternion":
        if isinstance(value, Quaternion):
            return value
        return cls.real(value)

    # Accessors ------------------------------------------------------------

    @property
    def vector(self) -> Tuple[float, float, float]:
        return (self.x, self.y, self.z)

    @property
    def imag(self) -> "Quaternion":
        return Quaternion(0.0, self.x, self.y, self.z)

    @property
    def imag_norm(self) -> float:
        return math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z)

    @property
    def norm2(self) -> float:
        return self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z

    def __abs__(self) -> float:
        return math.sqrt(self.norm2)

    def as_array(self) -> np.ndarray:
        return np.array([self.w, self.x, self.y, self.z], dtype=float)

    def to_list(self) -> List[float]:
        return [self.w, self.x, self.y, self.z]

    # Arithmetic -----------------------------------------------------------

    def conj(self) -> "Quaternion":
        return Quaternion(self.w, -self.x, -self.y, -self.z)

    def inverse(self) -> "Quaternion":
        n2 = self.norm2
        if n2 == 0.0:
            raise DomainError("Zero quaternion has no inverse")
        return Quaternion(self.w / n2, -self.x / n2, -self.y / n2, -self.z / n2)

    def __neg__(self) -> "Quaternion":
        return Quaternion(-self.w, -self.x, -self.y, -self.z)

    def __add__(self, other: Union["Quaternion", Real]) -> "Quaternion":
        o = Quaternion.coerce(other)
        return Quaternion(self.w + o.w, self.x + o.x, self.y + o.y, self.z + o.z)

    __radd__ = __add__

    def __sub__(self, other: Union["Quaternion", Real]) -> "Quaternion":
        o = Quaternion.coerce(other)
        return Quaternion(self.w - o.w, self.x - o.x, self.y - o.y, self.z - o.z)

    def __rsub__(self, other: Real) -> "Quaternion":
        return Quaternion.coerce(other) - self

    def __mul__(self, other: Union["Quaternion", Real]) -> "Quaternion":
        if not isinstance(other, Quaternion):
            if isinstance(other, (int, float, np.floating, np.integer)):
                c = float(other)
                return Quaternion(self.w * c, self.x * c, self.y * c, self.z * c)
            return NotImplemented
        a1, b1, c1, d1 = self.w, self.x, self.y, self.z
        a2, b2, c2, d2 = other.w, other.x, other.y, other.z
        return Quaternion(
            a1 * a2 - b1 * b2 - c1 * c2 - d1 * d2,
            a1 * b2 + b1 * a2 + c1 * d2 - d1 * c2,
            a1 * c2 - b1 * d2 + c1 * a2 + d1 * b2,
            a1 * d2 + b1 * c2 - c1 * b2 + d1 * a2,
        )

    def __rmul__(self, other: Real) -> "Quaternion":
        if isinstance(other, (int, float, np.floating, np.integer)):
            return self * float(other)
        return NotImplemented

    def __truediv__(self, other: Real) -> "Quaternion":
        if isinstance(other, Quaternion):
            raise TypeError("Quaternion division is ambiguous; multiply by .inverse() explicitly")
        c = float(other)
        return Quaternion(self.w / c, self.x / c, self.y / c, self.z / c)

    def __pow__(self, m: int) -> "Quaternion":
        if not isinstance(m, int) or m < 0:
            raise TypeError("Only non-negative integer powers; use qpow for real exponents")
        result = ONE
        for _ in range(m):
            result = result * self
        return result

    def is_close(self, other: Union["Quaternion", Real], tol: float = 1e-12) -> bool:
        return abs(self - Quaternion.coerce(other)) <= tol

    def __repr__(self) -> str:
        return f"Quaternion({self.w!r}, {self.x!r}, {self.y!r}, {self.z!r})"


ZERO = Quaternion()
ONE = Quaternion(1.0)
E1 = Quaternion(0.0, 1.0, 0.0, 0.0)
E2 = Quaternion(0.0, 0.0, 1.0, 0.0)
E3 = Quaternion(0.0, 0.0, 0.0, 1.0)
BASIS = (ONE, E1, E2, E3)


@dataclass(frozen=True, slots=True)
class ImaginaryUnit:
    """A purely imaginary unit quaternion I, I^2 = -1."""

    direction: Quaternion

    def __post_init__(self) -> None:
        d = self.direction
        if abs(d.w) > UNIT_TOL or abs(abs(d) - 1.0) > UNIT_TOL:
            raise ValueError(f"Not an imaginary unit: {d!r}")

    @classmethod
    def from_vector(cls, vector: Iterable[float]) -> "ImaginaryUnit":
        x, y, z = (float(v) for v in vector)
        n = math.sqrt(x * x + y * y + z * z)
        if n == 0.0:
            raise ValueError("Imaginary unit direction must be nonzero")
        return cls(Quaternion(0.0, x / n, y / n, z / n))

    @classmethod
    def parse(cls, text: str) -> "ImaginaryUnit":
        """Parse ``"a,b,c"`` (normalized) into a unit."""
        parts = [p for p in text.replace(" ", "").split(",") if p]
        if len(parts) != 3:
            raise ValueError(f"Expected three comma-separated numbers, got {text!r}")
        return cls.from_vector(float(p) for p in parts)

    @property
    def q(self) -> Quaternion:
        return self.direction

    def point(self, a: float, b: float) -> Quaternion:
        """a + I b in the plane C_I."""
        d = self.direction
        return Quaternion(a, b * d.x, b * d.y, b * d.z)

    def __neg__(self) -> "ImaginaryUnit":
        return ImaginaryUnit(-self.direction)


UNIT_E1 = ImaginaryUnit(E1)
UNIT_E2 = ImaginaryUnit(E2)
UNIT_E3 = ImaginaryUnit(E3)


# Structure constants: e_a e_b = sum_c MUL_TABLE[a, b, c] e_c.
MUL_TABLE = np.zeros((4, 4, 4))
for _a, _ea in enumerate(BASIS):
    for _b, _eb in enumerate(BASIS):
        MUL_TABLE[_a, _b] = (_ea * _eb).as_array()
del _a, _b, _ea, _eb


def qmul_array(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Hamilton product of broadcastable arrays with trailing axis of length 4."""
    return np.einsum("...a,...b,abc->...c", a, b, MUL_TABLE)


def slice_of(q: Quaternion) -> Tuple[float, float, ImaginaryUnit]:
    """Decompose q = s0 + I s1 with s1 >= 0; real q gets I = e1."""
    s1 = q.imag_norm
    if s1 == 0.0:
        return q.w, 0.0, UNIT_E1
    unit = ImaginaryUnit(Quaternion(0.0, q.x / s1, q.y / s1, q.z / s1))
    return q.w, s1, unit


def to_complex(q: Quaternion, unit: ImaginaryUnit) -> complex:
    """Coordinates of q in C_I (q is assumed to lie in that plane)."""
    d = unit.direction
    return complex(q.w, q.x * d.x + q.y * d.y + q.z * d.z)


def from_complex(z: complex, unit: ImaginaryUnit) -> Quaternion:
    return unit.point(z.real, z.imag)


def on_negative_axis(q: Quaternion) -> bool:
    """True when q lies in the exclusion band around (-inf, 0]."""
    return q.w < 0.0 and q.imag_norm <= NEG_AXIS_TOL * (1.0 + abs(q))


def arg(q: Quaternion) -> float:
    """Unique theta in [0, pi] with q = |q| exp(theta I_q)."""
    if q.norm2 == 0.0:
        raise DomainError("arg is undefined at 0")
    s0, s1, _ = slice_of(q)
    # atan2 equals arccos(s0/|q|) on s1 >= 0 and cannot leave [0, pi]
    return math.atan2(s1, s0)


def qexp(q: Quaternion) -> Quaternion:
    s0, s1, unit = slice_of(q)
    r = math.exp(s0)
    return unit.point(r * math.cos(s1), r * math.sin(s1))


def qlog(q: Quaternion) -> Quaternion:
    """Principal logarithm ln|q| + I_q arccos(q0/|q|), defined off (-inf, 0]."""
    if q.norm2 == 0.0 or on_negative_axis(q):
        raise DomainError(f"qlog undefined on the closed negative real axis: {q!r}")
    _, _, unit = slice_of(q)
    return unit.point(math.log(abs(q)), arg(q))


def qpow(q: Quaternion, alpha: float) -> Quaternion:
    """q^alpha = exp(alpha log q); stays in the slice plane of q."""
    if q.norm2 == 0.0 or on_negative_axis(q):
        raise DomainError(f"qpow undefined on the closed negative real axis: {q!r}")
    s0, s1, unit = slice_of(q)
    if s1 == 0.0:
        return Quaternion(s0 ** alpha)
    r = abs(q) ** alpha
    theta = alpha * arg(q)
    return unit.point(r * math.cos(theta), r * math.sin(theta))


def ds_metric(s: Quaternion, p: Quaternion) -> float:
    """max{2|s0 - p0|, ||p|^2 - |s|^2|}; constant on the spheres [s] and [p]."""
    return max(2.0 * abs(s.w - p.w), abs(p.norm2 - s.norm2))
