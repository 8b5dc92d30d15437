"""
Quaternionic matrices as right-linear operators on H^n.

A QMatrix acts on column vectors by (Tv)_i = sum_j T_ij v_j, so (Tv)a = T(va)
for every scalar a. Inversion, norms and eigenvalues go through the complex
embedding q = z1 + z2 e2  ->  [[z1, z2], [-conj(z2), conj(z1)]], z1, z2 in span{1, e1}.
"""

import json
from pathlib import Path
from typing import Iterable, List, Sequence, Union

import numpy as np
import scipy.linalg
import structlog
from pydantic import BaseModel, Field, ValidationError

from .errors import MatrixParseError, NotInvertibleError
from .quaternion import MUL_TABLE, Quaternion, qmul_array

logger = structlog.get_logger(__name__)

Scalar = Union[Quaternion, int, float]

EPS = np.finfo(float).eps
# Numerically singular beyond this condition number
MAX_CONDITION = 1.0 / (100.0 * EPS)


class QMatrix:
    """Immutable n x n quaternionic matrix backed by an (n, n, 4) float array."""

    __slots__ = ("_data",)

    def __init__(self, data: Union[np.ndarray, Sequence]):
        arr = np.array(data, dtype=float)
        if arr.ndim != 3 or arr.shape[0] != arr.shape[1] or arr.shape[2] != 4:
            raise ValueError(f"QMatrix data must have shape (n, n, 4), got {arr.shape}")
        arr.flags.writeable = False
        self._data = arr

    # Construction ---------------------------------------------------------

    @classmethod
    def identity(cls, n: int) -> "QMatrix":
        data = np.zeros((n, n, 4))
        data[np.arange(n), np.arange(n), 0] = 1.0
        return cls(data)

    @classmethod
    def zeros(cls, n: int) -> "QMatrix":
        return cls(np.zeros((n, n, 4)))

    @classmethod
    def diag(cls, values: Iterable[Scalar]) -> "QMatrix":
        qs = [Quaternion.coerce(v) for v in values]
        data = np.zeros((len(qs), len(qs), 4))
        for i, q in enumerate(qs):
            data[i, i] = q.as_array()
        return cls(data)

    @classmethod
    def scalar(cls, q: Scalar, n: int) -> "QMatrix":
        return cls.diag([q] * n)

    @classmethod
    def from_entries(cls, rows: Sequence[Sequence[Scalar]]) -> "QMatrix":
        return cls([[Quaternion.coerce(q).as_array() for q in row] for row in rows])

    @classmethod
    def from_real(cls, matrix: np.ndarray) -> "QMatrix":
        m = np.asarray(matrix, dtype=float)
        data = np.zeros(m.shape + (4,))
        data[..., 0] = m
        return cls(data)

    @classmethod
    def from_embedding(cls, embedded: np.ndarray) -> "QMatrix":
        """Inverse of embed(); averages the paired cells onto the symplectic form."""
        e = np.asarray(embedded)
        a = 0.5 * (e[0::2, 0::2] + np.conj(e[1::2, 1::2]))
        b = 0.5 * (e[0::2, 1::2] - np.conj(e[1::2, 0::2]))
        return cls(np.stack([a.real, a.imag, b.real, b.imag], axis=-1))

    # Accessors ------------------------------------------------------------

    @property
    def n(self) -> int:
        return self._data.shape[0]

    @property
    def data(self) -> np.ndarray:
        return self._data

    def entry(self, i: int, j: int) -> Quaternion:
        return Quaternion.from_array(self._data[i, j])

    @property
    def entries(self) -> List[List[Quaternion]]:
        return [[self.entry(i, j) for j in range(self.n)] for i in range(self.n)]

    def embed(self) -> np.ndarray:
        return embed(self)

    # Arithmetic -----------------------------------------------------------

    def __add__(self, other: "QMatrix") -> "QMatrix":
        return QMatrix(self._data + other._data)

    def __sub__(self, other: "QMatrix") -> "QMatrix":
        return QMatrix(self._data - other._data)

    def __neg__(self) -> "QMatrix":
        return QMatrix(-self._data)

    def __matmul__(self, other: "QMatrix") -> "QMatrix":
        if self.n != other.n:
            raise ValueError(f"Dimension mismatch: {self.n} vs {other.n}")
        return QMatrix(np.einsum("ija,jkb,abc->ikc", self._data, other._data, MUL_TABLE, optimize=True))

    def __mul__(self, other: Scalar) -> "QMatrix":
        """T * q: every entry multiplied by q on the right, i.e. T composed with q*Id."""
        if isinstance(other, Quaternion):
            return QMatrix(qmul_array(self._data, other.as_array()))
        if isinstance(other, (int, float, np.floating, np.integer)):
            return QMatrix(self._data * float(other))
        return NotImplemented

    def __rmul__(self, other: Scalar) -> "QMatrix":
        """q * T: every entry multiplied by q on the left."""
        if isinstance(other, Quaternion):
            return QMatrix(qmul_array(other.as_array(), self._data))
        if isinstance(other, (int, float, np.floating, np.integer)):
            return QMatrix(self._data * float(other))
        return NotImplemented

    def __truediv__(self, other: float) -> "QMatrix":
        return QMatrix(self._data / float(other))

    def apply(self, v: np.ndarray) -> np.ndarray:
        """Action on a vector of H^n given as an (n, 4) array."""
        return np.einsum("ija,jb,abc->ic", self._data, np.asarray(v, dtype=float), MUL_TABLE, optimize=True)

    def power(self, k: int) -> "QMatrix":
        if k < 0:
            return inverse(self).power(-k)
        result = QMatrix.identity(self.n)
        for _ in range(k):
            result = result @ self
        return result

    # Comparison -----------------------------------------------------------

    def allclose(self, other: "QMatrix", atol: float = 1e-12, rtol: float = 0.0) -> bool:
        return bool(np.allclose(self._data, other._data, atol=atol, rtol=rtol))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, QMatrix):
            return NotImplemented
        return self._data.shape == other._data.shape and bool(np.array_equal(self._data, other._data))

    def __hash__(self) -> int:
        return hash((self._data.shape, self._data.tobytes()))

    def __repr__(self) -> str:
        return f"QMatrix(n={self.n}, entries={self._data.tolist()!r})"

    # Serialization --------------------------------------------------------

    def to_json(self) -> dict:
        return {"n": self.n, "entries": self._data.tolist()}


def embed(T: QMatrix) -> np.ndarray:
    """2n x 2n complex embedding in 2 x 2 symplectic cells."""
    d = T.data
    a = d[..., 0] + 1j * d[..., 1]
    b = d[..., 2] + 1j * d[..., 3]
    n = T.n
    e = np.empty((2 * n, 2 * n), dtype=complex)
    e[0::2, 0::2] = a
    e[0::2, 1::2] = b
    e[1::2, 0::2] = -np.conj(b)
    e[1::2, 1::2] = np.conj(a)
    return e


def symplectic_defect(embedded: np.ndarray) -> float:
    """Largest deviation of a complex matrix from the symplectic cell form."""
    e = np.asarray(embedded)
    d1 = np.abs(e[0::2, 0::2] - np.conj(e[1::2, 1::2]))
    d2 = np.abs(e[0::2, 1::2] + np.conj(e[1::2, 0::2]))
    return float(max(d1.max(initial=0.0), d2.max(initial=0.0)))


def condition_number(T: QMatrix) -> float:
    return float(np.linalg.cond(embed(T)))


def inverse(T: QMatrix) -> QMatrix:
    """Inverse via LU with partial pivoting on the embedding."""
    e = embed(T)
    cond = float(np.linalg.cond(e)) if T.n else 1.0
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        raise NotInvertibleError(f"Matrix is numerically singular (cond={cond:.3e})", condition=cond)
    lu, piv = scipy.linalg.lu_factor(e, check_finite=False)
    inv_e = scipy.linalg.lu_solve((lu, piv), np.eye(2 * T.n, dtype=complex), check_finite=False)
    defect = symplectic_defect(inv_e)
    if defect > 1e-10 * max(1.0, cond):
        logger.warning("inverse_symplectic_defect", defect=defect, condition=cond)
    return QMatrix.from_embedding(inv_e)


def opnorm(T: QMatrix) -> float:
    """Operator norm on (H^n, l2): the spectral norm of the embedding."""
    if T.n == 0:
        return 0.0
    return float(np.linalg.norm(embed(T), 2))


# File format ----------------------------------------------------------------


class MatrixFile(BaseModel):
    """On-disk matrix: {"n": int, "entries": [[[w, x, y, z], ...], ...]} row-major"""

    n: int = Field(ge=1)
    entries: List[List[List[float]]]


def parse_matrix_json(text: str) -> QMatrix:
    """Parse the JSON matrix format; errors carry line and column."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise MatrixParseError(f"Invalid JSON: {e.msg}", line=e.lineno, column=e.colno) from e

    try:
        model = MatrixFile.model_validate(raw)
    except ValidationError as e:
        first = e.errors()[0]
        location = ".".join(str(p) for p in first.get("loc", ()))
        raise MatrixParseError(f"Invalid matrix file at {location or '<root>'}: {first.get('msg')}") from e

    if len(model.entries) != model.n:
        raise MatrixParseError(f"Expected {model.n} rows, got {len(model.entries)}")
    for i, row in enumerate(model.entries):
        if len(row) != model.n:
            raise MatrixParseError(f"Row {i} has {len(row)} entries, expected {model.n}")
        for j, q in enumerate(row):
            if len(q) != 4:
                raise MatrixParseError(f"Entry ({i}, {j}) must be [w, x, y, z]")
    data = np.array(model.entries, dtype=float)
    if not np.all(np.isfinite(data)):
        raise MatrixParseError("Matrix entries must be finite")
    return QMatrix(data)


def load_matrix(path: Union[str, Path]) -> QMatrix:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise MatrixParseError(f"Cannot read matrix file {path}: {e}") from e
    T = parse_matrix_json(text)
    logger.debug("matrix_loaded", path=str(path), n=T.n)
    return T


def dump_matrix(T: QMatrix) -> str:
    return json.dumps(T.to_json())
