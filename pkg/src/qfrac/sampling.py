"""Seeded random samplers for matrices, units and resolvent points."""

import math
from typing import Optional, Tuple

import numpy as np

from .errors import NotInvertibleError
from .qmatrix import QMatrix, condition_number, inverse
from .quaternion import ImaginaryUnit, Quaternion
from .spectral import SpectralReport

DEFAULT_MAX_ARG = 0.75 * math.pi


def random_unit(rng: np.random.Generator) -> ImaginaryUnit:
    while True:
        v = rng.standard_normal(3)
        if np.linalg.norm(v) > 1e-6:
            return ImaginaryUnit.from_vector(v)


def random_quaternion(rng: np.random.Generator, scale: float = 1.0) -> Quaternion:
    return Quaternion.from_array(rng.standard_normal(4) * scale)


def random_qmatrix(n: int, rng: np.random.Generator, scale: float = 1.0) -> QMatrix:
    """Gaussian entries with variance scale^2 / n."""
    return QMatrix(rng.standard_normal((n, n, 4)) * (scale / math.sqrt(max(n, 1))))


def random_sectorial_point(
    rng: np.random.Generator,
    max_arg: float = DEFAULT_MAX_ARG,
    modulus: Tuple[float, float] = (0.5, 2.0),
) -> Quaternion:
    """A point with arg < max_arg and modulus in the given range, on a random slice."""
    r = rng.uniform(*modulus)
    theta = rng.uniform(0.0, max_arg)
    return random_unit(rng).point(r * math.cos(theta), r * math.sin(theta))


def random_sectorial(
    n: int,
    rng: np.random.Generator,
    max_arg: float = DEFAULT_MAX_ARG,
    perturbation: float = 0.3,
    max_condition: float = 10.0,
) -> QMatrix:
    """S D S^{-1} with D diagonal of sectorial points and S a well-conditioned similarity."""
    diagonal = QMatrix.diag([random_sectorial_point(rng, max_arg) for _ in range(n)])
    while True:
        S = QMatrix.identity(n) + random_qmatrix(n, rng, perturbation)
        try:
            if condition_number(S) < max_condition:
                return S @ diagonal @ inverse(S)
        except NotInvertibleError:
            continue


def random_resolvent_point(
    rng: np.random.Generator,
    spectrum: SpectralReport,
    scale: float = 2.0,
    min_distance: float = 0.1,
    avoid: Optional[Quaternion] = None,
) -> Quaternion:
    """A random s with d_S(s, sigma_S(T)) >= min_distance, optionally off the sphere of avoid."""
    while True:
        s = random_quaternion(rng, scale)
        if spectrum.distance(s) < min_distance:
            continue
        if avoid is not None and _sphere_gap(s, avoid) < min_distance:
            continue
        return s


def _sphere_gap(s: Quaternion, p: Quaternion) -> float:
    return abs(complex(s.w, s.imag_norm) - complex(p.w, p.imag_norm))
