"""
Slice hyperholomorphic Cauchy kernels.

S_L^{-1}(s, x) = -(x^2 - 2 Re(s) x + |s|^2)^{-1} (x - conj(s))
S_R^{-1}(s, x) = -(x - conj(s)) (x^2 - 2 Re(s) x + |s|^2)^{-1}

Both reduce to (s - x)^{-1} when s and x commute. Powers use the closed
binomial form, never a repeated slice product.
"""

from math import comb
from typing import Callable, Tuple

from .errors import SingularKernelError
from .quaternion import ONE, ImaginaryUnit, Quaternion, slice_of

SPHERE_TOL = 1e-10


def _kernel_denominator(s: Quaternion, x: Quaternion) -> Quaternion:
    """Q_s(x) = x^2 - 2 Re(s) x + |s|^2, guarded against x in [s]."""
    q = x * x - x * (2.0 * s.w) + s.norm2
    scale = (1.0 + abs(s)) ** 2
    if abs(q) < SPHERE_TOL * scale:
        raise SingularKernelError(
            f"x lies on the sphere [s]: s={s!r}, x={x!r}",
            residual=abs(q),
        )
    return q


def cauchy_left(s: Quaternion, x: Quaternion) -> Quaternion:
    """Left kernel S_L^{-1}(s, x), right slice hyperholomorphic in s."""
    q_inv = _kernel_denominator(s, x).inverse()
    return -(q_inv * (x - s.conj()))


def cauchy_right(s: Quaternion, x: Quaternion) -> Quaternion:
    """Right kernel S_R^{-1}(s, x) = -S_L^{-1}(x, s)."""
    q_inv = _kernel_denominator(s, x).inverse()
    return -((x - s.conj()) * q_inv)


def _binomial_sum(n: int, s: Quaternion, x: Quaternion, *, conj_first: bool) -> Quaternion:
    s_bar = s.conj()
    minus_x = -x
    total = Quaternion()
    for k in range(n + 1):
        if conj_first:
            term = (s_bar ** (n - k)) * (minus_x ** k)
        else:
            term = (minus_x ** k) * (s_bar ** (n - k))
        total = total + term * float(comb(n, k))
    return total


def cauchy_left_pow(n: int, s: Quaternion, x: Quaternion) -> Quaternion:
    """S_L^{-n}(s, x) = Q_s(x)^{-n} sum_k C(n,k) (-x)^k conj(s)^{n-k}."""
    if n < 1:
        raise ValueError(f"Kernel power needs n >= 1, got {n}")
    q_inv = _kernel_denominator(s, x).inverse()
    return (q_inv ** n) * _binomial_sum(n, s, x, conj_first=False)


def cauchy_right_pow(n: int, s: Quaternion, x: Quaternion) -> Quaternion:
    """S_R^{-n}(s, x) = sum_k C(n,k) conj(s)^{n-k} (-x)^k Q_s(x)^{-n}."""
    if n < 1:
        raise ValueError(f"Kernel power needs n >= 1, got {n}")
    q_inv = _kernel_denominator(s, x).inverse()
    return _binomial_sum(n, s, x, conj_first=True) * (q_inv ** n)


def slice_pair(x: Quaternion, unit: ImaginaryUnit) -> Tuple[Quaternion, Quaternion]:
    """(x_I, conj(x_I)) with x_I = x0 + I x1 on the sphere of x."""
    x0, x1, _ = slice_of(x)
    x_i = unit.point(x0, x1)
    return x_i, x_i.conj()


def represent(f_i: Quaternion, f_i_conj: Quaternion, unit: ImaginaryUnit, x: Quaternion) -> Quaternion:
    """Representation formula for left slice functions.

    f(x) = 1/2 (1 - I_x I) f(x_I) + 1/2 (1 + I_x I) f(conj(x_I))
    """
    _, x1, unit_x = slice_of(x)
    if x1 == 0.0 or unit_x == unit:
        # real x, or x already in C_I
        return f_i
    if unit_x == -unit:
        return f_i_conj
    ix_i = unit_x.q * unit.q
    return (ONE - ix_i) * f_i * 0.5 + (ONE + ix_i) * f_i_conj * 0.5


def extend_slice_function(
    f: Callable[[Quaternion], Quaternion],
    x: Quaternion,
    unit: ImaginaryUnit,
) -> Quaternion:
    """Evaluate a left slice function known on C_I at an arbitrary x."""
    x_i, x_i_conj = slice_pair(x, unit)
    return represent(f(x_i), f(x_i_conj), unit, x)
