"""
qfrac

Quaternionic S-spectrum, S-resolvents and fractional powers of
quaternionic matrices, computed by adaptive quadrature.
"""

__version__ = "0.1.0"

from .errors import QFracError
from .fracpow import (
    frac_power_halfplane,
    frac_power_neg,
    frac_power_neg_contour,
    frac_power_pos,
    kato_F,
    kato_power,
    s_calculus,
    verify_semigroup,
)
from .qmatrix import QMatrix, inverse, load_matrix, opnorm
from .quaternion import ImaginaryUnit, Quaternion
from .spectral import s_spectrum, sector_estimate, sresolvent_left, sresolvent_right

__all__ = [
    "ImaginaryUnit",
    "QFracError",
    "QMatrix",
    "Quaternion",
    "frac_power_halfplane",
    "frac_power_neg",
    "frac_power_neg_contour",
    "frac_power_pos",
    "inverse",
    "kato_F",
    "kato_power",
    "load_matrix",
    "opnorm",
    "s_calculus",
    "s_spectrum",
    "sector_estimate",
    "sresolvent_left",
    "sresolvent_right",
    "verify_semigroup",
]
