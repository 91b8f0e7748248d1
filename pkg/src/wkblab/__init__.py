"""Numerical experiments with sl2-systems on genus-2 curves: monodromy,
WKB growth of characters, flat dynamics of quadratic differentials, fibers
of the determinant map and scaling laws of the semiflat picture."""

__version__ = "0.1.0"

from .curve import HyperellipticCurve, PathOnCurve, canonical_generators, circle_path, make_curve
from .differentials import (AbelianDifferential, QuadraticDifferential, SlTwoSystem, d_det, det_map,
                            noether_rank, qd_norm, random_system, width, zero_system)
from .errors import WkbLabError
from .monodromy import representation, transfer_matrix

__all__ = [
    "AbelianDifferential", "HyperellipticCurve", "PathOnCurve", "QuadraticDifferential", "SlTwoSystem",
    "WkbLabError", "canonical_generators", "circle_path", "d_det", "det_map", "make_curve", "noether_rank",
    "qd_norm", "random_system", "representation", "transfer_matrix", "width", "zero_system",
]
