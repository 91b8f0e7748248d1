"""Growth-rate sweeps of characters in t and their comparison with widths."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .curve import HyperellipticCurve, PathOnCurve
from .differentials import (QuadraticDifferential, SlTwoSystem, det_map, transversality_margin,
                            width)
from .errors import DegenerateFit, VanishingTrace
from .monodromy import log_char, transfer_matrix
from .propagate import PropagationInfo


@dataclass(frozen=True, eq=False)
class WkbSweep:
    t_grid: np.ndarray
    log_chars: np.ndarray  # nan where the trace vanished numerically
    slope: float
    intercept: float
    residual: float
    est_error: float = 0.0

    def rows(self, loop_id: str = "loop"):
        for t, v in zip(self.t_grid, self.log_chars):
            yield {"t": float(t), "loop_id": loop_id, "log_abs_char": float(v)}


def fit_slope(t: np.ndarray, y: np.ndarray, frac: float = 0.5) -> tuple[float, float, float]:
    """Least-squares line through the top ``frac`` of the grid.

    Returns (slope, intercept, max absolute residual).
    """
    ok = np.isfinite(y)
    t, y = np.asarray(t)[ok], np.asarray(y)[ok]
    n = len(t)
    m = max(int(math.ceil(n * frac)), 2)
    if n < 4 or m < 2:
        raise DegenerateFit(f"only {n} usable grid points")
    tt, yy = t[-m:], y[-m:]
    slope, intercept = np.polyfit(tt, yy, 1)
    res = float(np.abs(yy - (slope * tt + intercept)).max())
    return float(slope), float(intercept), res


def sweep(curve: HyperellipticCurve, A: SlTwoSystem, loop: PathOnCurve, t_grid,
          tol: float = 1e-10, frac: float = 0.5) -> WkbSweep:
    t_grid = np.asarray(t_grid, dtype=float)
    if np.any(np.diff(t_grid) <= 0):
        raise ValueError("t_grid must be strictly increasing")
    vals = np.full(len(t_grid), np.nan)
    info = PropagationInfo()
    for j, t in enumerate(t_grid):
        M = transfer_matrix(curve, A, float(t), loop, tol=tol, info=info)
        try:
            vals[j] = log_char(M)
        except VanishingTrace:
            pass
    slope, intercept, res = fit_slope(t_grid, vals, frac)
    return WkbSweep(t_grid, vals, slope, intercept, res, info.est_error)


def is_wkb_curve(phi: QuadraticDifferential, loop: PathOnCurve, tol: float = 1e-6) -> tuple[bool, float]:
    """Transversality to the vertical foliation, with the minimal margin."""
    margin = transversality_margin(phi, loop)
    return margin > tol, margin


def check_upper_bound(sw: WkbSweep, w: float, slack: float = 0.02) -> bool:
    return sw.slope <= w * (1.0 + slack)


def relative_error(sw: WkbSweep, w: float) -> float:
    return abs(sw.slope - w) / w


def system_with_det(phi: QuadraticDifferential, rng: np.random.Generator) -> SlTwoSystem:
    """A generic sl2-system with det(A) = phi.

    beta is a random linear form with root xb; alpha is chosen with
    alpha(xb)^2 = -q(xb) so that -q - alpha^2 is divisible by beta.
    """
    q = phi.coeffs
    P = np.polynomial.polynomial
    for _ in range(100):
        b = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        if abs(b[1]) < 0.1:
            continue
        xb = -b[0] / b[1]
        a1 = rng.standard_normal() + 1j * rng.standard_normal()
        a0 = np.sqrt(-P.polyval(xb, q)) - a1 * xb
        a = np.array([a0, a1])
        num = -q - P.polymul(a, a)[:3]
        c, rem = P.polydiv(num, b)
        if np.abs(rem).max() > 1e-9 * max(1.0, np.abs(num).max()):
            continue
        c = np.concatenate([c, np.zeros(2 - len(c))])[:2]
        A = SlTwoSystem(phi.curve, np.array([a, b, c]))
        if np.abs(det_map(A).coeffs - q).max() <= 1e-10 * max(1.0, np.abs(q).max()):
            return A
    raise RuntimeError("could not construct a system with the requested determinant")


def model_wkb_setup(kappa: float = 1.0, radius: float = 0.75):
    """Curve, quadratic differential and loop with a certified WKB loop.

    On y^2 = (x^2 - 1/4)(x^4 - 16) the differential phi = -kappa r(0) dx^2/y^2,
    r(x) = x^4 - 16, is close to -kappa dx^2 / (x^2 - 1/4) near the cut
    [-1/2, 1/2]; a circle around the cut is transverse to its vertical
    foliation.
    """
    from .curve import circle_path, make_curve

    p = np.polymul([1, 0, -0.25], [1, 0, 0, 0, -16])
    curve = make_curve(p)
    phi = QuadraticDifferential(curve, [-kappa * -16.0, 0, 0])
    loop = circle_path(0j, radius)
    return curve, phi, loop
