"""Parallel transport of d + tA along paths on the curve, monodromy
representations of the surface group, characters, and the diagonal model
ODE used in the growth-rate arguments.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.interpolate import CubicSpline

from .curve import HyperellipticCurve, PathOnCurve, SheetTrack, SurfaceGroupGenerators
from .differentials import SlTwoSystem
from .errors import RelationViolation, VanishingTrace
from .propagate import PropagationInfo, RenormalizedMatrix, propagate


def _check_curve(curve: HyperellipticCurve, A: SlTwoSystem) -> None:
    if A.curve is not curve and not np.array_equal(A.curve.p_coeffs, curve.p_coeffs):
        raise ValueError("system and curve do not match")


def transfer_matrix(curve: HyperellipticCurve, A: SlTwoSystem, t: float, path: PathOnCurve,
                    tol: float = 1e-10, info: PropagationInfo | None = None,
                    track: SheetTrack | None = None) -> RenormalizedMatrix:
    """Solution at the end of the path of dF + tAF = 0 with F(start) = I."""
    _check_curve(curve, A)
    if t < 0:
        raise ValueError("t must be nonnegative")
    track = SheetTrack(curve, path) if track is None else track
    if t == 0 or not np.any(A.coeffs):
        return RenormalizedMatrix.identity()
    total = RenormalizedMatrix.identity()
    for k, seg in enumerate(path.segments):
        def coef(u, k=k, seg=seg):
            x = seg.point(u)
            scal = -t * seg.deriv(u) / track.y_at(k, u)
            return A.numerator_matrix(x) * scal[:, None, None]

        total = propagate(coef, tol=tol, info=info) @ total
    return total.project_unimodular()


def log_char(M: RenormalizedMatrix, tol: float = 1e-12) -> float:
    """log |tr| of the represented matrix."""
    tr = abs(M.trace())
    if tr < tol:
        raise VanishingTrace(f"|tr m| = {tr:.2e} is numerically zero")
    return M.log_scale + math.log(tr)


def relation_monodromy(gens: list[RenormalizedMatrix]) -> RenormalizedMatrix:
    """Monodromy of the path a1 b1 a1^-1 b1^-1 a2 b2 a2^-1 b2^-1.

    Transport along a concatenation composes right to left, so the word
    read left to right becomes a product with the first letter rightmost.
    """
    a1, b1, a2, b2 = gens
    out = RenormalizedMatrix.identity()
    for m in (a1, b1, a1.inverse(), b1.inverse(), a2, b2, a2.inverse(), b2.inverse()):
        out = m @ out
    return out


def defect_of(m: RenormalizedMatrix) -> float:
    if m.log_scale > 700:
        return math.inf
    return float(np.abs(m.to_array() - np.eye(2)).max())


@dataclass(frozen=True, eq=False)
class Representation:
    gens: tuple
    t: float
    defect: float
    precision: str = "double"
    roundoff_floor: float = 0.0  # rounding bound for the word in double precision
    dps: int = 16

    def named(self) -> dict:
        return dict(zip(("a1", "b1", "a2", "b2"), self.gens))


_U = 2.0**-53


def roundoff_floor(mats) -> float:
    """Pessimistic bound, u * prod |letter|, on the rounding error of the
    relation word evaluated in double precision."""
    logs = sum(2 * (m.log_scale + math.log(2 * m.max_entry)) for m in mats)
    return _U * math.exp(min(logs, 700.0))


def _relation_defect_mp(mats_mp, dps: int) -> float:
    from .hiprec import _matmul, identity, inverse, max_abs_minus_identity, precision_context

    a1, b1, a2, b2 = mats_mp
    with precision_context(dps):
        out = identity()
        for m in (a1, b1, inverse(a1), inverse(b1), a2, b2, inverse(a2), inverse(b2)):
            out = _matmul(m, out)
        return max_abs_minus_identity(out)


def representation(curve: HyperellipticCurve, A: SlTwoSystem, t: float, gens: SurfaceGroupGenerators,
                   tol: float = 1e-8, step_tol: float | None = None, check: bool = True,
                   precision: str = "auto", dps: int | None = None) -> Representation:
    """Monodromy of the four generators and the relation-word defect.

    ``precision``: "double" (sixth-order Magnus), "mp" (Taylor series in
    multiprecision) or "auto", which switches to multiprecision when the
    double-precision rounding bound for the word exceeds tol / 100.
    """
    if precision not in ("auto", "double", "mp"):
        raise ValueError("precision must be auto, double or mp")
    # the relation word amplifies step errors by roughly the generator norms
    step_tol = tol * 1e-4 if step_tol is None else step_tol
    mats = tuple(transfer_matrix(curve, A, t, loop, tol=step_tol) for loop in gens.loops)
    floor = roundoff_floor(mats)
    if precision == "double" or (precision == "auto" and floor <= tol / 100):
        defect = defect_of(relation_monodromy(list(mats)))
        rep = Representation(mats, t, defect, "double", floor)
    else:
        from .hiprec import to_numpy, transfer_matrix_mp

        if dps is None:
            dps = max(30, int(math.ceil(math.log10(max(floor, _U) / _U) - math.log10(tol))) + 8)
        mp = [transfer_matrix_mp(curve, A, t, loop, dps=dps) for loop in gens.loops]
        defect = _relation_defect_mp(mp, dps)
        mats = tuple(RenormalizedMatrix(*to_numpy(m)) for m in mp)
        rep = Representation(mats, t, defect, "mp", floor, dps)
    if check and rep.defect > tol:
        raise RelationViolation(f"relation-word defect {rep.defect:.3e} exceeds {tol:.1e}")
    return rep


# ---------------------------------------------------------------------------
# diagonal model system


def _as_function(samples, matrix: bool) -> Callable:
    if callable(samples):
        return samples
    arr = np.asarray(samples, dtype=complex)
    if matrix and arr.shape == (2, 2):
        return lambda s: np.broadcast_to(arr, np.shape(s) + (2, 2))
    if not matrix and arr.ndim == 0:
        return lambda s: np.full(np.shape(s), complex(arr))
    grid = np.linspace(0.0, 1.0, arr.shape[0])
    spline = CubicSpline(grid, arr, axis=0)
    return lambda s: spline(np.asarray(s))


def wkb_model_ode(B, a, t: float, tol: float = 1e-10,
                  info: PropagationInfo | None = None) -> RenormalizedMatrix:
    """f(1) for f' + (B(s) + t diag(a(s), -a(s))) f = 0, f(0) = I.

    ``B`` is a callable s -> (n, 2, 2), a constant 2x2 matrix, or samples on
    a uniform grid of [0, 1] (interpolated by cubic splines); ``a`` likewise.
    """
    bf = _as_function(B, True)
    af = _as_function(a, False)

    def coef(s):
        av = t * af(s)
        d = np.array(bf(s), dtype=complex)
        d[..., 0, 0] += av
        d[..., 1, 1] -= av
        return -d

    return propagate(coef, tol=tol, info=info)


def dominant_corner(a_mean: complex) -> tuple[int, int]:
    """Corner carrying the growth: (1, 1) for Re a > 0, (0, 0) for Re a < 0."""
    return (1, 1) if a_mean.real > 0 else (0, 0)


def corner_deviation(M: RenormalizedMatrix, corner: tuple[int, int]) -> float:
    """Largest entry of M / M[corner] outside the corner."""
    m = M.m / M.m[corner]
    mask = np.ones((2, 2), dtype=bool)
    mask[corner] = False
    return float(np.abs(m[mask]).max())


def log_norm(M: RenormalizedMatrix) -> float:
    return M.log_scale + math.log(np.linalg.norm(M.m, 2))
