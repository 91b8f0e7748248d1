"""Multiprecision parallel transport by Taylor series.

The relation word of the surface group multiplies eight transports whose
norms grow like exp(t * const); its evaluation in double precision loses
roughly eps * |a1| |b1| |a1^-1| ... digits, which at moderate t already
exceeds 1e-8.  Here each path segment is stepped with Taylor series of
the coefficient matrix, computed in gmpy2 multiprecision: x(s), p(x(s)),
y = sqrt(p) and 1/y are built by power-series recurrences, so the branch
of y is continued analytically and no sheet tracking is needed.

Step sizes are a fixed fraction of the distance, in the complexified path
parameter, to the nearest branch point, which bounds the series' radius
of convergence from below.
"""
from __future__ import annotations

import cmath
import math

import gmpy2
import numpy as np
from gmpy2 import mpc, mpfr

from .curve import Arc, HyperellipticCurve, Line, PathOnCurve
from .differentials import SlTwoSystem
from .errors import NumericalError, PathTooClose

Mat = list  # [[a, b], [c, d]] of mpc


def _series_mul(a: list, b: list, n: int) -> list:
    return [sum((a[j] * b[k - j] for j in range(k + 1)), mpc(0)) for k in range(n)]


def _series_sqrt(p: list, y0, n: int) -> list:
    y = [y0] + [mpc(0)] * (n - 1)
    inv2 = 1 / (2 * y0)
    for k in range(1, n):
        s = sum((y[j] * y[k - j] for j in range(1, k)), mpc(0))
        y[k] = (p[k] - s) * inv2
    return y


def _series_recip(y: list, n: int) -> list:
    r = [1 / y[0]] + [mpc(0)] * (n - 1)
    for k in range(1, n):
        r[k] = -r[0] * sum((y[j] * r[k - j] for j in range(1, k + 1)), mpc(0))
    return r


def _matmul(a: Mat, b: Mat) -> Mat:
    return [[a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
            [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]]]


def identity() -> Mat:
    return [[mpc(1), mpc(0)], [mpc(0), mpc(1)]]


def inverse(m: Mat) -> Mat:
    det = m[0][0] * m[1][1] - m[0][1] * m[1][0]
    return [[m[1][1] / det, -m[0][1] / det], [-m[1][0] / det, m[0][0] / det]]


def to_numpy(m: Mat) -> tuple[np.ndarray, float]:
    """(matrix with max-entry 1, log scale) in double precision."""
    big = max(abs(v) for row in m for v in row)
    if big == 0:
        return np.zeros((2, 2), dtype=complex), -math.inf
    arr = np.array([[complex(v / big) for v in row] for row in m])
    return arr, float(gmpy2.log(big))


def precision_context(dps: int):
    """gmpy2 context with ``dps`` decimal digits plus guard bits."""
    ctx = gmpy2.get_context().copy()
    ctx.precision = int(dps * 3.33) + 16
    return gmpy2.context(ctx)


def max_abs_minus_identity(m: Mat) -> float:
    eye = identity()
    return float(max(abs(m[i][j] - eye[i][j]) for i in range(2) for j in range(2)))


class _Segment:
    """Taylor data of x(u) on one segment, in multiprecision.

    Segments are chained: each starts at the exact multiprecision end point
    of its predecessor, so the path has no roundoff-sized gaps.
    """

    def __init__(self, seg, x_start):
        self.seg = seg
        self.x_start = x_start
        if isinstance(seg, Line):
            self.kind = "line"
            self.d = mpc(seg.z1) - x_start
        elif isinstance(seg, Arc):
            self.kind = "arc"
            self.c = mpc(seg.center)
            self.w0 = x_start - self.c
            self.dth = mpfr(seg.theta1) - mpfr(seg.theta0)
        else:
            raise TypeError(f"unsupported segment {type(seg).__name__}")

    def point(self, u):
        if self.kind == "line":
            return self.x_start + u * self.d
        return self.c + self.w0 * gmpy2.exp(mpc(0, 1) * u * self.dth)

    def series(self, u0, h, n: int):
        """Coefficients of x(u0 + h s) and h x'(u0 + h s) in s."""
        if self.kind == "line":
            x = [self.point(u0), self.d * h] + [mpc(0)] * (n - 2)
            dx = [self.d * h] + [mpc(0)] * (n - 1)
            return x[:n], dx
        w = self.point(u0) - self.c
        lam = mpc(0, 1) * self.dth * h
        x = [self.c + w]
        term = w
        dx = []
        for k in range(1, n + 1):
            dx.append(term * lam)  # k x_k = lam x_{k-1}
            term = term * lam / k
            if k < n:
                x.append(term)
        return x, dx

    def singular_distance(self, u0: float, branch_points) -> float:
        """Distance in the complex u-plane from u0 to the nearest branch point."""
        seg = self.seg
        best = math.inf
        if self.kind == "line":
            d = complex(seg.z1 - seg.z0)
            x0 = complex(seg.point(u0))
            for e in branch_points:
                best = min(best, abs((complex(e) - x0) / d))
            return best
        dth = seg.theta1 - seg.theta0
        w0 = complex(seg.point(u0)) - seg.center
        for e in branch_points:
            ratio = (complex(e) - seg.center) / w0
            if ratio == 0:
                continue
            base = -1j * cmath.log(ratio)
            for k in range(-3, 4):
                best = min(best, abs((base + 2 * math.pi * k) / dth))
        return best


def _p_series(curve: HyperellipticCurve, x: list, n: int) -> list:
    out = [mpc(curve.p_coeffs[0])] + [mpc(0)] * (n - 1)
    for e in curve.branch_points:
        fac = [x[0] - mpc(e)] + x[1:]
        out = _series_mul(out, fac, n)
    return out


def transfer_matrix_mp(curve: HyperellipticCurve, A: SlTwoSystem, t: float, path: PathOnCurve,
                       dps: int = 40, fraction: float = 0.2, max_terms: int = 400) -> Mat:
    """Transport of dF + t A F = 0 along ``path`` in ``dps`` decimal digits."""
    if path.clearance(curve.branch_points) < 1e-9:
        raise PathTooClose("path passes through a branch point")
    with precision_context(dps):
        tol = mpfr(10) ** (-dps - 2)
        coeffs = [[mpc(complex(v)) for v in row] for row in A.coeffs]  # alpha, beta, gamma
        tt = mpfr(t)
        total = identity()
        if t == 0 or not np.any(A.coeffs):
            return total
        y = path.start_sheet * gmpy2.sqrt(_p_series(curve, [mpc(path.start)], 1)[0])
        y = mpc(y)
        # principal branch as in double precision
        yd = complex(path.start_sheet * curve.y_principal(path.start))
        if abs(complex(y) - yd) > abs(complex(y) + yd):
            y = -y
        x_cur = mpc(path.start)
        one = mpfr(1)
        for seg in path.segments:
            sd = _Segment(seg, x_cur)
            u = mpfr(0)
            while u < one:
                R = sd.singular_distance(float(u), curve.branch_points)
                h = min(mpfr(fraction * R), one - u)
                while True:
                    # terms decay at least like (h / R)^k
                    n_terms = int(math.ceil((dps + 4) / -math.log10(float(h) / R))) + 2
                    n_terms = min(max(n_terms, 8), max_terms)
                    step, y_end, ok = _taylor_step(curve, coeffs, tt, sd, u, h, y, n_terms, tol)
                    if ok:
                        break
                    h /= 2  # growth of the solution dominates the series
                    if h < 1e-12:
                        raise NumericalError("multiprecision step size underflow")
                total = _matmul(step, total)
                y = y_end
                u = u + h
            x_cur = sd.point(one)
        return total


def _taylor_step(curve, coeffs, tt, sd: _Segment, u0, h, y0, n: int, tol):
    x, hdx = sd.series(u0, h, n)
    p = _p_series(curve, x, n)
    y = _series_sqrt(p, y0, n)
    r = _series_recip(y, n)
    g = _series_mul(hdx, r, n)  # h x'(s) / y(s)
    lin = []
    for a0, a1 in coeffs:
        lin.append([a0 + a1 * x[0]] + [a1 * xk for xk in x[1:]])
    al, be, ga = (_series_mul(l, g, n) for l in lin)
    K = [[[-tt * al[k], -tt * be[k]], [-tt * ga[k], tt * al[k]]] for k in range(n)]
    F = [identity()]
    for k in range(n - 1):
        acc = [[mpc(0), mpc(0)], [mpc(0), mpc(0)]]
        for j in range(k + 1):
            m = _matmul(K[j], F[k - j])
            for i in range(2):
                for l in range(2):
                    acc[i][l] += m[i][l]
        F.append([[v / (k + 1) for v in row] for row in acc])
    step = [[sum((Fk[i][l] for Fk in F), mpc(0)) for l in range(2)] for i in range(2)]
    scale = max(abs(v) for row in step for v in row)
    tail = max(abs(v) for Fk in F[-3:] for row in Fk for v in row)
    y_end = sum(y, mpc(0))
    return step, y_end, tail <= tol * max(scale, mpfr(1))
