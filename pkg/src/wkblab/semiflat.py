"""Spectral-curve periods and their scaling laws, the linear-algebra identity
behind the scaling action on cotangent spaces, and the model Kaehler metric
of the product of hyperbolic strips with its holomorphic sectional curvature.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .curve import Arc, HyperellipticCurve, Line, PathOnCurve
from .differentials import QuadraticDifferential
from .errors import (NotPositiveDefinite, OutsideDomain, PathTooClose, StencilOutsideDomain,
                     ZeroCollision)

# ---------------------------------------------------------------------------
# spectral periods


@dataclass(frozen=True, eq=False)
class SpectralPeriodSet:
    phi: QuadraticDifferential
    cycles: tuple
    periods: np.ndarray
    est_error: float


def check_simple_zeros(phi: QuadraticDifferential, tol: float = 1e-6) -> np.ndarray:
    """Zeros of phi in the x-plane; rejects collisions (outside the simple-zero locus)."""
    z = phi.zeros()
    curve = phi.curve
    if phi.is_zero():
        raise ZeroCollision("phi vanishes identically")
    if len(z) == 2 and abs(z[0] - z[1]) < tol:
        raise ZeroCollision("phi has a double zero")
    if len(z) and np.abs(z[:, None] - curve.branch_points[None, :]).min() < tol:
        raise ZeroCollision("a zero of phi collides with a branch point")
    if curve.degree == 6 and len(z) < 2 or curve.degree == 5 and len(z) < 1:
        raise ZeroCollision("phi has a multiple zero at infinity")
    return z


def critical_points(phi: QuadraticDifferential) -> np.ndarray:
    """Zeros of phi together with the branch points: the branch locus of sqrt(phi)."""
    return np.concatenate([phi.zeros(), phi.curve.branch_points])


def pair_cycle(phi: QuadraticDifferential, a: complex, b: complex, radius: float | None = None,
               start_sheet: int = 1) -> PathOnCurve:
    """Counterclockwise stadium around the segment [a, b].

    With a and b two critical points and no others inside, sqrt(phi) returns
    to its starting branch, so the loop lifts to a closed cycle on the
    spectral cover; ``start_sheet`` = -1 gives its image under the involution.
    """
    a, b = complex(a), complex(b)
    seg = Line(a, b)
    others = [c for c in critical_points(phi) if min(abs(c - a), abs(c - b)) > 1e-9]
    if radius is None:
        near = min((seg.distance_to(complex(c)) for c in others), default=abs(b - a))
        radius = 0.4 * min(near, abs(b - a))
    d = (b - a) / abs(b - a)
    al = math.atan2(d.imag, d.real)
    n = 1j * d * radius
    segs = (Line(a - n, b - n), Arc(b, radius, al - math.pi / 2, al + math.pi / 2),
            Line(b + n, a + n), Arc(a, radius, al + math.pi / 2, al + 3 * math.pi / 2))
    path = PathOnCurve(segs, start_sheet, closed=True)
    if others and path.clearance(np.array(others)) < 0.5 * radius:
        raise PathTooClose("another critical point lies too close to the pair")
    return path


def default_cycles(phi: QuadraticDifferential, max_cycles: int = 4) -> list[PathOnCurve]:
    """Stadium cycles around nearest-neighbour pairs of critical points.

    Pairs are taken greedily by distance; pairs whose stadium would come
    too close to a third point are skipped.
    """
    pts = critical_points(phi)
    d = np.abs(pts[:, None] - pts[None, :])
    pairs = sorted((float(d[i, j]), i, j) for i in range(len(pts)) for j in range(i + 1, len(pts)))
    used: set[int] = set()
    out = []
    for _, i, j in pairs:
        if i in used or j in used:
            continue
        try:
            out.append(pair_cycle(phi, pts[i], pts[j]))
        except PathTooClose:
            continue
        used.update((i, j))
        if len(out) == max_cycles:
            break
    return out


def _segment_period(phi: QuadraticDifferential, seg, ref: complex, n_panels: int, n_gauss: int = 16):
    xg, wg = np.polynomial.legendre.leggauss(n_gauss)
    edges = np.linspace(0.0, 1.0, n_panels + 1)
    u = (0.5 * (edges[1:, None] - edges[:-1, None]) * xg[None, :]
         + 0.5 * (edges[1:, None] + edges[:-1, None])).ravel()
    w = (0.5 * (edges[1:, None] - edges[:-1, None]) * wg[None, :]).ravel()
    u = np.concatenate([[0.0], u, [1.0]])
    x = seg.point(u)
    vals = np.sqrt(phi.numerator(x) / phi.curve.p(x))
    # continuous branch along the segment
    out = np.empty_like(vals)
    prev = ref
    for j, v in enumerate(vals):
        out[j] = v if (v * np.conj(prev)).real >= 0 else -v
        prev = out[j]
    dens = out[1:-1] * seg.deriv(u[1:-1])
    return complex(np.sum(w * dens)), complex(out[-1])


def cycle_period(phi: QuadraticDifferential, path: PathOnCurve, n_panels: int = 64) -> complex:
    """Integral of sqrt(phi) along the path on the spectral cover.

    The branch of sqrt(q/p) at the start is the principal one times
    ``path.start_sheet``; it is continued along the path.
    """
    ref = complex(path.start_sheet * np.sqrt(phi.numerator(path.start) / phi.curve.p(path.start)))
    total = 0j
    for seg in path.segments:
        # panels fine enough for the nearest-root continuation
        n = max(n_panels, int(math.ceil(n_panels * seg.length)))
        val, ref = _segment_period(phi, seg, ref, n)
        total += val
    return total


def spectral_periods(curve: HyperellipticCurve, phi: QuadraticDifferential, cycles, tol: float = 1e-12,
                     zero_tol: float = 1e-6) -> SpectralPeriodSet:
    zeros = check_simple_zeros(phi, zero_tol)
    bad = np.concatenate([zeros, curve.branch_points])
    for c in cycles:
        if c.clearance(bad) < zero_tol:
            raise PathTooClose("cycle passes through a zero of phi or a branch point")
    n = 32
    prev = np.array([cycle_period(phi, c, n) for c in cycles])
    for _ in range(8):
        n *= 2
        cur = np.array([cycle_period(phi, c, n) for c in cycles])
        err = float(np.abs(cur - prev).max()) if len(cycles) else 0.0
        if err <= tol * max(1.0, float(np.abs(cur).max()) if len(cycles) else 1.0):
            return SpectralPeriodSet(phi, tuple(cycles), cur, err)
        prev = cur
    return SpectralPeriodSet(phi, tuple(cycles), cur, err)


def trapezoid_period(phi: QuadraticDifferential, path: PathOnCurve, n: int = 100_000) -> complex:
    """Brute-force composite trapezoid rule; an independent cross-check."""
    ref = complex(path.start_sheet * np.sqrt(phi.numerator(path.start) / phi.curve.p(path.start)))
    total = 0j
    for seg in path.segments:
        u = np.linspace(0.0, 1.0, n + 1)
        vals = np.sqrt(phi.numerator(seg.point(u)) / phi.curve.p(seg.point(u)))
        signs = np.where((vals[1:] * np.conj(vals[:-1])).real >= 0, 1.0, -1.0)
        first = 1.0 if (vals[0] * np.conj(ref)).real >= 0 else -1.0
        vals = vals * np.concatenate([[first], first * np.cumprod(signs)])
        f = vals * seg.deriv(u)
        total += complex(np.sum(0.5 * (f[1:] + f[:-1])) / n)
        ref = complex(vals[-1])
    return total


def period_jacobian(curve, phi: QuadraticDifferential, cycles, h: float = 1e-3) -> np.ndarray:
    """d(period_i)/d(q_j) by a fourth-order central stencil (periods are
    holomorphic in the coefficients, so one real direction suffices)."""
    q = phi.coeffs
    hs = h  # absolute step, so the scaling check is not homogeneous by construction
    cols = []
    for j in range(3):
        e = np.zeros(3, dtype=complex)
        e[j] = hs
        vals = {}
        for k in (-2, -1, 1, 2):
            vals[k] = np.array([cycle_period(QuadraticDifferential(curve, q + k * e), c, 256) for c in cycles])
        cols.append((-vals[2] + 8 * vals[1] - 8 * vals[-1] + vals[-2]) / (12 * hs))
    return np.array(cols).T


@dataclass
class ConicReport:
    t_list: list
    ratios: list  # form(t phi)[t v] / form(phi)[v]
    max_rel_error: float
    euler_error: float
    ray_error: float


def conic_scaling_check(curve, phi: QuadraticDifferential, cycles, t_list, seed: int = 0,
                        n_dirs: int = 5, h: float = 1e-3) -> ConicReport:
    """Scaling of the period-induced Hermitian form under phi -> t phi.

    The form is H_phi(v) = sum_i |dZ_i(phi)[v]|^2.  Pulling back along
    phi -> t phi (tangent vectors scale by t) must multiply it by t.
    """
    rng = np.random.default_rng(seed)
    dirs = rng.standard_normal((n_dirs, 3)) + 1j * rng.standard_normal((n_dirs, 3))
    J1 = period_jacobian(curve, phi, cycles, h)
    base = np.sum(np.abs(dirs @ J1.T) ** 2, axis=1)
    ratios = []
    worst = 0.0
    for t in t_list:
        Jt = period_jacobian(curve, phi.scaled(t), cycles, h)
        val = np.sum(np.abs((t * dirs) @ Jt.T) ** 2, axis=1)
        r = val / base
        ratios.append([float(x) for x in r])
        worst = max(worst, float(np.abs(r / t - 1).max()))
    Z = np.array([cycle_period(phi, c, 256) for c in cycles])
    # homogeneity of degree 1/2: dZ(phi)[phi] = Z / 2
    euler = float(np.abs(J1 @ phi.coeffs - 0.5 * Z).max() / max(1e-300, np.abs(Z).max()))
    # along the ray the form is |Z|^2 / 4 at every scale
    ray = 0.0
    for t in t_list:
        Jt = period_jacobian(curve, phi.scaled(t), cycles, h)
        lhs = np.sum(np.abs(Jt @ (t * phi.coeffs)) ** 2)
        ray = max(ray, abs(lhs / (t * np.sum(np.abs(0.5 * Z) ** 2)) - 1))
    return ConicReport(list(t_list), ratios, worst, euler, float(ray))


# ---------------------------------------------------------------------------
# scaling action on T*V


def scaling_action_check(n: int, g, t: float, a=None) -> float:
    """max |b^* g'_sf - t g_sf| for b(v, p) = (a v, t (a^-1)^* p), g' = t a^-H g a^-1.

    g_sf is the product of g on V and the dual metric on V*; in coordinates
    where p is a column vector the dual metric matrix is conj(g^-1).
    """
    g = np.asarray(g, dtype=complex).reshape(n, n)
    if np.abs(g - g.conj().T).max() > 1e-12 * max(1.0, np.abs(g).max()):
        raise NotPositiveDefinite("g is not Hermitian")
    try:
        np.linalg.cholesky(g)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite("g is not positive definite") from exc
    if t <= 0:
        raise ValueError("t must be positive")
    a = np.eye(n, dtype=complex) if a is None else np.asarray(a, dtype=complex)
    ai = np.linalg.inv(a)
    g2 = t * ai.conj().T @ g @ ai

    def sf(m):
        out = np.zeros((2 * n, 2 * n), dtype=complex)
        out[:n, :n] = m
        out[n:, n:] = np.linalg.inv(m).conj()
        return out

    b = np.zeros((2 * n, 2 * n), dtype=complex)
    b[:n, :n] = a
    b[n:, n:] = t * ai.T
    pulled = b.conj().T @ sf(g2) @ b
    target = t * sf(g)
    return float(np.abs(pulled - target).max() / max(1.0, np.abs(target).max()))


def random_hermitian_pd(n: int, rng: np.random.Generator) -> np.ndarray:
    m = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return m @ m.conj().T + 0.5 * np.eye(n)


# ---------------------------------------------------------------------------
# model metric on T*R^n


HALF_PI = math.pi / 2


def model_potential(X: np.ndarray) -> np.ndarray:
    """-sum log cos over the real parts of the holomorphic coordinates.

    ``X`` has shape (..., 4n): real parts of (u, v) followed by imaginary
    parts; only the first 2n entries enter.
    """
    m = X.shape[-1] // 2
    return -np.sum(np.log(np.cos(X[..., :m])), axis=-1)


def to_holomorphic(z, w) -> np.ndarray:
    """(z, w) in C^n x C^n -> (u, v) with u = Re z + i Re w, v = Im z + i Im w."""
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    return np.concatenate([z.real + 1j * w.real, z.imag + 1j * w.imag])


_D1 = {-2: 1 / 12, -1: -8 / 12, 1: 8 / 12, 2: -1 / 12}
_D2 = {-2: -1 / 12, -1: 16 / 12, 0: -30 / 12, 1: 16 / 12, 2: -1 / 12}


def _check_domain(zeta: np.ndarray, reach: float, margin: float = 0.0) -> None:
    if np.abs(zeta.real).max() + reach >= HALF_PI - margin:
        raise StencilOutsideDomain("finite-difference stencil leaves the strip domain")


def potential_hessian(zeta: np.ndarray, h: float = 1e-3, potential=model_potential) -> np.ndarray:
    """G[a, b] = d_a dbar_b of the potential at zeta, fourth-order stencils."""
    m = len(zeta)
    X0 = np.concatenate([zeta.real, zeta.imag])
    dim = 2 * m
    _check_domain(zeta, 2 * h)
    H = np.empty((dim, dim))
    f0 = potential(X0)
    for i in range(dim):
        # diagonal
        pts = np.array([X0 + k * h * np.eye(dim)[i] for k in _D2])
        H[i, i] = np.dot(list(_D2.values()), potential(pts)) / h**2
    for i, j in itertools.combinations(range(dim), 2):
        acc = 0.0
        pts, wts = [], []
        for ki, ci in _D1.items():
            for kj, cj in _D1.items():
                pts.append(X0 + h * (ki * np.eye(dim)[i] + kj * np.eye(dim)[j]))
                wts.append(ci * cj)
        acc = np.dot(wts, potential(np.array(pts))) / h**2
        H[i, j] = H[j, i] = acc
    del f0
    Hxx = H[:m, :m]
    Hyy = H[m:, m:]
    Hxy = H[:m, m:]
    return 0.25 * ((Hxx + Hyy) + 1j * (Hxy - Hxy.T))


_NORMALIZATION: dict[int, float] = {}


def normalization(n: int) -> float:
    """Global constant fixed once at the origin so that the metric there is the identity."""
    if n not in _NORMALIZATION:
        G0 = potential_hessian(np.zeros(2 * n, dtype=complex))
        _NORMALIZATION[n] = float(1.0 / G0[0, 0].real)
    return _NORMALIZATION[n]


@dataclass(frozen=True, eq=False)
class ModelMetricProbe:
    n: int
    point: np.ndarray  # holomorphic coordinates (u_1..u_n, v_1..v_n)
    metric: np.ndarray
    curvature_samples: tuple = ()


def model_metric(n: int, point=None, z=None, w=None, margin: float = 1e-2, h: float = 1e-3) -> ModelMetricProbe:
    """Metric of i d dbar (phi_0 o pi) at a point of T*R^n.

    The point is given either in holomorphic coordinates (u, v) or as
    (z, w) in C^n x C^n.
    """
    if point is None:
        point = to_holomorphic(np.zeros(n) if z is None else z, np.zeros(n) if w is None else w)
    zeta = np.asarray(point, dtype=complex)
    if zeta.shape != (2 * n,):
        raise ValueError(f"point must have {2 * n} holomorphic coordinates")
    if np.abs(zeta.real).max() >= HALF_PI - margin:
        raise OutsideDomain("point is outside the cube (|Re z_k|, |Im z_k| < pi/2)")
    G = normalization(n) * potential_hessian(zeta, h)
    return ModelMetricProbe(n, zeta, G)


def exact_model_metric(zeta: np.ndarray) -> np.ndarray:
    return np.diag(1.0 / np.cos(zeta.real) ** 2).astype(complex)


def holo_sectional_curvature(n: int, point, direction, h: float = 1e-3, hw: float = 1e-2,
                             metric_fn=None) -> float:
    """Holomorphic sectional curvature of the model metric along ``direction``.

    Normalized so that each hyperbolic factor has curvature -1:
    K = 2 R(xi, xi_bar, xi, xi_bar) / g(xi, xi_bar)^2 with
    R = -d_w dbar_w g(xi, xi_bar) + V^H (G^T)^-1 V, V = d_w (G^T xi),
    derivatives taken along the complex line point + w xi.
    """
    zeta = np.asarray(point, dtype=complex)
    xi = np.asarray(direction, dtype=complex)
    if not np.any(xi):
        raise ValueError("direction must be nonzero")
    xi = xi / np.linalg.norm(xi)
    if metric_fn is None:
        c = normalization(n)
        metric_fn = lambda p: c * potential_hessian(p, h)
    _check_domain(zeta, 2 * hw * np.abs(xi).max() + 2 * h)
    Gs = {}
    for ks in range(-2, 3):
        for kr in range(-2, 3):
            if ks != 0 and kr != 0:
                continue
            Gs[(ks, kr)] = metric_fn(zeta + (ks + 1j * kr) * hw * xi)
    G0 = Gs[(0, 0)]
    norm2 = float((xi @ G0 @ xi.conj()).real)

    def gxx(G):
        return xi @ G @ xi.conj()

    lap = sum(c * (gxx(Gs[(k, 0)]) + gxx(Gs[(0, k)])) for k, c in _D2.items()) / hw**2
    ddbar = 0.25 * lap
    ds = sum(c * (Gs[(k, 0)].T @ xi) for k, c in _D1.items()) / hw
    dr = sum(c * (Gs[(0, k)].T @ xi) for k, c in _D1.items()) / hw
    V = 0.5 * (ds - 1j * dr)
    R = -ddbar + V.conj() @ np.linalg.solve(G0.T, V)
    return float(2 * R.real / norm2**2)


def product_curvature(point, direction) -> float:
    """Closed form for the product of hyperbolic strips: -sum g_j^2 |xi_j|^4 / (sum g_j |xi_j|^2)^2."""
    zeta = np.asarray(point, dtype=complex)
    xi = np.asarray(direction, dtype=complex)
    g = 1.0 / np.cos(zeta.real) ** 2
    a = g * np.abs(xi) ** 2
    return float(-np.sum(a * a) / np.sum(a) ** 2)


def kahler_defect(n: int, point, h: float = 1e-3, hd: float = 1e-2) -> float:
    """max |d_c g_{a bbar} - d_a g_{c bbar}|: vanishes for a closed Kaehler form."""
    zeta = np.asarray(point, dtype=complex)
    m = 2 * n
    c = normalization(n)
    dG = []
    for k in range(m):
        e = np.zeros(m, dtype=complex)
        e[k] = 1.0
        ds = sum(cf * c * potential_hessian(zeta + s * hd * e, h) for s, cf in _D1.items()) / hd
        dr = sum(cf * c * potential_hessian(zeta + 1j * s * hd * e, h) for s, cf in _D1.items()) / hd
        dG.append(0.5 * (ds - 1j * dr))
    dG = np.array(dG)  # dG[c, a, b] = d_c G[a, b]
    return float(np.abs(dG - dG.transpose(1, 0, 2)).max())
